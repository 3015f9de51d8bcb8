#include "dds/run_config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dds {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCategory::Config,
                  "config line " + std::to_string(line_no) + " is not `key = value`: " + stripped);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCategory::Config, "config line " + std::to_string(line_no) + " has no key");
    out[key] = value;
  }
  return out;
}

std::string render_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [key, value] : config) {
    out += key;
    out += " = ";
    out += value;
    out.push_back('\n');
  }
  return out;
}

RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void write_config_file(const std::string& path, const RunConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::Io, "cannot write config file " + path);
  out << render_config_text(config);
}

double config_double(const RunConfig& c, const std::string& key, double fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  double v = 0.0;
  const char* begin = it->second.data();
  const char* end = begin + it->second.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCategory::Config, "config key " + key + " is not a number: " + it->second);
  return v;
}

long config_long(const RunConfig& c, const std::string& key, long fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  long v = 0;
  const char* begin = it->second.data();
  const char* end = begin + it->second.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCategory::Config, "config key " + key + " is not an integer: " + it->second);
  return v;
}

bool config_bool(const RunConfig& c, const std::string& key, bool fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw Error(ErrorCategory::Config, "config key " + key + " is not a boolean: " + it->second);
}

std::string config_string(const RunConfig& c, const std::string& key, std::string fallback) {
  const auto it = c.find(key);
  return it == c.end() ? std::move(fallback) : it->second;
}

}  // namespace dds
