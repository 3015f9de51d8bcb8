#pragma once

#include <map>
#include <string>

#include "dds/error.hpp"

namespace dds {

// Flat key-value run configuration: one `key = value` per line, '#' starts a
// comment. Values must be single-line; round-trips losslessly. A copy is
// written next to every command's outputs for provenance.
using RunConfig = std::map<std::string, std::string>;

RunConfig parse_config_text(const std::string& text);
std::string render_config_text(const RunConfig& config);

RunConfig read_config_file(const std::string& path);
void write_config_file(const std::string& path, const RunConfig& config);

// Typed lookups with defaults; malformed values raise config errors naming
// the key.
double config_double(const RunConfig& c, const std::string& key, double fallback);
long config_long(const RunConfig& c, const std::string& key, long fallback);
bool config_bool(const RunConfig& c, const std::string& key, bool fallback);
std::string config_string(const RunConfig& c, const std::string& key, std::string fallback);

}  // namespace dds
