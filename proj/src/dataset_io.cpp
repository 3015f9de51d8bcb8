#include "dds/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace dds {

using nlohmann::json;

namespace {

constexpr const char* kDatasetSchema = "dds-dataset-v1";
constexpr const char* kReportSchema = "dds-train-report-v1";

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-identical reruns
  if (!out) throw Error(ErrorCategory::Io, "cannot write " + path);
  return out;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Data, path + " is not valid JSON: " + e.what());
  }
  return j;
}

json metric_or_null(double v) { return std::isnan(v) ? json() : json(v); }

double metric_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j[key].get<double>();
}

json params_to_json(const BehaviorParams& p) {
  return json{{"a1", p.a1},           {"a2", p.a2},   {"b1", p.b1},
              {"b2", p.b2},           {"lambda0", p.lambda0}, {"beta0", p.beta0}};
}

BehaviorParams params_from_json(const json& j) {
  BehaviorParams p;
  p.a1 = j.at("a1").get<double>();
  p.a2 = j.at("a2").get<double>();
  p.b1 = j.at("b1").get<double>();
  p.b2 = j.at("b2").get<double>();
  p.lambda0 = j.at("lambda0").get<double>();
  p.beta0 = j.at("beta0").get<double>();
  return p;
}

json metrics_to_json(const SplitMetrics& m) {
  return json{{"loss", metric_or_null(m.loss)},
              {"decision_acc", metric_or_null(m.decision_accuracy)},
              {"stop_exact", metric_or_null(m.stop_exact)},
              {"stop_mae", metric_or_null(m.stop_mae)},
              {"lambda_err", metric_or_null(m.lambda_error)},
              {"beta_err", metric_or_null(m.beta_error)}};
}

SplitMetrics metrics_from_json(const json& j) {
  SplitMetrics m;
  m.loss = metric_from(j, "loss");
  m.decision_accuracy = metric_from(j, "decision_acc");
  m.stop_exact = metric_from(j, "stop_exact");
  m.stop_mae = metric_from(j, "stop_mae");
  m.lambda_error = metric_from(j, "lambda_err");
  m.beta_error = metric_from(j, "beta_err");
  return m;
}

void append_metric_cell(std::string& line, double v) {
  line.push_back(',');
  if (!std::isnan(v)) line += format_double(v);
}

void append_split_row(std::string& out, int epoch, const char* split, const SplitMetrics& m) {
  std::string line = std::to_string(epoch);
  line.push_back(',');
  line += split;
  append_metric_cell(line, m.loss);
  append_metric_cell(line, m.decision_accuracy);
  append_metric_cell(line, m.stop_exact);
  append_metric_cell(line, m.stop_mae);
  append_metric_cell(line, m.lambda_error);
  append_metric_cell(line, m.beta_error);
  out += line;
  out.push_back('\n');
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error(ErrorCategory::Internal, "double formatting failed");
  return std::string(buf, ptr);
}

void write_dataset(const std::string& dir, const DriverDataset& dataset,
                   const std::map<std::string, std::string>& config_echo) {
  dataset.history.validate();
  ensure_dir(dir);

  json meta{{"schema", kDatasetSchema},
            {"driver_id", dataset.driver_id},
            {"days", dataset.history.days()},
            {"width", dataset.history.width()},
            {"pad_value", dataset.pad_value},
            {"split_index", dataset.split_index},
            {"config", json(config_echo)}};
  open_out(dir + "/meta.json") << meta.dump(2) << '\n';

  std::string csv = "day_index,slot,utility,label\n";
  for (Eigen::Index d = 0; d < dataset.history.days(); ++d)
    for (Eigen::Index t = 0; t < dataset.history.width(); ++t) {
      csv += std::to_string(d + 1);
      csv.push_back(',');
      csv += std::to_string(t + 1);
      csv.push_back(',');
      csv += format_double(dataset.history.utilities(d, t));
      csv.push_back(',');
      csv += std::to_string(dataset.history.labels(d, t));
      csv.push_back('\n');
    }
  open_out(dir + "/days.csv") << csv;
}

DriverDataset read_dataset(const std::string& dir, DatasetMeta* meta_out) {
  const json meta = load_json(dir + "/meta.json");
  if (meta.value("schema", "") != kDatasetSchema)
    throw Error(ErrorCategory::Data, dir + "/meta.json has an unexpected schema tag");

  DriverDataset out;
  out.driver_id = meta.at("driver_id").get<std::string>();
  const auto days = meta.at("days").get<Eigen::Index>();
  const auto width = meta.at("width").get<Eigen::Index>();
  out.pad_value = meta.at("pad_value").get<double>();
  out.split_index = meta.at("split_index").get<Eigen::Index>();
  if (days < 1 || width < 1) throw Error(ErrorCategory::Data, "dataset shape must be positive");

  out.history.utilities.resize(days, width);
  out.history.labels.resize(days, width);
  ArrayXXb seen = ArrayXXb::Constant(days, width, false);

  std::ifstream in(dir + "/days.csv");
  if (!in) throw Error(ErrorCategory::Io, "cannot open " + dir + "/days.csv");
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) !=
                                     std::vector<std::string>{"day_index", "slot", "utility", "label"})
    throw Error(ErrorCategory::Data, dir + "/days.csv has an unexpected header");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 4) throw Error(ErrorCategory::Data, "malformed days.csv row: " + line);
    const long d = std::stol(f[0]) - 1;
    const long t = std::stol(f[1]) - 1;
    if (d < 0 || d >= days || t < 0 || t >= width)
      throw Error(ErrorCategory::Data, "days.csv index out of range: " + line);
    out.history.utilities(d, t) = std::stod(f[2]);
    out.history.labels(d, t) = std::stoi(f[3]);
    seen(d, t) = true;
  }
  if (!seen.all()) throw Error(ErrorCategory::Data, dir + "/days.csv is missing slots");
  out.history.validate();

  if (meta_out) {
    meta_out->driver_id = out.driver_id;
    meta_out->days = days;
    meta_out->width = width;
    meta_out->pad_value = out.pad_value;
    meta_out->split_index = out.split_index;
    meta_out->config_echo.clear();
    for (const auto& [k, v] : meta.at("config").items())
      meta_out->config_echo[k] = v.get<std::string>();
  }
  return out;
}

void write_truth(const std::string& dir, const BehaviorParams& truth) {
  ensure_dir(dir);
  json j{{"schema", "dds-truth-v1"}, {"generator", params_to_json(truth)}};
  open_out(dir + "/truth.json") << j.dump(2) << '\n';
}

std::optional<BehaviorParams> read_truth(const std::string& dir) {
  if (!std::filesystem::exists(dir + "/truth.json")) return std::nullopt;
  const json j = load_json(dir + "/truth.json");
  return params_from_json(j.at("generator"));
}

void write_train_report(const std::string& dir, const TrainReport& report,
                        const std::map<std::string, std::string>& config_echo) {
  ensure_dir(dir);

  json epochs = json::array();
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    json entry{{"epoch", e + 1}, {"train", metrics_to_json(report.epochs[e].train)}};
    if (report.has_test) entry["test"] = metrics_to_json(report.epochs[e].test);
    epochs.push_back(std::move(entry));
  }
  json j{{"schema", kReportSchema},
         {"config", json(config_echo)},
         {"split_index", report.split_index},
         {"has_test", report.has_test},
         {"has_truth", report.has_truth},
         {"initial_params", params_to_json(report.initial_params)},
         {"final_params", params_to_json(report.final_params)},
         {"epochs", std::move(epochs)}};
  open_out(dir + "/report.json") << j.dump(2) << '\n';

  std::string csv = "epoch,split,loss,decision_acc,stop_exact,stop_mae,lambda_err,beta_err\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    append_split_row(csv, int(e) + 1, "train", report.epochs[e].train);
    if (report.has_test) append_split_row(csv, int(e) + 1, "test", report.epochs[e].test);
  }
  open_out(dir + "/epochs.csv") << csv;
}

LoadedReport read_train_report(const std::string& path) {
  const json j = load_json(path);
  if (j.value("schema", "") != kReportSchema)
    throw Error(ErrorCategory::Data, path + " has an unexpected schema tag");

  LoadedReport out;
  out.run_id = std::filesystem::path(path).parent_path().filename().string();
  if (out.run_id.empty()) out.run_id = path;
  out.report.split_index = j.at("split_index").get<Eigen::Index>();
  out.report.has_test = j.at("has_test").get<bool>();
  out.report.has_truth = j.at("has_truth").get<bool>();
  out.report.initial_params = params_from_json(j.at("initial_params"));
  out.report.final_params = params_from_json(j.at("final_params"));
  for (const json& entry : j.at("epochs")) {
    EpochMetrics m;
    m.train = metrics_from_json(entry.at("train"));
    if (entry.contains("test")) m.test = metrics_from_json(entry.at("test"));
    out.report.epochs.push_back(m);
  }
  return out;
}

void write_tidy_reports(const std::string& out_path, const std::vector<LoadedReport>& reports) {
  if (reports.empty()) throw Error(ErrorCategory::Data, "no reports to merge");

  std::string csv = "run_id,epoch,metric,value\n";
  auto emit = [&csv](const std::string& run, std::size_t epoch, const std::string& metric,
                     double value) {
    if (std::isnan(value)) return;
    csv += run;
    csv.push_back(',');
    csv += std::to_string(epoch);
    csv.push_back(',');
    csv += metric;
    csv.push_back(',');
    csv += format_double(value);
    csv.push_back('\n');
  };

  for (const LoadedReport& r : reports) {
    for (std::size_t e = 0; e < r.report.epochs.size(); ++e) {
      const EpochMetrics& m = r.report.epochs[e];
      const std::size_t epoch = e + 1;
      emit(r.run_id, epoch, "train_loss", m.train.loss);
      emit(r.run_id, epoch, "train_decision_acc", m.train.decision_accuracy);
      emit(r.run_id, epoch, "train_stop_exact", m.train.stop_exact);
      emit(r.run_id, epoch, "train_stop_mae", m.train.stop_mae);
      emit(r.run_id, epoch, "train_lambda_err", m.train.lambda_error);
      emit(r.run_id, epoch, "train_beta_err", m.train.beta_error);
      emit(r.run_id, epoch, "test_loss", m.test.loss);
      emit(r.run_id, epoch, "test_decision_acc", m.test.decision_accuracy);
      emit(r.run_id, epoch, "test_stop_exact", m.test.stop_exact);
      emit(r.run_id, epoch, "test_stop_mae", m.test.stop_mae);
      emit(r.run_id, epoch, "test_lambda_err", m.test.lambda_error);
      emit(r.run_id, epoch, "test_beta_err", m.test.beta_error);
    }
  }
  open_out(out_path) << csv;
}

}  // namespace dds
