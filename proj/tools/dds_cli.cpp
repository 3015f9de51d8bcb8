// Command-line front end: simulate -> train -> report pipelines over the
// shared dataset directory format, plus taxi-trip CSV ingestion.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dds/dataset_io.hpp"
#include "dds/error.hpp"
#include "dds/pipeline.hpp"
#include "dds/run_config.hpp"
#include "dds/simulator.hpp"
#include "dds/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int log_level() {
  const char* env = std::getenv("DDS_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << msg << '\n';
}

// Resolution order: command-line flag, then config file, then default.
template <typename T>
T resolve(const std::optional<T>& flag, const dds::RunConfig& file, const std::string& key,
          T fallback);

template <>
double resolve<double>(const std::optional<double>& flag, const dds::RunConfig& file,
                       const std::string& key, double fallback) {
  return flag ? *flag : dds::config_double(file, key, fallback);
}
template <>
long resolve<long>(const std::optional<long>& flag, const dds::RunConfig& file,
                   const std::string& key, long fallback) {
  return flag ? *flag : dds::config_long(file, key, fallback);
}
template <>
bool resolve<bool>(const std::optional<bool>& flag, const dds::RunConfig& file,
                   const std::string& key, bool fallback) {
  return flag ? *flag : dds::config_bool(file, key, fallback);
}
template <>
std::string resolve<std::string>(const std::optional<std::string>& flag,
                                 const dds::RunConfig& file, const std::string& key,
                                 std::string fallback) {
  return flag ? *flag : dds::config_string(file, key, std::move(fallback));
}

dds::RunConfig load_file_config(const std::optional<std::string>& path) {
  return path ? dds::read_config_file(*path) : dds::RunConfig{};
}

dds::UtilityFeedback feedback_from(const std::string& v) {
  if (v == "accepted") return dds::UtilityFeedback::AcceptedPrefix;
  if (v == "full_day") return dds::UtilityFeedback::FullDay;
  throw dds::Error(dds::ErrorCategory::Config, "feedback must be accepted or full_day: " + v);
}

dds::Activation activation_from(const std::string& v) {
  if (v == "clamp") return dds::Activation::Clamp;
  if (v == "smooth") return dds::Activation::Smooth;
  throw dds::Error(dds::ErrorCategory::Config, "activation must be clamp or smooth: " + v);
}

dds::MaskMode mask_mode_from(const std::string& v) {
  if (v == "all_slots") return dds::MaskMode::AllSlots;
  if (v == "prefix_plus_one") return dds::MaskMode::PrefixPlusOne;
  throw dds::Error(dds::ErrorCategory::Config, "mask mode must be all_slots or prefix_plus_one: " + v);
}

dds::UpdateMode update_mode_from(const std::string& v) {
  if (v == "per-day-reverse" || v == "per_day_reverse") return dds::UpdateMode::PerDayReverse;
  if (v == "full-batch" || v == "full_batch") return dds::UpdateMode::FullBatch;
  throw dds::Error(dds::ErrorCategory::Config,
                   "update mode must be per-day-reverse or full-batch: " + v);
}

dds::ModelKind model_kind_from(const std::string& v) {
  if (v == "dds") return dds::ModelKind::DDS;
  if (v == "ds") return dds::ModelKind::DS;
  if (v == "s") return dds::ModelKind::S;
  throw dds::Error(dds::ErrorCategory::Config, "model must be dds, ds or s: " + v);
}

std::string sanitize_id(const std::string& id) {
  std::string out;
  for (char c : id)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out.empty() ? std::string("driver") : out;
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::optional<std::string> config_path, out, feedback, activation;
  std::optional<long> seed, days, width;
  std::optional<double> scale, lambda0, beta0, a1, a2, b1, b2, noise_eps, noise_eta, beta_min,
      train_fraction;
};

int cmd_simulate(const SimulateFlags& flags) {
  const dds::RunConfig file = load_file_config(flags.config_path);

  dds::RunConfig cfg;
  cfg["command"] = "simulate";
  cfg["seed"] = std::to_string(resolve(flags.seed, file, "seed", 0L));
  cfg["days"] = std::to_string(resolve(flags.days, file, "days", 500L));
  cfg["width"] = std::to_string(resolve(flags.width, file, "width", 30L));
  cfg["exp_scale"] = dds::format_double(resolve(flags.scale, file, "exp_scale", 10.0));
  cfg["lambda0"] = dds::format_double(resolve(flags.lambda0, file, "lambda0", 70.0));
  cfg["beta0"] = dds::format_double(resolve(flags.beta0, file, "beta0", 0.87));
  cfg["a1"] = dds::format_double(resolve(flags.a1, file, "a1", 0.8));
  cfg["a2"] = dds::format_double(resolve(flags.a2, file, "a2", 0.2));
  cfg["b1"] = dds::format_double(resolve(flags.b1, file, "b1", 0.8));
  cfg["b2"] = dds::format_double(resolve(flags.b2, file, "b2", 0.2));
  cfg["noise_std_eps"] = dds::format_double(resolve(flags.noise_eps, file, "noise_std_eps", 1.0));
  cfg["noise_std_eta"] = dds::format_double(resolve(flags.noise_eta, file, "noise_std_eta", 1.0));
  cfg["beta_min"] = dds::format_double(resolve(flags.beta_min, file, "beta_min", 1e-6));
  cfg["feedback"] = resolve(flags.feedback, file, "feedback", std::string("accepted"));
  cfg["activation"] = resolve(flags.activation, file, "activation", std::string("clamp"));
  cfg["train_fraction"] =
      dds::format_double(resolve(flags.train_fraction, file, "train_fraction", 0.4));
  const std::string out_dir =
      resolve(flags.out, file, "out", std::string());
  if (out_dir.empty())
    throw dds::Error(dds::ErrorCategory::Usage, "simulate needs --out DIR");

  dds::SimConfig sim;
  sim.days = dds::config_long(cfg, "days", 0);
  sim.width = dds::config_long(cfg, "width", 0);
  sim.exp_scale = dds::config_double(cfg, "exp_scale", 0);
  sim.seed = std::uint64_t(dds::config_long(cfg, "seed", 0));
  sim.noise_std_eps = dds::config_double(cfg, "noise_std_eps", 0);
  sim.noise_std_eta = dds::config_double(cfg, "noise_std_eta", 0);
  sim.generator.a1 = dds::config_double(cfg, "a1", 0);
  sim.generator.a2 = dds::config_double(cfg, "a2", 0);
  sim.generator.b1 = dds::config_double(cfg, "b1", 0);
  sim.generator.b2 = dds::config_double(cfg, "b2", 0);
  sim.generator.lambda0 = dds::config_double(cfg, "lambda0", 0);
  sim.generator.beta0 = dds::config_double(cfg, "beta0", 0);
  sim.model.beta_min = dds::config_double(cfg, "beta_min", 0);
  sim.model.utility_feedback = feedback_from(cfg["feedback"]);
  sim.model.activation = activation_from(cfg["activation"]);

  const dds::SimResult result = dds::generate_driver(sim);

  dds::DriverDataset dataset;
  dataset.driver_id = "sim";
  dataset.history = result.history;
  dataset.pad_value = 0.0;  // simulated days are never padded
  dataset.split_index =
      sim.days >= 2 ? dds::split_index_for(sim.days, dds::config_double(cfg, "train_fraction", 0.4))
                    : 1;

  std::map<std::string, std::string> echo(cfg.begin(), cfg.end());
  dds::write_dataset(out_dir, dataset, echo);
  dds::write_truth(out_dir, result.truth);
  dds::write_config_file(out_dir + "/config.txt", cfg);

  log_info("simulate: wrote " + std::to_string(dataset.history.days()) + " days x " +
           std::to_string(dataset.history.width()) + " slots to " + out_dir);
  return 0;
}

// ------------------------------------------------------------------ ingest

struct IngestFlags {
  std::optional<std::string> config_path, out, csv;
  std::optional<long> seed, drivers;
  std::optional<double> train_fraction;
  std::optional<bool> global_mean;
};

int cmd_ingest(const IngestFlags& flags) {
  const dds::RunConfig file = load_file_config(flags.config_path);

  dds::RunConfig cfg;
  cfg["command"] = "ingest";
  cfg["csv"] = resolve(flags.csv, file, "csv", std::string());
  cfg["seed"] = std::to_string(resolve(flags.seed, file, "seed", 0L));
  cfg["drivers"] = std::to_string(resolve(flags.drivers, file, "drivers", 10L));
  cfg["train_fraction"] =
      dds::format_double(resolve(flags.train_fraction, file, "train_fraction", 0.4));
  cfg["pad_scope"] = resolve(flags.global_mean, file, "global_mean", false) ? "global" : "driver";
  const std::string out_dir = resolve(flags.out, file, "out", std::string());
  if (cfg["csv"].empty()) throw dds::Error(dds::ErrorCategory::Usage, "ingest needs a CSV path");
  if (out_dir.empty()) throw dds::Error(dds::ErrorCategory::Usage, "ingest needs --out DIR");

  const dds::ParsedTrips parsed = dds::parse_trips_file(cfg["csv"]);
  const std::vector<dds::DriverDays> drivers =
      dds::aggregate(parsed.trips, int(dds::config_long(cfg, "drivers", 0)),
                     std::uint64_t(dds::config_long(cfg, "seed", 0)));
  dds::DatasetBundle bundle = dds::pad_and_encode(
      drivers, cfg["pad_scope"] == "global" ? dds::PadScope::GlobalMean : dds::PadScope::PerDriver);
  const double fraction = dds::config_double(cfg, "train_fraction", 0.4);
  for (dds::DriverDataset& ds : bundle)
    ds.split_index = ds.history.days() >= 2 ? dds::split_index_for(ds.history.days(), fraction)
                                            : ds.history.days();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw dds::Error(dds::ErrorCategory::Io, "cannot create " + out_dir);

  std::map<std::string, std::string> echo(cfg.begin(), cfg.end());
  for (const dds::DriverDataset& ds : bundle)
    dds::write_dataset(out_dir + "/driver_" + sanitize_id(ds.driver_id), ds, echo);

  json report{{"schema", "dds-ingest-report-v1"},
              {"rows_read", parsed.report.rows_read},
              {"rows_dropped", parsed.report.rows_dropped},
              {"rows_kept", parsed.report.rows_kept},
              {"drivers_written", bundle.size()}};
  std::ofstream rep(out_dir + "/ingest_report.json", std::ios::binary);
  if (!rep) throw dds::Error(dds::ErrorCategory::Io, "cannot write ingest report");
  rep << report.dump(2) << '\n';
  dds::write_config_file(out_dir + "/config.txt", cfg);

  log_info("ingest: kept " + std::to_string(parsed.report.rows_kept) + "/" +
           std::to_string(parsed.report.rows_read) + " rows, wrote " +
           std::to_string(bundle.size()) + " driver dataset(s) to " + out_dir);
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainFlags {
  std::optional<std::string> config_path, out, dataset, model, update_mode, mask_mode, feedback,
      activation, sweep, baseline;
  std::optional<long> seed, samples, epochs;
  std::optional<double> lr, temperature, noise_eps, noise_eta, train_fraction, init_lambda0,
      init_beta0, init_a1, init_a2, init_b1, init_b2;
  std::optional<bool> train_initial_state, freeze_noise;
};

std::vector<std::string> dataset_driver_dirs(const std::string& dataset_dir) {
  if (fs::exists(fs::path(dataset_dir) / "meta.json")) return {dataset_dir};
  std::vector<std::string> dirs;
  if (fs::is_directory(dataset_dir))
    for (const auto& entry : fs::directory_iterator(dataset_dir))
      if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
        dirs.push_back(entry.path().string());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty())
    throw dds::Error(dds::ErrorCategory::Data, "no dataset (meta.json) under " + dataset_dir);
  return dirs;
}

int cmd_train(const TrainFlags& flags) {
  const dds::RunConfig file = load_file_config(flags.config_path);

  dds::RunConfig cfg;
  cfg["command"] = "train";
  cfg["dataset"] = resolve(flags.dataset, file, "dataset", std::string());
  cfg["seed"] = std::to_string(resolve(flags.seed, file, "seed", 0L));
  cfg["samples"] = std::to_string(resolve(flags.samples, file, "samples", 32L));
  cfg["epochs"] = std::to_string(resolve(flags.epochs, file, "epochs", 10L));
  cfg["lr"] = dds::format_double(resolve(flags.lr, file, "lr", 0.01));
  cfg["model"] = resolve(flags.model, file, "model", std::string("dds"));
  cfg["update_mode"] =
      resolve(flags.update_mode, file, "update_mode", std::string("per-day-reverse"));
  cfg["mask_mode"] = resolve(flags.mask_mode, file, "mask_mode", std::string("all_slots"));
  cfg["temperature"] = dds::format_double(resolve(flags.temperature, file, "temperature", 1.0));
  cfg["noise_std_eps"] = dds::format_double(resolve(flags.noise_eps, file, "noise_std_eps", 1.0));
  cfg["noise_std_eta"] = dds::format_double(resolve(flags.noise_eta, file, "noise_std_eta", 1.0));
  // Unless told otherwise, learn the initial state exactly when the dataset
  // carries no generator truth: on real data lambda0/beta0 are unobservable,
  // in recovery experiments they are the generator's and stay fixed.
  const bool initial_state_default = !dds::read_truth(
      resolve(flags.dataset, file, "dataset", std::string())).has_value();
  cfg["train_initial_state"] =
      resolve(flags.train_initial_state, file, "train_initial_state", initial_state_default)
          ? "true"
          : "false";
  cfg["freeze_noise_per_epoch"] =
      resolve(flags.freeze_noise, file, "freeze_noise_per_epoch", false) ? "true" : "false";
  cfg["init_lambda0"] = dds::format_double(resolve(flags.init_lambda0, file, "init_lambda0", 50.0));
  cfg["init_beta0"] = dds::format_double(resolve(flags.init_beta0, file, "init_beta0", 0.9));
  cfg["init_a1"] = dds::format_double(resolve(flags.init_a1, file, "init_a1", 1.0));
  cfg["init_a2"] = dds::format_double(resolve(flags.init_a2, file, "init_a2", 0.0));
  cfg["init_b1"] = dds::format_double(resolve(flags.init_b1, file, "init_b1", 1.0));
  cfg["init_b2"] = dds::format_double(resolve(flags.init_b2, file, "init_b2", 0.0));
  const std::string out_dir = resolve(flags.out, file, "out", std::string());
  const std::string sweep = resolve(flags.sweep, file, "sweep", std::string());
  const std::string baseline = resolve(flags.baseline, file, "baseline", std::string());
  if (cfg["dataset"].empty())
    throw dds::Error(dds::ErrorCategory::Usage, "train needs a dataset directory");
  if (out_dir.empty()) throw dds::Error(dds::ErrorCategory::Usage, "train needs --out DIR");
  if (!baseline.empty() && baseline != "ds")
    throw dds::Error(dds::ErrorCategory::Usage, "only --baseline ds is available");

  // Base train configuration shared by every run of this command.
  auto make_config = [&](const dds::DatasetMeta& meta) {
    dds::TrainConfig tc;
    tc.learning_rate = dds::config_double(cfg, "lr", 0.01);
    tc.samples_R = int(dds::config_long(cfg, "samples", 32));
    tc.epochs = int(dds::config_long(cfg, "epochs", 10));
    tc.seed = std::uint64_t(dds::config_long(cfg, "seed", 0));
    tc.noise_std_eps = dds::config_double(cfg, "noise_std_eps", 1.0);
    tc.noise_std_eta = dds::config_double(cfg, "noise_std_eta", 1.0);
    tc.update_mode = update_mode_from(cfg["update_mode"]);
    tc.mask_mode = mask_mode_from(cfg["mask_mode"]);
    tc.model_kind = model_kind_from(cfg["model"]);
    tc.train_initial_state = cfg["train_initial_state"] == "true";
    tc.freeze_noise_per_epoch = cfg["freeze_noise_per_epoch"] == "true";
    tc.model.temperature = dds::config_double(cfg, "temperature", 1.0);
    tc.init.lambda0 = dds::config_double(cfg, "init_lambda0", 50.0);
    tc.init.beta0 = dds::config_double(cfg, "init_beta0", 0.9);
    tc.init.a1 = dds::config_double(cfg, "init_a1", 1.0);
    tc.init.a2 = dds::config_double(cfg, "init_a2", 0.0);
    tc.init.b1 = dds::config_double(cfg, "init_b1", 1.0);
    tc.init.b2 = dds::config_double(cfg, "init_b2", 0.0);
    // Semantics travel with the dataset unless overridden here.
    const auto& echo = meta.config_echo;
    auto echo_str = [&echo](const char* key, const char* fallback) {
      const auto it = echo.find(key);
      return it == echo.end() ? std::string(fallback) : it->second;
    };
    tc.model.utility_feedback = feedback_from(
        flags.feedback ? *flags.feedback : echo_str("feedback", "accepted"));
    tc.model.activation = activation_from(
        flags.activation ? *flags.activation : echo_str("activation", "clamp"));
    if (const auto it = echo.find("beta_min"); it != echo.end())
      tc.model.beta_min = std::stod(it->second);
    return tc;
  };

  std::vector<int> sample_counts;
  if (sweep.empty()) {
    sample_counts.push_back(int(dds::config_long(cfg, "samples", 32)));
  } else {
    std::stringstream ss(sweep);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) sample_counts.push_back(std::stoi(item));
    if (sample_counts.empty())
      throw dds::Error(dds::ErrorCategory::Usage, "empty --sweep-samples list");
  }

  const std::vector<std::string> driver_dirs = dataset_driver_dirs(cfg["dataset"]);
  const double fraction_override = flags.train_fraction ? *flags.train_fraction : -1.0;

  for (const int samples : sample_counts) {
    const std::string run_root =
        sweep.empty() ? out_dir : out_dir + "/R" + std::to_string(samples);
    for (const std::string& driver_dir : driver_dirs) {
      dds::DatasetMeta meta;
      const dds::DriverDataset dataset = dds::read_dataset(driver_dir, &meta);
      const std::optional<dds::BehaviorParams> truth = dds::read_truth(driver_dir);

      dds::TrainConfig tc = make_config(meta);
      tc.samples_R = samples;
      tc.split_index = fraction_override > 0.0
                           ? dds::split_index_for(dataset.history.days(), fraction_override)
                           : dataset.split_index;

      const std::string run_dir = driver_dirs.size() == 1
                                      ? run_root
                                      : run_root + "/" + fs::path(driver_dir).filename().string();

      const dds::TrainReport report = dds::sbptt_train(dataset.history, tc, truth);
      std::map<std::string, std::string> echo(cfg.begin(), cfg.end());
      echo["samples"] = std::to_string(samples);
      echo["driver_id"] = dataset.driver_id;
      dds::write_train_report(run_dir, report, echo);

      if (!baseline.empty()) {
        const dds::TrainReport ds_report = dds::train_ds_baseline(dataset.history, tc, truth);
        echo["model"] = "ds";
        dds::write_train_report(run_dir + "/baseline_ds", ds_report, echo);
      }

      const dds::SplitMetrics& last = report.epochs.back().train;
      log_info("train: R=" + std::to_string(samples) + " " + dataset.driver_id +
               " final train loss " + dds::format_double(last.loss) + ", accuracy " +
               dds::format_double(last.decision_accuracy));
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  dds::write_config_file(out_dir + "/config.txt", cfg);
  return 0;
}

// ------------------------------------------------------------------ report

int cmd_report(const std::string& out_path, std::vector<std::string> inputs) {
  if (inputs.empty()) throw dds::Error(dds::ErrorCategory::Usage, "report needs input paths");

  std::vector<std::string> report_files;
  for (const std::string& input : inputs) {
    if (fs::is_directory(input)) {
      for (const auto& entry : fs::recursive_directory_iterator(input))
        if (entry.is_regular_file() && entry.path().filename() == "report.json")
          report_files.push_back(entry.path().string());
    } else if (fs::exists(input)) {
      report_files.push_back(input);
    } else {
      throw dds::Error(dds::ErrorCategory::Io, "no such report input: " + input);
    }
  }
  std::sort(report_files.begin(), report_files.end());
  report_files.erase(std::unique(report_files.begin(), report_files.end()), report_files.end());
  if (report_files.empty())
    throw dds::Error(dds::ErrorCategory::Data, "no report.json found under the given inputs");

  std::vector<dds::LoadedReport> reports;
  reports.reserve(report_files.size());
  for (const std::string& path : report_files) {
    dds::LoadedReport loaded = dds::read_train_report(path);
    // Disambiguate duplicate directory names by their full relative path.
    loaded.run_id = fs::path(path).parent_path().generic_string();
    reports.push_back(std::move(loaded));
  }
  dds::write_tidy_reports(out_path, reports);
  log_info("report: merged " + std::to_string(reports.size()) + " run(s) into " + out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic discounted satisficing: simulate, ingest, train, report"};
  app.require_subcommand(1);

  SimulateFlags sim;
  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic driver dataset");
  simulate->add_option("--config", sim.config_path, "key = value config file");
  simulate->add_option("--out", sim.out, "output dataset directory");
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--days", sim.days, "number of days");
  simulate->add_option("--width", sim.width, "offered ride slots per day");
  simulate->add_option("--scale", sim.scale, "exponential utility scale");
  simulate->add_option("--lambda0", sim.lambda0, "generator initial target");
  simulate->add_option("--beta0", sim.beta0, "generator initial discount factor");
  simulate->add_option("--a1", sim.a1, "lambda self-weight");
  simulate->add_option("--a2", sim.a2, "utility feedback weight");
  simulate->add_option("--b1", sim.b1, "beta self-weight");
  simulate->add_option("--b2", sim.b2, "stop-count feedback weight");
  simulate->add_option("--noise-eps", sim.noise_eps, "lambda recurrence noise std");
  simulate->add_option("--noise-eta", sim.noise_eta, "beta recurrence noise std");
  simulate->add_option("--beta-min", sim.beta_min, "lower projection bound for beta");
  simulate->add_option("--feedback", sim.feedback, "utility feedback: accepted|full_day");
  simulate->add_option("--activation", sim.activation, "recurrence activation: clamp|smooth");
  simulate->add_option("--train-fraction", sim.train_fraction, "chronological train fraction");

  IngestFlags ing;
  CLI::App* ingest = app.add_subcommand("ingest", "build datasets from a taxi trip CSV");
  ingest->add_option("csv", ing.csv, "trip CSV path");
  ingest->add_option("--config", ing.config_path, "key = value config file");
  ingest->add_option("--out", ing.out, "output directory");
  ingest->add_option("--seed", ing.seed, "driver sampling seed");
  ingest->add_option("--drivers", ing.drivers, "number of drivers to sample");
  ingest->add_option("--train-fraction", ing.train_fraction, "chronological train fraction");
  ingest->add_flag("--global-mean", ing.global_mean, "pad with the global mean fare");

  TrainFlags tr;
  CLI::App* train = app.add_subcommand("train", "train on a dataset directory");
  train->add_option("dataset", tr.dataset, "dataset directory");
  train->add_option("--config", tr.config_path, "key = value config file");
  train->add_option("--out", tr.out, "output directory for reports");
  train->add_option("--seed", tr.seed, "training noise seed");
  train->add_option("--samples", tr.samples, "noise samples R per update");
  train->add_option("--epochs", tr.epochs, "training epochs");
  train->add_option("--lr", tr.lr, "learning rate");
  train->add_option("--model", tr.model, "model kind: dds|ds|s");
  train->add_option("--update-mode", tr.update_mode, "per-day-reverse|full-batch");
  train->add_option("--mask-mode", tr.mask_mode, "loss mask: all_slots|prefix_plus_one");
  train->add_option("--temperature", tr.temperature, "decision sigmoid temperature");
  train->add_option("--noise-eps", tr.noise_eps, "training noise std for lambda");
  train->add_option("--noise-eta", tr.noise_eta, "training noise std for beta");
  train->add_option("--train-fraction", tr.train_fraction, "re-split the dataset before training");
  train->add_option("--feedback", tr.feedback, "override dataset utility feedback");
  train->add_option("--activation", tr.activation, "override dataset activation");
  train->add_option("--sweep-samples", tr.sweep, "comma list of R values, one run each");
  train->add_option("--baseline", tr.baseline, "also train a baseline: ds");
  train->add_option("--init-lambda0", tr.init_lambda0, "initial lambda0");
  train->add_option("--init-beta0", tr.init_beta0, "initial beta0");
  train->add_option("--init-a1", tr.init_a1, "initial a1");
  train->add_option("--init-a2", tr.init_a2, "initial a2");
  train->add_option("--init-b1", tr.init_b1, "initial b1");
  train->add_option("--init-b2", tr.init_b2, "initial b2");
  train->add_flag("--train-initial-state", tr.train_initial_state,
                  "also learn lambda0/beta0 (dds model)");
  train->add_flag("--freeze-noise", tr.freeze_noise, "draw noise once per epoch");

  std::string report_out;
  std::vector<std::string> report_inputs;
  CLI::App* report = app.add_subcommand("report", "merge train reports into one tidy CSV");
  report->add_option("--out", report_out, "output CSV path")->required();
  report->add_option("inputs", report_inputs, "report.json files or directories to scan");

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return cmd_simulate(sim);
    if (ingest->parsed()) return cmd_ingest(ing);
    if (train->parsed()) return cmd_train(tr);
    if (report->parsed()) return cmd_report(report_out, report_inputs);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      json err{{"category", "usage"}, {"message", e.what()}};
      std::cerr << err.dump() << '\n';
    }
    return app.exit(e);
  } catch (const dds::Error& e) {
    json err{{"category", dds::to_string(e.category())}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    switch (e.category()) {
      case dds::ErrorCategory::Usage: return 2;
      case dds::ErrorCategory::Config: return 3;
      case dds::ErrorCategory::Data: return 4;
      case dds::ErrorCategory::Io: return 5;
      case dds::ErrorCategory::Divergence: return 6;
      case dds::ErrorCategory::Internal: return 10;
    }
    return 10;
  } catch (const std::exception& e) {
    json err{{"category", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 10;
  }
}
