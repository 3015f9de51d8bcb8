#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dds/pipeline.hpp"
#include "dds/trainer.hpp"
#include "dds/types.hpp"

namespace dds {

// Shortest round-trip decimal form of a double; reparses to the same bits.
std::string format_double(double value);

// A dataset directory holds meta.json (driver id, shape, pad value, split
// index, config echo) and days.csv (day_index, slot, utility, label; indices
// 1-based). Simulated datasets add truth.json with the generating
// parameters. The simulator and the ingestion pipeline emit the same layout,
// so the trainer consumes one format.
struct DatasetMeta {
  std::string driver_id;
  Eigen::Index days = 0;
  Eigen::Index width = 0;
  double pad_value = 0.0;
  Eigen::Index split_index = 0;
  std::map<std::string, std::string> config_echo;
};

void write_dataset(const std::string& dir, const DriverDataset& dataset,
                   const std::map<std::string, std::string>& config_echo);
DriverDataset read_dataset(const std::string& dir, DatasetMeta* meta_out = nullptr);

void write_truth(const std::string& dir, const BehaviorParams& truth);
std::optional<BehaviorParams> read_truth(const std::string& dir);

// report.json plus epochs.csv with columns
// epoch,split,loss,decision_acc,stop_exact,stop_mae,lambda_err,beta_err.
// Metrics that do not apply (no test part, no generator truth) are empty
// cells in the CSV and null in the JSON.
void write_train_report(const std::string& dir, const TrainReport& report,
                        const std::map<std::string, std::string>& config_echo);

struct LoadedReport {
  std::string run_id;
  TrainReport report;
};
LoadedReport read_train_report(const std::string& path);

// Merge reports into one tidy long-format CSV with columns exactly
// run_id,epoch,metric,value.
void write_tidy_reports(const std::string& out_path, const std::vector<LoadedReport>& reports);

}  // namespace dds
