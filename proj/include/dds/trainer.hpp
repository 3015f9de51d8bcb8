#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "dds/gradient.hpp"
#include "dds/types.hpp"

namespace dds {

enum class UpdateMode { PerDayReverse, FullBatch };
enum class ModelKind { DDS, DS, S };

inline const char* to_string(UpdateMode m) {
  return m == UpdateMode::PerDayReverse ? "per_day_reverse" : "full_batch";
}
inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::DDS: return "dds";
    case ModelKind::DS: return "ds";
    case ModelKind::S: return "s";
  }
  return "dds";
}

struct TrainConfig {
  double learning_rate = 0.01;
  int samples_R = 32;
  int epochs = 10;
  double noise_std_eps = 1.0;
  double noise_std_eta = 1.0;
  std::uint64_t seed = 0;
  UpdateMode update_mode = UpdateMode::PerDayReverse;
  bool train_initial_state = false;
  bool freeze_noise_per_epoch = false;
  ModelKind model_kind = ModelKind::DDS;
  MaskMode mask_mode = MaskMode::AllSlots;
  ModelConfig model;
  double prob_clip = 1e-7;
  Eigen::Index split_index = -1;  // days in the train part; -1 or D = no test part
  BehaviorParams init;            // starting parameters; DS/S overwrite the weights

  void validate() const;
};

struct SplitMetrics {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double decision_accuracy = std::numeric_limits<double>::quiet_NaN();
  double stop_exact = std::numeric_limits<double>::quiet_NaN();
  double stop_mae = std::numeric_limits<double>::quiet_NaN();
  double lambda_error = std::numeric_limits<double>::quiet_NaN();
  double beta_error = std::numeric_limits<double>::quiet_NaN();
};

struct EpochMetrics {
  SplitMetrics train;
  SplitMetrics test;  // NaN fields when the dataset has no test part
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;
  BehaviorParams initial_params;
  BehaviorParams final_params;
  Eigen::Index split_index = 0;
  bool has_test = false;
  bool has_truth = false;
};

// Decision metrics of fixed parameters on a day range [begin, end) of the
// history. The latent rollout is always teacher-forced from day 1 with zero
// noise; accuracy counts masked slots whose thresholded probability matches
// the continue/stop target. Stop metrics compare each day's predicted and
// observed stopping task.
SplitMetrics evaluate(const BehaviorParams& params, const DriverHistory& history,
                      const ForwardOptions& options, Eigen::Index begin_day, Eigen::Index end_day);

inline SplitMetrics evaluate(const BehaviorParams& params, const DriverHistory& history,
                             const ForwardOptions& options = {}) {
  return evaluate(params, history, options, 0, history.days());
}

// Mean absolute gap between the zero-noise latent trajectories of two
// parameter sets over [begin, end), both teacher-forced on the same history.
struct LatentError {
  double lambda = 0.0;
  double beta = 0.0;
};
LatentError latent_error(const BehaviorParams& learned, const BehaviorParams& truth,
                         const DriverHistory& history, const ModelConfig& config,
                         Eigen::Index begin_day, Eigen::Index end_day);

// Predicted stopping task for one day (1-based count in [1, width]):
// zero-noise teacher-forced latents, then the first slot whose continue
// probability is not strictly above one half. A day that never crosses keeps
// all offered rides.
int predict_stop(const BehaviorParams& params, const DriverHistory& history,
                 Eigen::Index day_index, const ForwardOptions& options = {});

// Sampling-based backpropagation through time. Per-day reverse mode walks
// days from last to first, each update averaging the day-restricted loss
// gradient over samples_R fresh noise draws; full-batch mode makes one
// averaged whole-history update per epoch. Metrics are recorded after each
// epoch; lambda/beta trajectory errors are filled when the generating
// parameters are supplied.
TrainReport sbptt_train(const DriverHistory& history, const TrainConfig& config,
                        const std::optional<BehaviorParams>& generator_truth = std::nullopt);

// The static-parameter baseline: weights frozen at the identity recurrence
// (a1=1, a2=0, b1=1, b2=0), zero noise, initial state trained.
TrainReport train_ds_baseline(const DriverHistory& history, TrainConfig config,
                              const std::optional<BehaviorParams>& generator_truth = std::nullopt);

}  // namespace dds
