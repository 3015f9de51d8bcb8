#pragma once

#include <cstdint>

#include "dds/model.hpp"
#include "dds/types.hpp"

namespace dds {

struct SimConfig {
  Eigen::Index days = 500;
  Eigen::Index width = 30;  // offered ride slots per day
  double exp_scale = 10.0;  // mean of the per-ride utility distribution
  BehaviorParams generator{0.8, 0.2, 0.8, 0.2, 70.0, 0.87};
  double noise_std_eps = 1.0;
  double noise_std_eta = 1.0;
  std::uint64_t seed = 0;
  ModelConfig model;

  void validate() const {
    if (days < 1 || width < 1) throw Error(ErrorCategory::Config, "days and width must be >= 1");
    if (!(exp_scale > 0.0)) throw Error(ErrorCategory::Config, "exp_scale must be positive");
    if (noise_std_eps < 0.0 || noise_std_eta < 0.0)
      throw Error(ErrorCategory::Config, "noise standard deviations must be nonnegative");
    generator.validate();
  }
};

struct SimResult {
  DriverHistory history;
  LatentTrajectory latent;  // realized (noise-conditioned) trajectory
  BehaviorParams truth;
  NoiseDraw noise;
};

// Seeded i.i.d. exponential ride utilities, one row per day.
ArrayXXd generate_utilities(const SimConfig& config);

// A full synthetic driver: utilities, recurrence rollout with per-day noise,
// and prefix-of-ones acceptance labels. The first slot of every day is
// accepted by construction (the smallest stopping task is 1).
SimResult generate_driver(const SimConfig& config);

}  // namespace dds
