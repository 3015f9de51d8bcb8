#pragma once

#include <optional>

#include "dds/types.hpp"

namespace dds {

// Clamp x onto [lo, hi]; lo/hi may be +-infinity. Idempotent and monotone.
double project(double x, double lo, double hi);

// One step of the target recurrence:
//   lambda_d = clamp(a1 * lambda_prev + a2 * utility_prev + eps, [0, inf)).
// Returns the post-projection value together with the raw argument and a
// clamp indicator. Smooth activation is identical here: ReLU is the [0, inf)
// projection.
LatentState update_lambda(double prev_lambda, double prev_total_utility, double eps,
                          const BehaviorParams& params, const ModelConfig& config = {});

// One step of the discount recurrence:
//   beta_d = clamp(b1 * beta_prev + b2 * exp(-stop_prev) + eta, [beta_min, 1]),
// or a sigmoid squash of the same argument under Activation::Smooth.
LatentState update_beta(double prev_beta, int prev_stop_count, double eta,
                        const BehaviorParams& params, const ModelConfig& config = {});

// Smallest t (1-based) whose cumulative utility reaches the discounted
// threshold beta^(t-1) * lambda. Equality counts as reached. nullopt when the
// threshold is never met within the offered slots.
std::optional<int> stopping_task(const ArrayXd& utilities, double lambda, double beta);

// sigmoid((beta^(t-1) * lambda - cumulative_utility) / temperature): the
// probability the driver keeps working after ride t. Exactly 0.5 when the
// cumulative utility ties the threshold; a tie means stop, so the continue
// rule is strict (> 0.5).
double decision_probability(double lambda, double beta, int t, double cumulative_utility,
                            double temperature = 1.0);

// Numerically stable logistic function.
double sigmoid(double x);

struct SimulatedDriver {
  DriverHistory history;
  LatentTrajectory latent;
};

// Roll the recurrences over a rectangular utility matrix and derive each
// day's stop count and labels. Day 1 uses (lambda0, beta0) verbatim with no
// noise; the recurrence starts on day 2, fed by the previous day's realized
// totals. A day whose threshold is never met keeps all offered rides.
SimulatedDriver simulate_history(const BehaviorParams& params, const ArrayXXd& raw_utilities,
                                 const NoiseDraw& noise, const ModelConfig& config = {});

}  // namespace dds
