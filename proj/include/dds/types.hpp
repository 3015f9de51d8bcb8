#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "dds/error.hpp"

namespace dds {

using Eigen::ArrayXd;
using Eigen::ArrayXi;
using Eigen::ArrayXXd;
using ArrayXb = Eigen::Array<bool, Eigen::Dynamic, 1>;
using ArrayXXi = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic>;
using ArrayXXb = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Trainable weights of the day-to-day recurrences plus the initial latent
// state (lambda0, beta0) they evolve from.
struct BehaviorParams {
  double a1 = 1.0;  // lambda recurrence self-weight
  double a2 = 0.0;  // previous-day utility feedback weight
  double b1 = 1.0;  // beta recurrence self-weight
  double b2 = 0.0;  // previous-day stop-count feedback weight
  double lambda0 = 0.0;  // initial target, utility units
  double beta0 = 1.0;    // initial within-day discount factor, (0, 1]

  void validate() const {
    const bool finite = std::isfinite(a1) && std::isfinite(a2) && std::isfinite(b1) &&
                        std::isfinite(b2) && std::isfinite(lambda0) && std::isfinite(beta0);
    if (!finite) throw Error(ErrorCategory::Config, "behavior params must be finite");
    if (lambda0 < 0.0) throw Error(ErrorCategory::Config, "lambda0 must be nonnegative");
    if (!(beta0 > 0.0 && beta0 <= 1.0))
      throw Error(ErrorCategory::Config, "beta0 must lie in (0, 1]");
  }
};

// One driver's observed data: a rectangular D x T utility matrix and the
// matching binary acceptance labels. Each day's labels are a prefix of ones
// (the accepted rides) followed by zeros (declined or padded slots).
struct DriverHistory {
  ArrayXXd utilities;  // D x T, nonnegative
  ArrayXXi labels;     // D x T, each row monotone nonincreasing, first entry 1

  Eigen::Index days() const { return utilities.rows(); }
  Eigen::Index width() const { return utilities.cols(); }

  // Number of accepted rides on day d (count of 1-labels).
  int stop_count(Eigen::Index d) const { return labels.row(d).sum(); }

  // Utility accumulated over the accepted prefix of day d.
  double accepted_utility(Eigen::Index d) const {
    return (utilities.row(d) * labels.row(d).cast<double>()).sum();
  }

  // Utility summed over every slot of day d, padding included.
  double full_day_utility(Eigen::Index d) const { return utilities.row(d).sum(); }

  void validate() const;
};

// Per-day latent state with the pre-projection arguments kept for gradients.
struct LatentState {
  double lambda = 0.0;
  double beta = 1.0;
  double lambda_pre = 0.0;
  double beta_pre = 1.0;
  bool lambda_clamped = false;
  bool beta_clamped = false;
};

// The (lambda_d, beta_d) sequence as structure-of-arrays.
struct LatentTrajectory {
  ArrayXd lambda;
  ArrayXd beta;
  ArrayXd lambda_pre;
  ArrayXd beta_pre;
  ArrayXb lambda_clamped;
  ArrayXb beta_clamped;

  Eigen::Index days() const { return lambda.size(); }

  void resize(Eigen::Index days) {
    lambda.resize(days);
    beta.resize(days);
    lambda_pre.resize(days);
    beta_pre.resize(days);
    lambda_clamped.resize(days);
    beta_clamped.resize(days);
  }

  LatentState day(Eigen::Index d) const {
    return {lambda[d], beta[d], lambda_pre[d], beta_pre[d], lambda_clamped[d], beta_clamped[d]};
  }
};

// One realization of the per-day recurrence noise.
struct NoiseDraw {
  ArrayXd eps;  // added to the lambda recurrence
  ArrayXd eta;  // added to the beta recurrence

  static NoiseDraw zero(Eigen::Index days) {
    return {ArrayXd::Zero(days), ArrayXd::Zero(days)};
  }
};

enum class Activation { Clamp, Smooth };
enum class UtilityFeedback { AcceptedPrefix, FullDay };
enum class MaskMode { AllSlots, PrefixPlusOne };

// Semantics options shared by generation, the forward pass and training.
// Generator and learner must agree on these for parameter recovery to be
// well-posed.
struct ModelConfig {
  double beta_min = 1e-6;      // lower projection bound for beta
  double temperature = 1.0;    // sigmoid temperature of the decision unit
  Activation activation = Activation::Clamp;
  UtilityFeedback utility_feedback = UtilityFeedback::AcceptedPrefix;
};

inline const char* to_string(Activation a) {
  return a == Activation::Clamp ? "clamp" : "smooth";
}
inline const char* to_string(UtilityFeedback u) {
  return u == UtilityFeedback::AcceptedPrefix ? "accepted" : "full_day";
}
inline const char* to_string(MaskMode m) {
  return m == MaskMode::AllSlots ? "all_slots" : "prefix_plus_one";
}

}  // namespace dds
