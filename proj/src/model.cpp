#include "dds/model.hpp"

#include <cmath>
#include <limits>

namespace dds {

double project(double x, double lo, double hi) {
  if (x <= lo) return lo;
  if (x >= hi) return hi;
  return x;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCategory::Data, std::string(what) + " is not finite");
}

}  // namespace

LatentState update_lambda(double prev_lambda, double prev_total_utility, double eps,
                          const BehaviorParams& params, const ModelConfig& config) {
  require_finite(prev_lambda, "previous lambda");
  require_finite(prev_total_utility, "previous utility");
  require_finite(eps, "lambda noise");
  if (prev_lambda < 0.0) throw Error(ErrorCategory::Data, "previous lambda must be nonnegative");

  LatentState out;
  out.lambda_pre = params.a1 * prev_lambda + params.a2 * prev_total_utility + eps;
  // ReLU and the projection onto [0, inf) coincide, so both activations share
  // this branch.
  (void)config;
  out.lambda = project(out.lambda_pre, 0.0, std::numeric_limits<double>::infinity());
  out.lambda_clamped = out.lambda_pre <= 0.0;
  return out;
}

LatentState update_beta(double prev_beta, int prev_stop_count, double eta,
                        const BehaviorParams& params, const ModelConfig& config) {
  require_finite(prev_beta, "previous beta");
  require_finite(eta, "beta noise");
  if (!(prev_beta > 0.0 && prev_beta <= 1.0))
    throw Error(ErrorCategory::Data, "previous beta must lie in (0, 1]");
  if (prev_stop_count < 1) throw Error(ErrorCategory::Data, "previous stop count must be >= 1");

  LatentState out;
  out.beta_pre = params.b1 * prev_beta + params.b2 * std::exp(-double(prev_stop_count)) + eta;
  if (config.activation == Activation::Smooth) {
    out.beta = sigmoid(out.beta_pre);
    out.beta_clamped = false;
  } else {
    out.beta = project(out.beta_pre, config.beta_min, 1.0);
    out.beta_clamped = out.beta_pre <= config.beta_min || out.beta_pre >= 1.0;
  }
  return out;
}

std::optional<int> stopping_task(const ArrayXd& utilities, double lambda, double beta) {
  if (utilities.size() == 0) throw Error(ErrorCategory::Data, "stopping_task needs slots");
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCategory::Data, "beta must lie in (0, 1]");
  if (lambda < 0.0) throw Error(ErrorCategory::Data, "lambda must be nonnegative");

  double cumulative = 0.0;
  for (Eigen::Index t = 0; t < utilities.size(); ++t) {
    cumulative += utilities[t];
    const double threshold = std::pow(beta, double(t)) * lambda;
    if (cumulative >= threshold) return int(t) + 1;
  }
  return std::nullopt;
}

double decision_probability(double lambda, double beta, int t, double cumulative_utility,
                            double temperature) {
  if (t < 1) throw Error(ErrorCategory::Data, "task index must be >= 1");
  if (!(temperature > 0.0)) throw Error(ErrorCategory::Data, "temperature must be positive");
  const double threshold = std::pow(beta, double(t - 1)) * lambda;
  return sigmoid((threshold - cumulative_utility) / temperature);
}

SimulatedDriver simulate_history(const BehaviorParams& params, const ArrayXXd& raw_utilities,
                                 const NoiseDraw& noise, const ModelConfig& config) {
  params.validate();
  const Eigen::Index days = raw_utilities.rows();
  const Eigen::Index width = raw_utilities.cols();
  if (days < 1 || width < 1) throw Error(ErrorCategory::Data, "utilities must be D x T, D,T >= 1");
  if (noise.eps.size() != days || noise.eta.size() != days)
    throw Error(ErrorCategory::Data, "noise draw length must equal the day count");
  if (!raw_utilities.isFinite().all() || (raw_utilities < 0.0).any())
    throw Error(ErrorCategory::Data, "utilities must be finite and nonnegative");

  SimulatedDriver out;
  out.history.utilities = raw_utilities;
  out.history.labels = ArrayXXi::Zero(days, width);
  out.latent.resize(days);

  double prev_lambda = params.lambda0;
  double prev_beta = params.beta0;
  for (Eigen::Index d = 0; d < days; ++d) {
    LatentState state;
    if (d == 0) {
      // Day 1 takes the initial state verbatim; no noise, nothing to clamp.
      state.lambda = params.lambda0;
      state.beta = params.beta0;
      state.lambda_pre = params.lambda0;
      state.beta_pre = params.beta0;
    } else {
      const double prev_utility = config.utility_feedback == UtilityFeedback::FullDay
                                      ? out.history.full_day_utility(d - 1)
                                      : out.history.accepted_utility(d - 1);
      const int prev_stop = out.history.stop_count(d - 1);
      const LatentState ls = update_lambda(prev_lambda, prev_utility, noise.eps[d], params, config);
      const LatentState bs = update_beta(prev_beta, prev_stop, noise.eta[d], params, config);
      state.lambda = ls.lambda;
      state.lambda_pre = ls.lambda_pre;
      state.lambda_clamped = ls.lambda_clamped;
      state.beta = bs.beta;
      state.beta_pre = bs.beta_pre;
      state.beta_clamped = bs.beta_clamped;
    }

    out.latent.lambda[d] = state.lambda;
    out.latent.beta[d] = state.beta;
    out.latent.lambda_pre[d] = state.lambda_pre;
    out.latent.beta_pre[d] = state.beta_pre;
    out.latent.lambda_clamped[d] = state.lambda_clamped;
    out.latent.beta_clamped[d] = state.beta_clamped;

    const ArrayXd day_utilities = raw_utilities.row(d).transpose();
    const std::optional<int> stop = stopping_task(day_utilities, state.lambda, state.beta);
    const int stop_count = stop.value_or(int(width));  // never satisfied: keep every ride
    out.history.labels.row(d).head(stop_count).setOnes();

    prev_lambda = state.lambda;
    prev_beta = state.beta;
  }
  return out;
}

void DriverHistory::validate() const {
  const Eigen::Index d_count = days();
  const Eigen::Index t_count = width();
  if (d_count < 1 || t_count < 1) throw Error(ErrorCategory::Data, "history must be D x T, D,T >= 1");
  if (labels.rows() != d_count || labels.cols() != t_count)
    throw Error(ErrorCategory::Data, "labels shape must match utilities");
  if (!utilities.isFinite().all() || (utilities < 0.0).any())
    throw Error(ErrorCategory::Data, "utilities must be finite and nonnegative");
  for (Eigen::Index d = 0; d < d_count; ++d) {
    if (labels(d, 0) != 1) throw Error(ErrorCategory::Data, "each day must accept its first ride");
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const int v = labels(d, t);
      if (v != 0 && v != 1) throw Error(ErrorCategory::Data, "labels must be binary");
      if (t > 0 && v > labels(d, t - 1))
        throw Error(ErrorCategory::Data, "labels must be a prefix of ones");
    }
  }
}

}  // namespace dds
