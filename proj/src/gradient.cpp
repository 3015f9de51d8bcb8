#include "dds/gradient.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dds {

Eigen::Array<double, 6, 1> Gradients::as_array() const {
  Eigen::Array<double, 6, 1> v;
  v << a1, a2, b1, b2, lambda0, beta0;
  return v;
}

Gradients Gradients::from_array(const Eigen::Array<double, 6, 1>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

void Gradients::accumulate(const Gradients& other) {
  a1 += other.a1;
  a2 += other.a2;
  b1 += other.b1;
  b2 += other.b2;
  lambda0 += other.lambda0;
  beta0 += other.beta0;
}

void Gradients::scale(double factor) {
  a1 *= factor;
  a2 *= factor;
  b1 *= factor;
  b2 *= factor;
  lambda0 *= factor;
  beta0 *= factor;
}

bool Gradients::all_finite() const {
  return std::isfinite(a1) && std::isfinite(a2) && std::isfinite(b1) && std::isfinite(b2) &&
         std::isfinite(lambda0) && std::isfinite(beta0);
}

void teacher_forced_latents(const BehaviorParams& params, const DriverHistory& history,
                            const NoiseDraw& noise, const ModelConfig& config,
                            Eigen::Index up_to_day, LatentTrajectory& out) {
  if (out.lambda.size() < up_to_day + 1) out.resize(history.days());

  out.lambda[0] = params.lambda0;
  out.beta[0] = params.beta0;
  out.lambda_pre[0] = params.lambda0;
  out.beta_pre[0] = params.beta0;
  out.lambda_clamped[0] = false;
  out.beta_clamped[0] = false;

  for (Eigen::Index d = 1; d <= up_to_day; ++d) {
    const double prev_utility = config.utility_feedback == UtilityFeedback::FullDay
                                    ? history.full_day_utility(d - 1)
                                    : history.accepted_utility(d - 1);
    const int prev_stop = history.stop_count(d - 1);

    const double lambda_pre =
        params.a1 * out.lambda[d - 1] + params.a2 * prev_utility + noise.eps[d];
    out.lambda_pre[d] = lambda_pre;
    out.lambda[d] = lambda_pre > 0.0 ? lambda_pre : 0.0;
    out.lambda_clamped[d] = lambda_pre <= 0.0;

    const double beta_pre =
        params.b1 * out.beta[d - 1] + params.b2 * std::exp(-double(prev_stop)) + noise.eta[d];
    out.beta_pre[d] = beta_pre;
    if (config.activation == Activation::Smooth) {
      out.beta[d] = sigmoid(beta_pre);
      out.beta_clamped[d] = false;
    } else {
      out.beta[d] = project(beta_pre, config.beta_min, 1.0);
      out.beta_clamped[d] = beta_pre <= config.beta_min || beta_pre >= 1.0;
    }
  }
}

namespace {

double bce_term(double p, double target, double clip) {
  const double pc = project(p, clip, 1.0 - clip);
  return -(target * std::log(pc) + (1.0 - target) * std::log(1.0 - pc));
}

void check_shapes(const DriverHistory& history, const NoiseDraw& noise,
                  const ForwardOptions& options) {
  history.validate();
  if (noise.eps.size() != history.days() || noise.eta.size() != history.days())
    throw Error(ErrorCategory::Data, "noise draw length must equal the day count");
  if (!(options.model.temperature > 0.0))
    throw Error(ErrorCategory::Config, "temperature must be positive");
  if (!(options.prob_clip > 0.0 && options.prob_clip < 0.5))
    throw Error(ErrorCategory::Config, "probability clip must lie in (0, 0.5)");
  if (options.loss_day >= history.days())
    throw Error(ErrorCategory::Config, "loss day out of range");
}

}  // namespace

void forward_into(ForwardTrace& trace, const DriverHistory& history, const BehaviorParams& params,
                  const NoiseDraw& noise, const ForwardOptions& options) {
  params.validate();
  check_shapes(history, noise, options);

  const Eigen::Index days = history.days();
  const Eigen::Index width = history.width();
  const Eigen::Index last_day = options.loss_day >= 0 ? options.loss_day : days - 1;

  trace.thresholds.resize(days, width);
  trace.cumulative.resize(days, width);
  trace.probs.resize(days, width);
  trace.targets.resize(days, width);
  trace.mask.resize(days, width);
  trace.day_mask_count = ArrayXi::Zero(days);
  trace.last_day = last_day;

  teacher_forced_latents(params, history, noise, options.model, last_day, trace.latent);

  const double inv_temperature = 1.0 / options.model.temperature;
  double loss_sum = 0.0;
  Eigen::Index mask_count = 0;

  const Eigen::Index first_loss_day = options.loss_day >= 0 ? options.loss_day : 0;
  for (Eigen::Index d = first_loss_day; d <= last_day; ++d) {
    const double lambda = trace.latent.lambda[d];
    const double beta = trace.latent.beta[d];
    const int stop = history.stop_count(d);
    const Eigen::Index masked_until =
        options.mask_mode == MaskMode::PrefixPlusOne ? std::min<Eigen::Index>(stop, width - 1)
                                                     : width - 1;

    double cumulative = 0.0;
    double threshold = lambda;  // beta^0 * lambda
    int day_count = 0;
    for (Eigen::Index t = 0; t < width; ++t) {
      cumulative += history.utilities(d, t);
      trace.cumulative(d, t) = cumulative;
      trace.thresholds(d, t) = threshold;
      const double p = sigmoid((threshold - cumulative) * inv_temperature);
      trace.probs(d, t) = p;
      // The probability at slot t models the continue/stop decision after
      // ride t, so it is scored against the next slot's label. The final
      // slot repeats its own label: a day that accepted every offered ride
      // carries no observed stop decision.
      const double target = double(history.labels(d, std::min(t + 1, width - 1)));
      trace.targets(d, t) = target;
      const bool in_mask = t <= masked_until;
      trace.mask(d, t) = in_mask;
      if (in_mask) {
        if (!std::isfinite(p) || !std::isfinite(threshold))
          throw Error(ErrorCategory::Data, "non-finite forward value at day " +
                                               std::to_string(d + 1) + ", slot " +
                                               std::to_string(t + 1));
        loss_sum += bce_term(p, target, options.prob_clip);
        ++day_count;
      }
      threshold *= beta;
    }
    trace.day_mask_count[d] = day_count;
    mask_count += day_count;
  }

  if (mask_count == 0) throw Error(ErrorCategory::Data, "loss mask is empty");
  trace.loss = loss_sum / double(mask_count);
  trace.mask_count = mask_count;
  if (!std::isfinite(trace.loss)) throw Error(ErrorCategory::Data, "loss is not finite");
}

ForwardTrace forward(const DriverHistory& history, const BehaviorParams& params,
                     const NoiseDraw& noise, const ForwardOptions& options) {
  ForwardTrace trace;
  forward_into(trace, history, params, noise, options);
  return trace;
}

double bce_loss(const ArrayXXd& probs, const ArrayXXd& targets, const ArrayXXb& mask,
                double clip) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols() ||
      probs.rows() != mask.rows() || probs.cols() != mask.cols())
    throw Error(ErrorCategory::Data, "bce_loss shapes must match");
  double sum = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index d = 0; d < probs.rows(); ++d) {
    for (Eigen::Index t = 0; t < probs.cols(); ++t) {
      if (!mask(d, t)) continue;
      sum += bce_term(probs(d, t), targets(d, t), clip);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCategory::Data, "loss mask is empty");
  return sum / double(count);
}

Gradients backward(const ForwardTrace& trace, const DriverHistory& history,
                   const BehaviorParams& params, const ForwardOptions& options) {
  if (trace.last_day < 0 || trace.last_day >= history.days() || trace.mask_count == 0)
    throw Error(ErrorCategory::Data, "trace does not match this history");
  if (trace.thresholds.rows() != history.days() || trace.thresholds.cols() != history.width())
    throw Error(ErrorCategory::Data, "trace shape does not match this history");

  const double inv_count = 1.0 / double(trace.mask_count);
  const double inv_temperature = 1.0 / options.model.temperature;
  const double upper_clip = 1.0 - options.prob_clip;

  Gradients grads;
  double adj_lambda = 0.0;  // dLoss / d lambda_d, accumulated in reverse
  double adj_beta = 0.0;

  for (Eigen::Index d = trace.last_day; d >= 0; --d) {
    if (trace.day_mask_count[d] > 0) {
      const double lambda = trace.latent.lambda[d];
      const double beta = trace.latent.beta[d];
      double threshold_grad_sum = 0.0;        // sum_t g_t * beta^t
      double threshold_grad_scaled = 0.0;     // sum_t g_t * t * beta^(t-1)
      for (Eigen::Index t = 0; t < history.width(); ++t) {
        if (!trace.mask(d, t)) continue;
        const double p = trace.probs(d, t);
        if (p <= options.prob_clip || p >= upper_clip) continue;  // loss is flat here
        const double g = (p - trace.targets(d, t)) * inv_count * inv_temperature;
        const double beta_pow = t == 0 ? 1.0 : std::pow(beta, double(t));
        threshold_grad_sum += g * beta_pow;
        if (t > 0) threshold_grad_scaled += g * double(t) * (t == 1 ? 1.0 : std::pow(beta, double(t - 1)));
      }
      adj_lambda += threshold_grad_sum;
      adj_beta += threshold_grad_scaled * lambda;
    }

    if (d == 0) {
      grads.lambda0 = adj_lambda;
      grads.beta0 = adj_beta;
      break;
    }

    const double pass_lambda = trace.latent.lambda_clamped[d] ? 0.0 : 1.0;
    double pass_beta;
    if (options.model.activation == Activation::Smooth) {
      const double b = trace.latent.beta[d];
      pass_beta = b * (1.0 - b);
    } else {
      pass_beta = trace.latent.beta_clamped[d] ? 0.0 : 1.0;
    }

    const double prev_utility = options.model.utility_feedback == UtilityFeedback::FullDay
                                    ? history.full_day_utility(d - 1)
                                    : history.accepted_utility(d - 1);
    const int prev_stop = history.stop_count(d - 1);

    const double lambda_pre_adj = adj_lambda * pass_lambda;
    const double beta_pre_adj = adj_beta * pass_beta;
    grads.a1 += lambda_pre_adj * trace.latent.lambda[d - 1];
    grads.a2 += lambda_pre_adj * prev_utility;
    grads.b1 += beta_pre_adj * trace.latent.beta[d - 1];
    grads.b2 += beta_pre_adj * std::exp(-double(prev_stop));

    adj_lambda = lambda_pre_adj * params.a1;
    adj_beta = beta_pre_adj * params.b1;
  }

  if (!options.initial_state_gradient) {
    grads.lambda0 = 0.0;
    grads.beta0 = 0.0;
  }
  if (!grads.all_finite()) throw Error(ErrorCategory::Data, "gradients are not finite");
  return grads;
}

Gradients finite_diff_gradients(const DriverHistory& history, const BehaviorParams& params,
                                const NoiseDraw& noise, const ForwardOptions& options,
                                double step) {
  if (!(step > 0.0)) throw Error(ErrorCategory::Config, "finite-difference step must be positive");

  auto loss_at = [&](const BehaviorParams& p) { return forward(history, p, noise, options).loss; };
  auto central = [&](auto set_coord) {
    BehaviorParams hi = params;
    BehaviorParams lo = params;
    set_coord(hi, +step);
    set_coord(lo, -step);
    return (loss_at(hi) - loss_at(lo)) / (2.0 * step);
  };

  Gradients g;
  g.a1 = central([](BehaviorParams& p, double h) { p.a1 += h; });
  g.a2 = central([](BehaviorParams& p, double h) { p.a2 += h; });
  g.b1 = central([](BehaviorParams& p, double h) { p.b1 += h; });
  g.b2 = central([](BehaviorParams& p, double h) { p.b2 += h; });
  if (options.initial_state_gradient) {
    g.lambda0 = central([](BehaviorParams& p, double h) { p.lambda0 += h; });
    g.beta0 = central([](BehaviorParams& p, double h) { p.beta0 += h; });
  }
  return g;
}

}  // namespace dds
