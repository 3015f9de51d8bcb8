#include "dds/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dds/rng.hpp"

namespace dds {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCategory::Config, "learning rate must be positive");
  if (samples_R < 1) throw Error(ErrorCategory::Config, "samples_R must be >= 1");
  if (epochs < 1) throw Error(ErrorCategory::Config, "epochs must be >= 1");
  if (noise_std_eps < 0.0 || noise_std_eta < 0.0)
    throw Error(ErrorCategory::Config, "noise standard deviations must be nonnegative");
  if (!(model.temperature > 0.0)) throw Error(ErrorCategory::Config, "temperature must be positive");
  init.validate();
}

SplitMetrics evaluate(const BehaviorParams& params, const DriverHistory& history,
                      const ForwardOptions& options, Eigen::Index begin_day,
                      Eigen::Index end_day) {
  if (begin_day < 0 || end_day > history.days() || begin_day >= end_day)
    throw Error(ErrorCategory::Data, "evaluation day range is empty or out of bounds");

  ForwardOptions full = options;
  full.loss_day = -1;
  const ForwardTrace trace = forward(history, params, NoiseDraw::zero(history.days()), full);

  double loss_sum = 0.0;
  Eigen::Index slot_count = 0;
  Eigen::Index correct = 0;
  Eigen::Index stop_hits = 0;
  double stop_abs_err = 0.0;
  const Eigen::Index width = history.width();

  for (Eigen::Index d = begin_day; d < end_day; ++d) {
    int predicted_stop = int(width);
    bool crossed = false;
    for (Eigen::Index t = 0; t < width; ++t) {
      const double p = trace.probs(d, t);
      if (trace.mask(d, t)) {
        const double pc = project(p, options.prob_clip, 1.0 - options.prob_clip);
        loss_sum += -(trace.targets(d, t) * std::log(pc) +
                      (1.0 - trace.targets(d, t)) * std::log(1.0 - pc));
        correct += (p > 0.5) == (trace.targets(d, t) == 1.0);
        ++slot_count;
      }
      if (!crossed && !(p > 0.5)) {
        predicted_stop = int(t) + 1;
        crossed = true;
      }
    }
    const int observed_stop = history.stop_count(d);
    stop_hits += predicted_stop == observed_stop;
    stop_abs_err += std::abs(predicted_stop - observed_stop);
  }

  SplitMetrics out;
  const double day_count = double(end_day - begin_day);
  out.loss = slot_count > 0 ? loss_sum / double(slot_count) : std::numeric_limits<double>::quiet_NaN();
  out.decision_accuracy = slot_count > 0 ? double(correct) / double(slot_count)
                                         : std::numeric_limits<double>::quiet_NaN();
  out.stop_exact = double(stop_hits) / day_count;
  out.stop_mae = stop_abs_err / day_count;
  return out;
}

LatentError latent_error(const BehaviorParams& learned, const BehaviorParams& truth,
                         const DriverHistory& history, const ModelConfig& config,
                         Eigen::Index begin_day, Eigen::Index end_day) {
  const NoiseDraw zero = NoiseDraw::zero(history.days());
  LatentTrajectory a, b;
  teacher_forced_latents(learned, history, zero, config, history.days() - 1, a);
  teacher_forced_latents(truth, history, zero, config, history.days() - 1, b);
  LatentError out;
  const Eigen::Index len = end_day - begin_day;
  out.lambda = (a.lambda.segment(begin_day, len) - b.lambda.segment(begin_day, len)).abs().mean();
  out.beta = (a.beta.segment(begin_day, len) - b.beta.segment(begin_day, len)).abs().mean();
  return out;
}

int predict_stop(const BehaviorParams& params, const DriverHistory& history,
                 Eigen::Index day_index, const ForwardOptions& options) {
  if (day_index < 0 || day_index >= history.days())
    throw Error(ErrorCategory::Data, "day index out of range");

  LatentTrajectory latent;
  teacher_forced_latents(params, history, NoiseDraw::zero(history.days()), options.model,
                         day_index, latent);
  const double lambda = latent.lambda[day_index];
  const double beta = latent.beta[day_index];
  const double inv_temperature = 1.0 / options.model.temperature;

  double cumulative = 0.0;
  double threshold = lambda;
  for (Eigen::Index t = 0; t < history.width(); ++t) {
    cumulative += history.utilities(day_index, t);
    const double p = sigmoid((threshold - cumulative) * inv_temperature);
    if (!(p > 0.5)) return int(t) + 1;  // continue needs strictly > 0.5; a tie stops
    threshold *= beta;
  }
  return int(history.width());
}

namespace {

struct TrainablePlan {
  bool weights = false;
  bool lambda0 = false;
  bool beta0 = false;
};

TrainablePlan plan_for(const TrainConfig& config) {
  TrainablePlan plan;
  switch (config.model_kind) {
    case ModelKind::DDS:
      plan.weights = true;
      plan.lambda0 = config.train_initial_state;
      plan.beta0 = config.train_initial_state;
      break;
    case ModelKind::DS:
      plan.lambda0 = true;
      plan.beta0 = true;
      break;
    case ModelKind::S:
      plan.lambda0 = true;
      break;
  }
  return plan;
}

void apply_update(BehaviorParams& params, const Gradients& grad, double lr,
                  const TrainablePlan& plan, double beta_min) {
  if (plan.weights) {
    params.a1 -= lr * grad.a1;
    params.a2 -= lr * grad.a2;
    params.b1 -= lr * grad.b1;
    params.b2 -= lr * grad.b2;
  }
  // Projected step: the initial state must stay inside the feasible set the
  // forward pass requires.
  if (plan.lambda0) params.lambda0 = std::max(0.0, params.lambda0 - lr * grad.lambda0);
  if (plan.beta0) params.beta0 = project(params.beta0 - lr * grad.beta0, beta_min, 1.0);
}

void fill_noise(NoiseDraw& noise, Rng& rng, Eigen::Index up_to_day, double std_eps,
                double std_eta) {
  // Day 1 never sees noise; entries beyond up_to_day are left untouched and
  // unread.
  for (Eigen::Index d = 1; d <= up_to_day; ++d) noise.eps[d] = rng.normal(std_eps);
  for (Eigen::Index d = 1; d <= up_to_day; ++d) noise.eta[d] = rng.normal(std_eta);
}

Gradients mean_gradient(const std::vector<Gradients>& samples) {
  Gradients mean;
  for (const Gradients& g : samples) mean.accumulate(g);
  mean.scale(1.0 / double(samples.size()));
  return mean;
}

}  // namespace

TrainReport sbptt_train(const DriverHistory& history, const TrainConfig& config,
                        const std::optional<BehaviorParams>& generator_truth) {
  config.validate();
  history.validate();

  TrainConfig cfg = config;
  if (cfg.model_kind != ModelKind::DDS) {
    cfg.init.a1 = 1.0;
    cfg.init.a2 = 0.0;
    cfg.init.b1 = 1.0;
    cfg.init.b2 = 0.0;
    cfg.noise_std_eps = 0.0;
    cfg.noise_std_eta = 0.0;
    if (cfg.model_kind == ModelKind::S) cfg.init.beta0 = 1.0;
  }

  const Eigen::Index days = history.days();
  const Eigen::Index split =
      (cfg.split_index < 0 || cfg.split_index > days) ? days : cfg.split_index;
  if (split < 1) throw Error(ErrorCategory::Config, "split leaves no training days");
  const bool has_test = split < days;

  const TrainablePlan plan = plan_for(cfg);

  ForwardOptions options;
  options.model = cfg.model;
  options.mask_mode = cfg.mask_mode;
  options.prob_clip = cfg.prob_clip;
  options.initial_state_gradient = plan.lambda0 || plan.beta0;

  BehaviorParams params = cfg.init;
  params.validate();

  Rng rng(cfg.seed);
  NoiseDraw noise = NoiseDraw::zero(days);
  ForwardTrace workspace;
  std::vector<Gradients> sample_grads(std::size_t(cfg.samples_R));
  std::vector<NoiseDraw> frozen;
  // The whole-history update mode restricts the loss to the train part by
  // evaluating that prefix as its own history.
  const DriverHistory train_view{history.utilities.topRows(split),
                                 history.labels.topRows(split)};

  TrainReport report;
  report.initial_params = params;
  report.split_index = split;
  report.has_test = has_test;
  report.has_truth = generator_truth.has_value();
  report.epochs.reserve(std::size_t(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.freeze_noise_per_epoch) {
      frozen.assign(std::size_t(cfg.samples_R), NoiseDraw::zero(days));
      for (NoiseDraw& draw : frozen)
        fill_noise(draw, rng, days - 1, cfg.noise_std_eps, cfg.noise_std_eta);
    }

    auto day_gradients = [&](Eigen::Index loss_day) {
      options.loss_day = int(loss_day);
      for (int r = 0; r < cfg.samples_R; ++r) {
        const NoiseDraw* draw = &noise;
        if (cfg.freeze_noise_per_epoch) {
          draw = &frozen[std::size_t(r)];
        } else {
          fill_noise(noise, rng, loss_day, cfg.noise_std_eps, cfg.noise_std_eta);
        }
        try {
          forward_into(workspace, history, params, *draw, options);
          sample_grads[std::size_t(r)] = backward(workspace, history, params, options);
        } catch (const Error& e) {
          throw Error(ErrorCategory::Divergence,
                      "training diverged at epoch " + std::to_string(epoch + 1) + ", day " +
                          std::to_string(loss_day + 1) + ": " + e.what());
        }
      }
      return mean_gradient(sample_grads);
    };

    if (cfg.update_mode == UpdateMode::PerDayReverse) {
      for (Eigen::Index d = split - 1; d >= 0; --d) {
        const Gradients mean = day_gradients(d);
        apply_update(params, mean, cfg.learning_rate, plan, cfg.model.beta_min);
      }
    } else {
      options.loss_day = -1;
      for (int r = 0; r < cfg.samples_R; ++r) {
        const NoiseDraw* draw = &noise;
        if (cfg.freeze_noise_per_epoch) {
          draw = &frozen[std::size_t(r)];
        } else {
          fill_noise(noise, rng, days - 1, cfg.noise_std_eps, cfg.noise_std_eta);
        }
        NoiseDraw train_noise{draw->eps.head(split), draw->eta.head(split)};
        try {
          forward_into(workspace, train_view, params, train_noise, options);
          sample_grads[std::size_t(r)] = backward(workspace, train_view, params, options);
        } catch (const Error& e) {
          throw Error(ErrorCategory::Divergence, "training diverged at epoch " +
                                                     std::to_string(epoch + 1) + ": " + e.what());
        }
      }
      apply_update(params, mean_gradient(sample_grads), cfg.learning_rate, plan,
                   cfg.model.beta_min);
    }

    if (!std::isfinite(params.a1 + params.a2 + params.b1 + params.b2) ||
        !std::isfinite(params.lambda0 + params.beta0))
      throw Error(ErrorCategory::Divergence,
                  "training diverged at epoch " + std::to_string(epoch + 1) +
                      ": parameters are no longer finite");
    params.validate();

    EpochMetrics metrics;
    metrics.train = evaluate(params, history, options, 0, split);
    if (has_test) metrics.test = evaluate(params, history, options, split, days);
    if (generator_truth) {
      const LatentError train_err =
          latent_error(params, *generator_truth, history, cfg.model, 0, split);
      metrics.train.lambda_error = train_err.lambda;
      metrics.train.beta_error = train_err.beta;
      if (has_test) {
        const LatentError test_err =
            latent_error(params, *generator_truth, history, cfg.model, split, days);
        metrics.test.lambda_error = test_err.lambda;
        metrics.test.beta_error = test_err.beta;
      }
    }
    report.epochs.push_back(metrics);
  }

  report.final_params = params;
  return report;
}

TrainReport train_ds_baseline(const DriverHistory& history, TrainConfig config,
                              const std::optional<BehaviorParams>& generator_truth) {
  config.model_kind = ModelKind::DS;
  return sbptt_train(history, config, generator_truth);
}

}  // namespace dds
