#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dds/rng.hpp"
#include "dds/simulator.hpp"
#include "dds/trainer.hpp"

using namespace dds;

namespace {

// Small deterministic dataset used across trainer tests.
SimResult small_data(std::uint64_t seed = 11, Eigen::Index days = 8, Eigen::Index width = 5) {
  SimConfig sim;
  sim.days = days;
  sim.width = width;
  sim.exp_scale = 4.0;
  sim.generator = BehaviorParams{0.85, 0.2, 0.9, 0.3, 12.0, 0.8};
  sim.noise_std_eps = 0.3;
  sim.noise_std_eta = 0.02;
  sim.seed = seed;
  return generate_driver(sim);
}

bool same_params(const BehaviorParams& a, const BehaviorParams& b) {
  return a.a1 == b.a1 && a.a2 == b.a2 && a.b1 == b.b1 && a.b2 == b.b2 &&
         a.lambda0 == b.lambda0 && a.beta0 == b.beta0;
}

bool same_metrics(const SplitMetrics& a, const SplitMetrics& b) {
  auto eq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return eq(a.loss, b.loss) && eq(a.decision_accuracy, b.decision_accuracy) &&
         eq(a.stop_exact, b.stop_exact) && eq(a.stop_mae, b.stop_mae) &&
         eq(a.lambda_error, b.lambda_error) && eq(a.beta_error, b.beta_error);
}

}  // namespace

TEST_CASE("training is deterministic given the seed") {
  const SimResult data = small_data();
  TrainConfig tc;
  tc.learning_rate = 0.001;
  tc.samples_R = 4;
  tc.epochs = 3;
  tc.noise_std_eps = 0.5;
  tc.noise_std_eta = 0.05;
  tc.seed = 42;
  tc.split_index = 6;
  tc.init = BehaviorParams{0.9, 0.1, 0.9, 0.1, 12.0, 0.8};

  const TrainReport a = sbptt_train(data.history, tc, data.truth);
  const TrainReport b = sbptt_train(data.history, tc, data.truth);
  REQUIRE(a.epochs.size() == b.epochs.size());
  CHECK(same_params(a.final_params, b.final_params));
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(same_metrics(a.epochs[e].train, b.epochs[e].train));
    CHECK(same_metrics(a.epochs[e].test, b.epochs[e].test));
  }
}

TEST_CASE("zero training noise makes the sample count irrelevant") {
  const SimResult data = small_data();
  TrainConfig tc;
  tc.learning_rate = 0.001;
  tc.epochs = 3;
  tc.noise_std_eps = 0.0;
  tc.noise_std_eta = 0.0;
  tc.seed = 5;
  tc.init = BehaviorParams{0.9, 0.1, 0.9, 0.1, 12.0, 0.8};

  tc.samples_R = 1;
  const TrainReport r1 = sbptt_train(data.history, tc);
  tc.samples_R = 8;
  const TrainReport r8 = sbptt_train(data.history, tc);
  CHECK(same_params(r1.final_params, r8.final_params));
}

TEST_CASE("gradient averaging is order-insensitive to 1e-10") {
  const SimResult data = small_data();
  ForwardOptions options;
  options.model.temperature = 2.0;

  Rng rng(99);
  std::vector<Gradients> samples;
  for (int r = 0; r < 32; ++r) {
    NoiseDraw noise = NoiseDraw::zero(data.history.days());
    for (Eigen::Index d = 1; d < data.history.days(); ++d) {
      noise.eps[d] = rng.normal(0.5);
      noise.eta[d] = rng.normal(0.05);
    }
    const ForwardTrace trace = forward(data.history, data.truth, noise, options);
    samples.push_back(backward(trace, data.history, data.truth, options));
  }

  Gradients forward_order;
  for (const Gradients& g : samples) forward_order.accumulate(g);
  forward_order.scale(1.0 / double(samples.size()));

  Gradients reverse_order;
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) reverse_order.accumulate(*it);
  reverse_order.scale(1.0 / double(samples.size()));

  const Eigen::Array<double, 6, 1> gap =
      (forward_order.as_array() - reverse_order.as_array()).abs();
  CHECK(gap.maxCoeff() < 1e-10);
}

TEST_CASE("full-batch descent at a tiny rate never increases the loss") {
  const SimResult data = small_data(3, 6, 5);
  TrainConfig tc;
  tc.learning_rate = 1e-4;
  tc.samples_R = 1;
  tc.epochs = 40;
  tc.noise_std_eps = 0.0;
  tc.noise_std_eta = 0.0;
  tc.update_mode = UpdateMode::FullBatch;
  tc.model.temperature = 2.0;
  tc.init = BehaviorParams{0.9, 0.1, 0.9, 0.1, 10.0, 0.85};

  const TrainReport rep = sbptt_train(data.history, tc);
  for (std::size_t e = 1; e < rep.epochs.size(); ++e)
    CHECK(rep.epochs[e].train.loss <= rep.epochs[e - 1].train.loss + 1e-12);
}

TEST_CASE("per-day reverse updates allow only small transient upticks") {
  const SimResult data = small_data(3, 6, 5);
  TrainConfig tc;
  tc.learning_rate = 1e-4;
  tc.samples_R = 1;
  tc.epochs = 40;
  tc.noise_std_eps = 0.0;
  tc.noise_std_eta = 0.0;
  tc.update_mode = UpdateMode::PerDayReverse;
  tc.model.temperature = 2.0;
  tc.init = BehaviorParams{0.9, 0.1, 0.9, 0.1, 10.0, 0.85};

  const TrainReport rep = sbptt_train(data.history, tc);
  for (std::size_t e = 1; e < rep.epochs.size(); ++e)
    CHECK(rep.epochs[e].train.loss <= rep.epochs[e - 1].train.loss * 1.01);
}

TEST_CASE("saturated-correct predictions are a fixed point") {
  // huge margins saturate and clip every slot: the exact gradient is zero
  ArrayXXd utilities(3, 3);
  utilities << 60, 60, 60, 55, 65, 60, 70, 50, 60;
  BehaviorParams p;
  p.a1 = 1.0;
  p.a2 = 0.0;
  p.b1 = 1.0;
  p.b2 = 0.0;
  p.lambda0 = 100.0;
  p.beta0 = 0.9;
  const SimulatedDriver sim = simulate_history(p, utilities, NoiseDraw::zero(3));

  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.samples_R = 1;
  tc.epochs = 5;
  tc.noise_std_eps = 0.0;
  tc.noise_std_eta = 0.0;
  tc.init = p;
  const TrainReport rep = sbptt_train(sim.history, tc);
  CHECK(std::abs(rep.final_params.a1 - p.a1) <= 1e-6);
  CHECK(std::abs(rep.final_params.a2 - p.a2) <= 1e-6);
  CHECK(std::abs(rep.final_params.b1 - p.b1) <= 1e-6);
  CHECK(std::abs(rep.final_params.b2 - p.b2) <= 1e-6);
}

TEST_CASE("larger sample counts shrink gradient variance") {
  const SimResult data = small_data(21, 6, 5);
  ForwardOptions options;
  options.model.temperature = 3.0;
  options.loss_day = 4;

  auto averaged_gradient = [&](int R, std::uint64_t seed) {
    Rng rng(seed);
    Gradients mean;
    for (int r = 0; r < R; ++r) {
      NoiseDraw noise = NoiseDraw::zero(data.history.days());
      for (Eigen::Index d = 1; d <= 4; ++d) {
        noise.eps[d] = rng.normal(1.0);
        noise.eta[d] = rng.normal(0.3);
      }
      const ForwardTrace trace = forward(data.history, data.truth, noise, options);
      mean.accumulate(backward(trace, data.history, data.truth, options));
    }
    mean.scale(1.0 / double(R));
    return mean;
  };

  auto variance_over_seeds = [&](int R) {
    const int n = 50;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < n; ++s) {
      const double v = averaged_gradient(R, 1000 + std::uint64_t(s)).a2;
      sum += v;
      sum2 += v * v;
    }
    return sum2 / n - (sum / n) * (sum / n);
  };

  const double var1 = variance_over_seeds(1);
  const double var32 = variance_over_seeds(32);
  REQUIRE(var1 > 0.0);
  CHECK(var32 < var1);
}

TEST_CASE("evaluate scores the generator perfectly on its own noiseless data") {
  SimConfig sim;
  sim.days = 40;
  sim.width = 8;
  sim.exp_scale = 4.0;
  sim.generator = BehaviorParams{0.85, 0.2, 0.9, 0.3, 12.0, 0.8};
  sim.noise_std_eps = 0.0;
  sim.noise_std_eta = 0.0;
  sim.seed = 2;
  const SimResult data = generate_driver(sim);

  const SplitMetrics m = evaluate(data.truth, data.history);
  CHECK(m.decision_accuracy == 1.0);
  CHECK(m.stop_exact == 1.0);
  CHECK(m.stop_mae == 0.0);
}

TEST_CASE("a coin-flip predictor on all-stop targets scores ln 2") {
  // every day stops at the first ride, so every continue target is zero
  ArrayXXd utilities = ArrayXXd::Constant(4, 5, 2.0);
  ArrayXXi labels = ArrayXXi::Zero(4, 5);
  labels.col(0) = 1;
  DriverHistory history{utilities, labels};

  BehaviorParams p;
  p.lambda0 = 0.0;  // thresholds are zero; cumulative utility is positive
  p.beta0 = 1.0;
  ForwardOptions options;
  options.model.temperature = 1e9;  // probabilities sit just under one half

  const SplitMetrics m = evaluate(p, history, options);
  CHECK(m.decision_accuracy == 1.0);
  CHECK(m.loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("predict_stop stays within range and matches the stopping rule") {
  Rng rng(61);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index days = 1 + Eigen::Index(rng.below(4));
    const Eigen::Index width = 2 + Eigen::Index(rng.below(5));
    SimConfig sim;
    sim.days = days;
    sim.width = width;
    sim.exp_scale = 1.0 + 4.0 * rng.uniform01();
    sim.generator = BehaviorParams{0.7 + 0.3 * rng.uniform01(), 0.3 * rng.uniform01(),
                                   0.7 + 0.3 * rng.uniform01(), 0.3 * rng.uniform01(),
                                   10.0 * rng.uniform01(), 0.2 + 0.8 * rng.uniform01()};
    sim.noise_std_eps = 0.2;
    sim.noise_std_eta = 0.05;
    sim.seed = rng.engine()();
    const SimResult data = generate_driver(sim);

    const Eigen::Index day = Eigen::Index(rng.below(std::uint64_t(days)));
    const int predicted = predict_stop(data.truth, data.history, day);
    CHECK(predicted >= 1);
    CHECK(predicted <= int(width));

    // same latent state, independent route through the stopping rule
    LatentTrajectory latent;
    teacher_forced_latents(data.truth, data.history, NoiseDraw::zero(days), ForwardOptions{}.model,
                           day, latent);
    const ArrayXd day_utilities = data.history.utilities.row(day).transpose();
    const std::optional<int> stop =
        stopping_task(day_utilities, latent.lambda[day], latent.beta[day]);
    CHECK(predicted == stop.value_or(int(width)));
  }
}

TEST_CASE("identity-restricted training reproduces the static baseline exactly") {
  const SimResult data = small_data(17, 10, 5);
  TrainConfig tc;
  tc.learning_rate = 0.005;
  tc.samples_R = 4;  // ignored: the restriction forces zero noise
  tc.epochs = 4;
  tc.seed = 9;
  tc.split_index = 8;
  tc.init = BehaviorParams{0.7, 0.3, 0.7, 0.3, 9.0, 0.9};  // overwritten by the restriction

  tc.model_kind = ModelKind::DS;
  const TrainReport via_kind = sbptt_train(data.history, tc, data.truth);
  const TrainReport via_baseline = train_ds_baseline(data.history, tc, data.truth);

  REQUIRE(via_kind.epochs.size() == via_baseline.epochs.size());
  CHECK(same_params(via_kind.final_params, via_baseline.final_params));
  for (std::size_t e = 0; e < via_kind.epochs.size(); ++e)
    CHECK(same_metrics(via_kind.epochs[e].train, via_baseline.epochs[e].train));

  // the restriction froze the weights at the identity recurrence
  CHECK(via_kind.final_params.a1 == 1.0);
  CHECK(via_kind.final_params.a2 == 0.0);
  CHECK(via_kind.final_params.b1 == 1.0);
  CHECK(via_kind.final_params.b2 == 0.0);
  // and the initial state moved
  CHECK(via_kind.final_params.lambda0 != 9.0);
}

TEST_CASE("the S restriction pins the discount factor at one") {
  const SimResult data = small_data(29, 10, 5);
  TrainConfig tc;
  tc.learning_rate = 0.005;
  tc.samples_R = 1;
  tc.epochs = 4;
  tc.seed = 9;
  tc.model_kind = ModelKind::S;
  tc.init = BehaviorParams{1.0, 0.0, 1.0, 0.0, 9.0, 0.5};  // beta0 overwritten to 1

  const TrainReport rep = sbptt_train(data.history, tc);
  CHECK(rep.final_params.beta0 == 1.0);
  CHECK(rep.initial_params.beta0 == 1.0);
  CHECK(rep.final_params.a1 == 1.0);
  CHECK(rep.final_params.lambda0 != 9.0);
}

TEST_CASE("static-generator parameters are recovered within five percent") {
  SimConfig sim;
  sim.days = 200;
  sim.width = 8;
  sim.exp_scale = 5.0;
  sim.generator = BehaviorParams{1.0, 0.0, 1.0, 0.0, 30.0, 0.8};
  sim.noise_std_eps = 0.0;
  sim.noise_std_eta = 0.0;
  sim.seed = 7;
  const SimResult data = generate_driver(sim);

  TrainConfig tc;
  tc.learning_rate = 0.005;
  tc.samples_R = 1;
  tc.epochs = 4000;
  tc.noise_std_eps = 0.0;
  tc.noise_std_eta = 0.0;
  tc.seed = 3;
  tc.model.temperature = 1.0;
  tc.mask_mode = MaskMode::PrefixPlusOne;
  tc.model_kind = ModelKind::DS;
  tc.init = BehaviorParams{1.0, 0.0, 1.0, 0.0, 45.0, 0.68};

  const TrainReport rep = train_ds_baseline(data.history, tc);
  CHECK(std::abs(rep.final_params.lambda0 - 30.0) / 30.0 < 0.05);
  CHECK(std::abs(rep.final_params.beta0 - 0.8) / 0.8 < 0.05);
}

TEST_CASE("training rejects invalid configurations") {
  const SimResult data = small_data();
  TrainConfig tc;
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(sbptt_train(data.history, tc), Error);
  tc.learning_rate = 0.01;
  tc.samples_R = 0;
  CHECK_THROWS_AS(sbptt_train(data.history, tc), Error);
  tc.samples_R = 1;
  tc.epochs = 0;
  CHECK_THROWS_AS(sbptt_train(data.history, tc), Error);
}

TEST_CASE("divergence is reported with its epoch") {
  // day 1 carries an astronomically large accepted utility; the first update
  // drives a2 toward continuing (all-ones targets), so the next rollout
  // overflows the day-2 target to infinity
  ArrayXXd utilities(2, 2);
  utilities << 1e200, 1e200, 1.0, 1.0;
  ArrayXXi labels(2, 2);
  labels << 1, 1, 1, 1;
  DriverHistory history{utilities, labels};

  TrainConfig tc;
  tc.learning_rate = 1e150;
  tc.samples_R = 1;
  tc.epochs = 2;
  tc.noise_std_eps = 0.0;
  tc.noise_std_eta = 0.0;
  tc.init = BehaviorParams{0.9, 0.0, 0.9, 0.1, 3.0, 0.9};
  try {
    sbptt_train(history, tc);
    FAIL("expected a divergence error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Divergence);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}
