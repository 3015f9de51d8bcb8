#include "dds/simulator.hpp"

#include "dds/rng.hpp"

namespace dds {

ArrayXXd generate_utilities(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ArrayXXd utilities(config.days, config.width);
  for (Eigen::Index d = 0; d < config.days; ++d)
    for (Eigen::Index t = 0; t < config.width; ++t)
      utilities(d, t) = rng.exponential(config.exp_scale);
  return utilities;
}

SimResult generate_driver(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);

  ArrayXXd utilities(config.days, config.width);
  for (Eigen::Index d = 0; d < config.days; ++d)
    for (Eigen::Index t = 0; t < config.width; ++t)
      utilities(d, t) = rng.exponential(config.exp_scale);

  NoiseDraw noise = NoiseDraw::zero(config.days);
  for (Eigen::Index d = 1; d < config.days; ++d) noise.eps[d] = rng.normal(config.noise_std_eps);
  for (Eigen::Index d = 1; d < config.days; ++d) noise.eta[d] = rng.normal(config.noise_std_eta);

  SimulatedDriver sim = simulate_history(config.generator, utilities, noise, config.model);

  SimResult out;
  out.history = std::move(sim.history);
  out.latent = std::move(sim.latent);
  out.truth = config.generator;
  out.noise = std::move(noise);
  return out;
}

}  // namespace dds
