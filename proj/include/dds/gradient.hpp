#pragma once

#include "dds/model.hpp"
#include "dds/types.hpp"

namespace dds {

struct ForwardOptions {
  ModelConfig model;
  MaskMode mask_mode = MaskMode::AllSlots;
  double prob_clip = 1e-7;  // probabilities are clipped to [clip, 1-clip] inside the loss
  int loss_day = -1;        // restrict the loss to one 0-based day; -1 keeps every day
  bool initial_state_gradient = true;  // report d_lambda0 / d_beta0
};

// Everything one noise-conditioned forward pass produces. `probs` holds the
// raw sigmoid outputs; clipping happens only inside the loss. `targets` is
// the continue/stop decision each probability models: the following slot's
// label, with the last label repeated for days whose every offered ride was
// accepted. Rows beyond `last_day` are not written when the loss is
// restricted to a single day.
struct ForwardTrace {
  LatentTrajectory latent;
  ArrayXXd thresholds;
  ArrayXXd cumulative;
  ArrayXXd probs;
  ArrayXXd targets;
  ArrayXXb mask;
  ArrayXi day_mask_count;
  Eigen::Index last_day = -1;
  double loss = 0.0;
  Eigen::Index mask_count = 0;
};

struct Gradients {
  double a1 = 0.0;
  double a2 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double lambda0 = 0.0;
  double beta0 = 0.0;

  Eigen::Array<double, 6, 1> as_array() const;
  static Gradients from_array(const Eigen::Array<double, 6, 1>& v);
  void accumulate(const Gradients& other);
  void scale(double factor);
  bool all_finite() const;
};

// Teacher-forced latent rollout over days [0, up_to_day]: each day's
// recurrence is fed the observed previous-day totals from `history`, never a
// model prediction. Day 1 takes (lambda0, beta0) directly.
void teacher_forced_latents(const BehaviorParams& params, const DriverHistory& history,
                            const NoiseDraw& noise, const ModelConfig& config,
                            Eigen::Index up_to_day, LatentTrajectory& out);

// Noise-conditioned forward pass: latent rollout, per-slot thresholds and
// decision probabilities, and the masked mean binary cross-entropy loss.
ForwardTrace forward(const DriverHistory& history, const BehaviorParams& params,
                     const NoiseDraw& noise, const ForwardOptions& options = {});

// Same, writing into a caller-owned trace to avoid reallocation in hot loops.
void forward_into(ForwardTrace& trace, const DriverHistory& history, const BehaviorParams& params,
                  const NoiseDraw& noise, const ForwardOptions& options = {});

// Mean over masked slots of -[z ln p + (1-z) ln(1-p)] with p clipped to
// [clip, 1-clip]. Errors on an empty mask.
double bce_loss(const ArrayXXd& probs, const ArrayXXd& targets, const ArrayXXb& mask,
                double clip = 1e-7);

// Exact reverse-mode gradient of trace.loss with respect to the weights and
// (optionally) the initial state. Projections pass gradient through only
// where the forward pass was unclamped; a pre-activation exactly on the
// boundary contributes zero. Probabilities clipped inside the loss also
// contribute zero, which keeps the gradient the true derivative of the
// computed loss.
Gradients backward(const ForwardTrace& trace, const DriverHistory& history,
                   const BehaviorParams& params, const ForwardOptions& options = {});

// Central finite differences of forward().loss in each parameter coordinate,
// with the noise draw frozen on both sides of every difference. Verification
// oracle for backward(); requires params at distance > step from the
// feasible-set boundary.
Gradients finite_diff_gradients(const DriverHistory& history, const BehaviorParams& params,
                                const NoiseDraw& noise, const ForwardOptions& options, double step);

}  // namespace dds
