#pragma once

#include <functional>

#include "cfgflow/models.hpp"
#include "cfgflow/schedules.hpp"

namespace cfgflow {

enum class GanLoss { original, lsgan, wgan, hinge };
enum class Scheme { cts, nts, nats };

struct NatsConfig {
  Scheme scheme = Scheme::nats;
  std::size_t outer = 2000;      // N
  std::size_t disc_steps = 1;    // K
  std::size_t nested = 5;        // N_d (forced to 1 for cts)
  WeightSchedule schedule;       // length N_d; used by nats only
  GanLoss loss = GanLoss::original;
  std::size_t batch = 64;        // B
  double wgan_clip = 0.05;

  void validate() const;
};

/// Generator objective on the weighted discriminator output w * d:
///   original -> mean softplus(-w d)   (non-saturating form)
///   lsgan    -> mean 0.5 (w d - 1)^2
///   wgan     -> -mean(w d)
///   hinge    -> -mean(w d)
double gen_loss(GanLoss loss, const Tensor& d_out, double weight);

/// Discriminator objective:
///   original -> mean softplus(-d_real) + mean softplus(d_fake)
///   lsgan    -> 0.5 mean (d_real - 1)^2 + 0.5 mean d_fake^2
///   wgan     -> mean d_fake - mean d_real   (weights clipped after step)
///   hinge    -> mean relu(1 - d_real) + mean relu(1 + d_fake)
double disc_loss(GanLoss loss, const Tensor& d_real, const Tensor& d_fake);

enum class Phase { disc, gen };

struct TraceEntry {
  Phase phase;
  std::size_t outer = 0;     // 1-based outer iteration
  std::size_t nested = 0;    // 1-based j (1 for cts)
  std::size_t substep = 0;   // 1-based step within the phase
  double weight = 1.0;       // weight applied to D's output (gen phases)
};

struct ScheduleTrace {
  std::vector<TraceEntry> entries;

  std::size_t count(Phase phase) const;
};

/// Invoked after every evaluation-cadence boundary; receives the 1-based
/// outer iteration (0 means "before training").
using EvalHook = std::function<void(std::size_t outer)>;

/// Nested (annealed) training. Per outer iteration i, for j = 1..N_d:
/// K discriminator steps, then j generator steps, each generator step
/// weighting D's output by schedule[j] (nats) or 1 (nts). cts runs the
/// same loop with N_d = 1. Minibatches are freshly sampled per phase.
ScheduleTrace run_nats(Generator& gen, Discriminator& disc, const Tensor& data,
                       const NatsConfig& cfg, Rng& rng, std::size_t eval_every = 0,
                       const EvalHook& hook = nullptr);

/// Alternating baseline: K discriminator steps then one generator step
/// per outer iteration. Identical to run_nats with N_d = 1.
ScheduleTrace run_cts(Generator& gen, Discriminator& disc, const Tensor& data,
                      const NatsConfig& cfg, Rng& rng, std::size_t eval_every = 0,
                      const EvalHook& hook = nullptr);

struct GradientFieldReport {
  double max_param_rel_error = 0.0;      // grads of -mean(w D(G(z))) vs w * grads at w=1
  double max_direction_rel_error = 0.0;  // sample-space direction vs w * grad D
};

/// Verifies, for the objective linear in D's output, that the
/// generator's gradient field under weight w equals w times the
/// unweighted field, in both parameter space and sample space.
GradientFieldReport nats_gradient_field_check(const Generator& gen, const Discriminator& disc,
                                              const Tensor& z, double weight);

}  // namespace cfgflow
