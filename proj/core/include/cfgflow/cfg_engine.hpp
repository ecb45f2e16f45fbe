#pragma once

#include "cfgflow/metrics.hpp"
#include "cfgflow/models.hpp"
#include "cfgflow/schedules.hpp"

namespace cfgflow {

/// A batch of points being transported, with the latent codes that
/// produced them and the number of flow steps applied so far.
struct ParticleSet {
  Tensor z;             // (n, k) latent codes
  Tensor x;             // (n, d) current positions
  std::size_t step = 0;
};

enum class DeltaMode { constant, computed };
enum class Phi0 { identity, sign };

struct CfgConfig {
  std::size_t flow_steps = 15;   // M
  std::size_t disc_updates = 1;  // U, discriminator refreshes per flow step
  std::size_t examples = 640;    // N, particles transported per epoch
  std::size_t batch = 64;        // B, minibatch for discriminator updates
  double eta_flow = 0.25;
  WeightSchedule schedule;       // length must equal flow_steps

  DeltaMode delta_mode = DeltaMode::constant;
  double delta_value = 1.0;      // constant-mode per-row value
  double s_scale = 1.0;
  Phi0 phi0 = Phi0::identity;
  double exp_cap = 50.0;         // cap on D before exponentiation (computed mode)

  std::size_t distill_passes = 5;

  void validate() const;
};

/// Per-flow-step multiplier. Constant mode: s_scale * value per row.
/// Computed mode (KL shaping, f = -ln): s_scale * exp(D(x)), with D
/// capped at `exp_cap`; `clamped` reports whether the cap fired.
Tensor delta_values(const Tensor& d_values, DeltaMode mode, double constant_value,
                    double s_scale, double exp_cap, bool* clamped = nullptr);

struct FlowStepRecord {
  std::size_t step = 0;          // 1-based m
  double weight = 0.0;           // w_m
  double mean_move_norm = 0.0;   // mean ||move|| over particles
  double divergence = 0.0;       // fitted-Gaussian KL to the reference, NaN if none
  bool delta_clamped = false;
  Tensor move;                   // (n, d) applied displacement
  Tensor x_after;                // particle snapshot
};

struct FlowTrace {
  Tensor x0;
  std::vector<FlowStepRecord> steps;
  double final_distill_loss = 0.0;
  double last_disc_loss = 0.0;

  const Tensor& x_final() const;
};

/// One Euler step x += eta * w * delta(x) * phi0(grad D(x)); increments
/// the particle step index. Throws EngineError if the move is non-finite
/// (particles are left untouched).
FlowStepRecord flow_step(ParticleSet& particles, const DiscField& field, double weight,
                         const CfgConfig& cfg);

/// One training epoch: draw latents, push x0 = G(z) through the
/// M-step weighted flow with U discriminator refreshes per step, then
/// regress G onto the transported particles. The divergence column uses
/// the moment fit of `data` as reference.
FlowTrace run_cfg_epoch(Generator& gen, Discriminator& disc, const Tensor& data,
                        const CfgConfig& cfg, Rng& rng);

/// Sum of recorded per-step moves per particle; telescopes to
/// x_final - x0 up to rounding.
Tensor accumulated_displacement(const FlowTrace& trace);

enum class RefitCadence { per_step, per_epoch };

/// Particle flow driven by the closed-form optimal discriminator of the
/// (target, current fit) pair instead of a trained network.
struct AnalyticFlowConfig {
  std::size_t particles = 2000;
  double eta_flow = 0.1;
  WeightSchedule schedule;
  std::size_t epochs = 1;        // schedule sweeps
  RefitCadence refit = RefitCadence::per_step;
  DeltaMode delta_mode = DeltaMode::constant;
  double delta_value = 1.0;
  double s_scale = 1.0;
  Phi0 phi0 = Phi0::identity;
  double exp_cap = 50.0;
};

struct AnalyticFlowResult {
  std::vector<double> kl;  // fitted KL to target, length epochs*steps + 1
  Tensor x;                // final particles
};

AnalyticFlowResult annealed_analytic_flow(const GaussianComponent& start,
                                          const GaussianMixture& target,
                                          const AnalyticFlowConfig& cfg, Rng& rng);

/// Unit-weight analytic flow: particles follow
/// score(target) - score(per-step moment fit), and the returned curve is
/// the closed-form KL of the fit to the target at every step.
AnalyticFlowResult ideal_score_flow(const GaussianComponent& start,
                                    const GaussianMixture& target, std::size_t steps,
                                    double eta_flow, std::size_t particles, Rng& rng);

}  // namespace cfgflow
