#include "cfgflow/cfg_engine.hpp"

#include <cmath>
#include <limits>

#include "cfgflow/errors.hpp"

namespace cfgflow {

void CfgConfig::validate() const {
  if (flow_steps < 1) throw EngineError("cfg: flow_steps must be >= 1");
  if (disc_updates < 1) throw EngineError("cfg: disc_updates must be >= 1");
  if (batch < 1 || examples < batch) {
    throw EngineError("cfg: need examples >= batch >= 1");
  }
  if (eta_flow <= 0.0) throw EngineError("cfg: eta_flow must be positive");
  if (schedule.length() != flow_steps) {
    throw EngineError("cfg: schedule length " + std::to_string(schedule.length()) +
                      " != flow_steps " + std::to_string(flow_steps));
  }
}

Tensor delta_values(const Tensor& d_values, DeltaMode mode, double constant_value,
                    double s_scale, double exp_cap, bool* clamped) {
  if (clamped) *clamped = false;
  Tensor out({d_values.size()});
  if (mode == DeltaMode::constant) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s_scale * constant_value;
    return out;
  }
  // computed mode with the KL shaping f = -ln: delta = s * k * (1/k^2)
  // with k = exp(-D), i.e. s * exp(D).
  for (std::size_t i = 0; i < out.size(); ++i) {
    double d = d_values[i];
    if (d > exp_cap) {
      d = exp_cap;
      if (clamped) *clamped = true;
    }
    out[i] = s_scale * std::exp(d);
  }
  return out;
}

const Tensor& FlowTrace::x_final() const {
  if (steps.empty()) return x0;
  return steps.back().x_after;
}

FlowStepRecord flow_step(ParticleSet& particles, const DiscField& field, double weight,
                         const CfgConfig& cfg) {
  if (particles.step >= cfg.flow_steps) {
    throw EngineError("flow_step: particle set already completed " +
                      std::to_string(cfg.flow_steps) + " steps");
  }
  DiscOutput out = field(particles.x);
  FlowStepRecord rec;
  rec.weight = weight;
  Tensor delta = delta_values(out.values, cfg.delta_mode, cfg.delta_value, cfg.s_scale,
                              cfg.exp_cap, &rec.delta_clamped);

  std::size_t n = particles.x.rows(), d = particles.x.cols();
  Tensor move({n, d});
  double scale_base = cfg.eta_flow * weight;
  double norm_acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double g = out.grads.at(i, j);
      double dir = cfg.phi0 == Phi0::identity ? g : (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
      double mv = scale_base * delta[i] * dir;
      move.at(i, j) = mv;
      row_norm2 += mv * mv;
    }
    norm_acc += std::sqrt(row_norm2);
  }
  if (!move.all_finite()) {
    throw EngineError("flow_step: non-finite move at step " +
                      std::to_string(particles.step + 1) + " (weight " +
                      std::to_string(weight) + "); step rejected");
  }
  particles.x = add(particles.x, move);
  particles.step++;
  rec.step = particles.step;
  rec.mean_move_norm = n ? norm_acc / static_cast<double>(n) : 0.0;
  rec.divergence = std::numeric_limits<double>::quiet_NaN();
  rec.move = std::move(move);
  rec.x_after = particles.x;
  return rec;
}

FlowTrace run_cfg_epoch(Generator& gen, Discriminator& disc, const Tensor& data,
                        const CfgConfig& cfg, Rng& rng) {
  cfg.validate();
  if (data.rows() < cfg.batch) {
    throw EngineError("run_cfg_epoch: data budget smaller than one minibatch");
  }

  ParticleSet particles;
  particles.z = gen.sample_latent(cfg.examples, rng);
  particles.x = gen.net.eval(particles.z);
  particles.step = 0;

  FlowTrace trace;
  trace.x0 = particles.x;
  GaussianFit data_fit = GaussianFit::from_points(data);
  GaussianComponent data_ref = data_fit.as_component();
  DiscField field = make_field(disc);

  auto minibatch = [&](const Tensor& pool) {
    Tensor batch({cfg.batch, pool.cols()});
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      std::size_t pick = rng.below(pool.rows());
      for (std::size_t j = 0; j < pool.cols(); ++j) batch.at(i, j) = pool.at(pick, j);
    }
    return batch;
  };

  for (std::size_t m = 0; m < cfg.flow_steps; ++m) {
    for (std::size_t u = 0; u < cfg.disc_updates; ++u) {
      trace.last_disc_loss = logistic_disc_update(disc, minibatch(data), minibatch(particles.x));
    }
    FlowStepRecord rec = flow_step(particles, field, cfg.schedule.weights[m], cfg);
    rec.divergence = kl_gaussians(GaussianFit::from_points(particles.x).as_component(), data_ref);
    trace.steps.push_back(std::move(rec));
  }

  // Distill the generator onto the transported particles in minibatch
  // passes; a final full-batch evaluation reports the residual.
  for (std::size_t pass = 0; pass < cfg.distill_passes; ++pass) {
    for (std::size_t off = 0; off + cfg.batch <= cfg.examples; off += cfg.batch) {
      Tensor zb({cfg.batch, particles.z.cols()});
      Tensor xb({cfg.batch, particles.x.cols()});
      for (std::size_t i = 0; i < cfg.batch; ++i) {
        for (std::size_t j = 0; j < particles.z.cols(); ++j) zb.at(i, j) = particles.z.at(off + i, j);
        for (std::size_t j = 0; j < particles.x.cols(); ++j) xb.at(i, j) = particles.x.at(off + i, j);
      }
      distill_generator(gen, zb, xb, 1);
    }
  }
  trace.final_distill_loss = distill_generator(gen, particles.z, particles.x, 0);
  return trace;
}

Tensor accumulated_displacement(const FlowTrace& trace) {
  if (trace.steps.empty()) throw EngineError("accumulated_displacement: empty trace");
  Tensor acc = Tensor::zeros(trace.x0.shape());
  for (const auto& rec : trace.steps) {
    if (rec.move.empty()) throw EngineError("accumulated_displacement: incomplete trace");
    acc = add(acc, rec.move);
  }
  return acc;
}

AnalyticFlowResult annealed_analytic_flow(const GaussianComponent& start,
                                          const GaussianMixture& target,
                                          const AnalyticFlowConfig& cfg, Rng& rng) {
  if (cfg.particles < 2) throw EngineError("analytic flow needs at least 2 particles");
  if (cfg.schedule.length() < 1) throw EngineError("analytic flow: empty schedule");

  GaussianMixture start_mix = GaussianMixture::single(start);
  ParticleSet particles;
  particles.x = start_mix.sample(cfg.particles, rng);
  particles.z = particles.x;  // flow without a generator: provenance is the start draw

  GaussianComponent target_ref =
      target.components().size() == 1 ? target.components().front() : target.moment_match();

  CfgConfig step_cfg;
  step_cfg.flow_steps = cfg.schedule.length() * cfg.epochs;
  step_cfg.eta_flow = cfg.eta_flow;
  step_cfg.delta_mode = cfg.delta_mode;
  step_cfg.delta_value = cfg.delta_value;
  step_cfg.s_scale = cfg.s_scale;
  step_cfg.phi0 = cfg.phi0;
  step_cfg.exp_cap = cfg.exp_cap;
  step_cfg.schedule = constant_schedule(step_cfg.flow_steps, 1.0);  // weights passed per step

  AnalyticFlowResult result;
  GaussianComponent fit = GaussianFit::from_points(particles.x).as_component();
  result.kl.push_back(kl_gaussians(fit, target_ref));

  // A diverging flow (non-finite or astronomically spread particles) is
  // reported as +inf divergence for the remaining steps, not an abort.
  const double kDivergedKl = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::size_t total_steps = cfg.schedule.length() * cfg.epochs;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !diverged; ++epoch) {
    GaussianComponent epoch_fit = fit;
    for (std::size_t m = 0; m < cfg.schedule.length(); ++m) {
      const GaussianComponent& pg =
          cfg.refit == RefitCadence::per_step ? fit : epoch_fit;
      try {
        AnalyticDiscriminator disc(target, GaussianMixture::single(pg));
        flow_step(particles, make_field(disc), cfg.schedule.weights[m], step_cfg);
        fit = GaussianFit::from_points(particles.x).as_component();
        result.kl.push_back(kl_gaussians(fit, target_ref));
      } catch (const std::exception&) {
        diverged = true;
        break;
      }
      if (!std::isfinite(result.kl.back())) {
        diverged = true;
        break;
      }
    }
  }
  while (result.kl.size() < total_steps + 1) result.kl.push_back(kDivergedKl);
  result.x = particles.x;
  return result;
}

AnalyticFlowResult ideal_score_flow(const GaussianComponent& start,
                                    const GaussianMixture& target, std::size_t steps,
                                    double eta_flow, std::size_t particles, Rng& rng) {
  if (steps < 1) throw EngineError("ideal_score_flow: steps must be >= 1");
  AnalyticFlowConfig cfg;
  cfg.particles = particles;
  cfg.eta_flow = eta_flow;
  cfg.schedule = constant_schedule(steps, 1.0);
  cfg.epochs = 1;
  cfg.refit = RefitCadence::per_step;
  return annealed_analytic_flow(start, target, cfg, rng);
}

}  // namespace cfgflow
