#include "cfgflow/gan_engine.hpp"

#include <algorithm>
#include <cmath>

#include "cfgflow/errors.hpp"

namespace cfgflow {

void NatsConfig::validate() const {
  if (outer < 1) throw EngineError("nats: outer iterations must be >= 1");
  if (disc_steps < 1) throw EngineError("nats: K must be >= 1");
  if (batch < 1) throw EngineError("nats: batch must be >= 1");
  std::size_t nd = scheme == Scheme::cts ? 1 : nested;
  if (nd < 1) throw EngineError("nats: N_d must be >= 1");
  if (scheme == Scheme::nats && schedule.length() != nd) {
    throw EngineError("nats: schedule length " + std::to_string(schedule.length()) +
                      " != N_d " + std::to_string(nd));
  }
}

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

double gen_loss(GanLoss loss, const Tensor& d_out, double weight) {
  if (weight <= 0.0) throw EngineError("gen_loss: weight must be positive");
  double acc = 0.0;
  std::size_t n = d_out.size();
  for (std::size_t i = 0; i < n; ++i) {
    double wd = weight * d_out[i];
    switch (loss) {
      case GanLoss::original: acc += softplus(-wd); break;
      case GanLoss::lsgan: acc += 0.5 * (wd - 1.0) * (wd - 1.0); break;
      case GanLoss::wgan:
      case GanLoss::hinge: acc += -wd; break;
    }
  }
  return acc / static_cast<double>(n);
}

double disc_loss(GanLoss loss, const Tensor& d_real, const Tensor& d_fake) {
  if (d_real.size() == 0 || d_fake.size() == 0) throw EngineError("disc_loss: empty batch");
  double lr = 0.0, lf = 0.0;
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    double dr = d_real[i];
    switch (loss) {
      case GanLoss::original: lr += softplus(-dr); break;
      case GanLoss::lsgan: lr += 0.5 * (dr - 1.0) * (dr - 1.0); break;
      case GanLoss::wgan: lr += -dr; break;
      case GanLoss::hinge: lr += std::max(0.0, 1.0 - dr); break;
    }
  }
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    double df = d_fake[i];
    switch (loss) {
      case GanLoss::original: lf += softplus(df); break;
      case GanLoss::lsgan: lf += 0.5 * df * df; break;
      case GanLoss::wgan: lf += df; break;
      case GanLoss::hinge: lf += std::max(0.0, 1.0 + df); break;
    }
  }
  return lr / static_cast<double>(d_real.size()) + lf / static_cast<double>(d_fake.size());
}

std::size_t ScheduleTrace::count(Phase phase) const {
  std::size_t n = 0;
  for (const auto& e : entries) {
    if (e.phase == phase) ++n;
  }
  return n;
}

namespace {

// Builds the discriminator loss on the tape. d_real/d_fake are (n,1)
// output vars of two forward passes.
Var disc_loss_node(Tape& tape, GanLoss loss, Var d_real, Var d_fake) {
  switch (loss) {
    case GanLoss::original:
      return tape.add(tape.mean(tape.softplus(tape.neg(d_real))),
                      tape.mean(tape.softplus(d_fake)));
    case GanLoss::lsgan: {
      Var r = tape.add_scalar(d_real, -1.0);
      return tape.add(tape.scale(tape.mean(tape.mul(r, r)), 0.5),
                      tape.scale(tape.mean(tape.mul(d_fake, d_fake)), 0.5));
    }
    case GanLoss::wgan:
      return tape.sub(tape.mean(d_fake), tape.mean(d_real));
    case GanLoss::hinge:
      return tape.add(tape.mean(tape.relu(tape.add_scalar(tape.neg(d_real), 1.0))),
                      tape.mean(tape.relu(tape.add_scalar(d_fake, 1.0))));
  }
  throw EngineError("unknown loss");
}

Var gen_loss_node(Tape& tape, GanLoss loss, Var d_out, double weight) {
  Var wd = tape.scale(d_out, weight);
  switch (loss) {
    case GanLoss::original:
      return tape.mean(tape.softplus(tape.neg(wd)));
    case GanLoss::lsgan: {
      Var r = tape.add_scalar(wd, -1.0);
      return tape.scale(tape.mean(tape.mul(r, r)), 0.5);
    }
    case GanLoss::wgan:
    case GanLoss::hinge:
      return tape.neg(tape.mean(wd));
  }
  throw EngineError("unknown loss");
}

struct EngineContext {
  Generator& gen;
  Discriminator& disc;
  const Tensor& data;
  const NatsConfig& cfg;
  Rng& rng;

  Tensor real_minibatch() {
    Tensor batch({cfg.batch, data.cols()});
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      std::size_t pick = rng.below(data.rows());
      for (std::size_t j = 0; j < data.cols(); ++j) batch.at(i, j) = data.at(pick, j);
    }
    return batch;
  }

  void disc_update() {
    Tensor z = gen.sample_latent(cfg.batch, rng);
    Tensor real = real_minibatch();
    Tensor fake = gen.net.eval(z);  // detached: only D trains here
    Tape tape;
    ForwardPass real_pass = forward(disc.net, real, tape);
    ForwardPass fake_pass = forward(disc.net, fake, tape);
    Var loss = disc_loss_node(tape, cfg.loss, real_pass.output, fake_pass.output);
    if (!std::isfinite(tape.value(loss)[0])) {
      throw EngineError("discriminator loss is non-finite; step rejected");
    }
    tape.backward_scalar(loss);
    BackwardResult gr = collect_grads(tape, real_pass);
    BackwardResult gf = collect_grads(tape, fake_pass);
    std::vector<Tensor> grads;
    grads.reserve(gr.param_grads.size());
    for (std::size_t i = 0; i < gr.param_grads.size(); ++i) {
      grads.push_back(add(gr.param_grads[i], gf.param_grads[i]));
    }
    optimizer_step(disc.net, grads, disc.opt);
    if (cfg.loss == GanLoss::wgan) clip_weights(disc.net, cfg.wgan_clip);
  }

  void gen_update(double weight) {
    Tensor z = gen.sample_latent(cfg.batch, rng);
    Tape tape;
    ForwardPass gen_pass = forward(gen.net, z, tape);
    ForwardPass disc_pass = forward(disc.net, gen_pass.output, tape);
    Var loss = gen_loss_node(tape, cfg.loss, disc_pass.output, weight);
    if (!std::isfinite(tape.value(loss)[0])) {
      throw EngineError("generator loss is non-finite; step rejected");
    }
    tape.backward_scalar(loss);
    BackwardResult gg = collect_grads(tape, gen_pass);
    optimizer_step(gen.net, gg.param_grads, gen.opt);
  }
};

}  // namespace

ScheduleTrace run_nats(Generator& gen, Discriminator& disc, const Tensor& data,
                       const NatsConfig& cfg, Rng& rng, std::size_t eval_every,
                       const EvalHook& hook) {
  cfg.validate();
  if (data.rows() < cfg.batch) throw EngineError("run_nats: dataset smaller than one batch");
  std::size_t nd = cfg.scheme == Scheme::cts ? 1 : cfg.nested;

  EngineContext ctx{gen, disc, data, cfg, rng};
  ScheduleTrace trace;
  for (std::size_t i = 1; i <= cfg.outer; ++i) {
    for (std::size_t j = 1; j <= nd; ++j) {
      for (std::size_t k = 1; k <= cfg.disc_steps; ++k) {
        ctx.disc_update();
        trace.entries.push_back({Phase::disc, i, j, k, 1.0});
      }
      std::size_t gen_steps = cfg.scheme == Scheme::cts ? 1 : j;
      double w = cfg.scheme == Scheme::nats ? cfg.schedule.weights[j - 1] : 1.0;
      for (std::size_t g = 1; g <= gen_steps; ++g) {
        ctx.gen_update(w);
        trace.entries.push_back({Phase::gen, i, j, g, w});
      }
    }
    if (hook && eval_every > 0 && (i % eval_every == 0 || i == cfg.outer)) hook(i);
  }
  return trace;
}

ScheduleTrace run_cts(Generator& gen, Discriminator& disc, const Tensor& data,
                      const NatsConfig& cfg, Rng& rng, std::size_t eval_every,
                      const EvalHook& hook) {
  NatsConfig cts_cfg = cfg;
  cts_cfg.scheme = Scheme::cts;
  cts_cfg.nested = 1;
  cts_cfg.schedule = WeightSchedule{};
  return run_nats(gen, disc, data, cts_cfg, rng, eval_every, hook);
}

GradientFieldReport nats_gradient_field_check(const Generator& gen, const Discriminator& disc,
                                              const Tensor& z, double weight) {
  auto run = [&](double w) {
    Tape tape;
    ForwardPass gen_pass = forward(gen.net, z, tape);
    ForwardPass disc_pass = forward(disc.net, gen_pass.output, tape);
    Var loss = gen_loss_node(tape, GanLoss::wgan, disc_pass.output, w);
    tape.backward_scalar(loss);
    BackwardResult gg = collect_grads(tape, gen_pass);
    // Sample-space pull-back: adjoint of x = G(z) under the loss.
    Tensor xgrad = tape.adjoint(disc_pass.input);
    return std::make_pair(gg.param_grads, xgrad);
  };

  auto [grads_w, xgrad_w] = run(weight);
  auto [grads_1, xgrad_1] = run(1.0);

  auto rel = [](double a, double b) {
    double denom = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / denom;
  };

  GradientFieldReport report;
  for (std::size_t i = 0; i < grads_w.size(); ++i) {
    for (std::size_t k = 0; k < grads_w[i].size(); ++k) {
      report.max_param_rel_error =
          std::max(report.max_param_rel_error, rel(grads_w[i][k], weight * grads_1[i][k]));
    }
  }

  // Sample-space claim: the gradient at x = G(z) under weight w is
  // -(w/n) * grad_x D(x), so compare against the direct discriminator
  // input gradient.
  DiscOutput d = disc_value_and_input_grad(disc, gen.net.eval(z));
  double factor = -weight / static_cast<double>(z.rows());
  for (std::size_t i = 0; i < xgrad_w.rows(); ++i) {
    for (std::size_t j = 0; j < xgrad_w.cols(); ++j) {
      report.max_direction_rel_error = std::max(
          report.max_direction_rel_error, rel(xgrad_w.at(i, j), factor * d.grads.at(i, j)));
    }
  }
  return report;
}

}  // namespace cfgflow
