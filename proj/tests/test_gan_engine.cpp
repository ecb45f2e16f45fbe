#include <doctest.h>

#include <cmath>

#include "cfgflow/dataset.hpp"
#include "cfgflow/errors.hpp"
#include "cfgflow/gan_engine.hpp"

using namespace cfgflow;

namespace {

struct Rig {
  Generator gen;
  Discriminator disc;
  Tensor data;

  static Rig make(std::uint64_t seed, double lr = 2e-4) {
    Rng rng(seed);
    Rig rig{Generator::mlp(4, {16, 2}, Activation::leaky_relu,
                           OptimizerState::adam(lr, 0.5, 0.999), rng),
            Discriminator::mlp({2, 16, 1}, Activation::leaky_relu,
                               OptimizerState::adam(lr, 0.5, 0.999), rng),
            Tensor()};
    DatasetSpec spec;
    spec.kind = DatasetKind::ring;
    spec.samples = 512;
    rig.data = make_dataset(spec, rng).samples;
    return rig;
  }
};

bool same_params(const NetParams& a, const NetParams& b) {
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (max_abs_diff(a.layers[l].weight, b.layers[l].weight) != 0.0) return false;
    if (max_abs_diff(a.layers[l].bias, b.layers[l].bias) != 0.0) return false;
  }
  return true;
}

NatsConfig small_config(Scheme scheme, std::size_t outer, std::size_t k, std::size_t nd) {
  NatsConfig cfg;
  cfg.scheme = scheme;
  cfg.outer = outer;
  cfg.disc_steps = k;
  cfg.nested = nd;
  cfg.batch = 16;
  cfg.loss = GanLoss::original;
  if (scheme == Scheme::nats) {
    cfg.schedule = nd >= 2 ? geometric_schedule(nd, 1.0, 0.01) : constant_schedule(1, 1.0);
  }
  return cfg;
}

}  // namespace

TEST_CASE("gen_loss values across the loss zoo") {
  Tensor d13({2}, {1.0, 3.0});
  CHECK(gen_loss(GanLoss::wgan, d13, 2.0) == doctest::Approx(-4.0));
  CHECK(gen_loss(GanLoss::hinge, d13, 2.0) == doctest::Approx(-4.0));

  Tensor zero({3}, {0.0, 0.0, 0.0});
  CHECK(gen_loss(GanLoss::original, zero, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(gen_loss(GanLoss::lsgan, zero, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(gen_loss(GanLoss::wgan, d13, 0.0), EngineError);
}

TEST_CASE("disc_loss values across the loss zoo") {
  Tensor zero({2}, {0.0, 0.0});
  CHECK(disc_loss(GanLoss::original, zero, zero) == doctest::Approx(2.0 * std::log(2.0)));

  Tensor one({2}, {1.0, 1.0});
  Tensor minus({2}, {-1.0, -1.0});
  CHECK(disc_loss(GanLoss::hinge, one, minus) == doctest::Approx(0.0));
  CHECK(disc_loss(GanLoss::wgan, one, one) == doctest::Approx(0.0));
  CHECK(disc_loss(GanLoss::lsgan, one, zero) == doctest::Approx(0.0));
}

TEST_CASE("run_cts: alternating trace structure") {
  Rig rig = Rig::make(1);
  Rng rng(2);
  ScheduleTrace trace = run_cts(rig.gen, rig.disc, rig.data, small_config(Scheme::cts, 3, 1, 1),
                                rng);
  REQUIRE(trace.entries.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(trace.entries[i].phase == (i % 2 == 0 ? Phase::disc : Phase::gen));
  }

  Rig rig2 = Rig::make(1);
  Rng rng2(2);
  ScheduleTrace k4 = run_cts(rig2.gen, rig2.disc, rig2.data, small_config(Scheme::cts, 2, 4, 1),
                             rng2);
  CHECK(k4.count(Phase::disc) == 8);
  CHECK(k4.count(Phase::gen) == 2);
}

TEST_CASE("run_nats: nested trace law for K=1, N_d=4") {
  Rig rig = Rig::make(3);
  Rng rng(4);
  NatsConfig cfg = small_config(Scheme::nats, 2, 1, 4);
  ScheduleTrace trace = run_nats(rig.gen, rig.disc, rig.data, cfg, rng);

  // per outer iteration: 4 disc phases and 1+2+3+4 = 10 gen sub-steps
  CHECK(trace.count(Phase::disc) == 2 * 4);
  CHECK(trace.count(Phase::gen) == 2 * 10);

  std::vector<std::size_t> gen_substeps;
  for (const auto& e : trace.entries) {
    if (e.phase == Phase::gen && e.outer == 1) gen_substeps.push_back(e.substep);
  }
  CHECK(gen_substeps == std::vector<std::size_t>{1, 1, 2, 1, 2, 3, 1, 2, 3, 4});

  // nats applies schedule[j] to the generator phases of nest level j
  for (const auto& e : trace.entries) {
    if (e.phase == Phase::gen) {
      CHECK(e.weight == doctest::Approx(cfg.schedule.weights[e.nested - 1]));
    }
  }
}

TEST_CASE("trace-shape law: K*N_d disc steps and N_d(N_d+1)/2 gen steps per outer") {
  for (std::size_t k : {1ul, 2ul}) {
    for (std::size_t nd : {1ul, 3ul, 5ul}) {
      Rig rig = Rig::make(5);
      Rng rng(6);
      NatsConfig cfg = small_config(Scheme::nts, 2, k, nd);
      ScheduleTrace trace = run_nats(rig.gen, rig.disc, rig.data, cfg, rng);
      CHECK(trace.count(Phase::disc) == 2 * k * nd);
      CHECK(trace.count(Phase::gen) == 2 * nd * (nd + 1) / 2);
    }
  }
}

TEST_CASE("weight-1 equivalence: nats(constant 1) == nts, bit-identical") {
  Rig a = Rig::make(7);
  Rig b = Rig::make(7);
  NatsConfig nats_cfg = small_config(Scheme::nats, 4, 1, 3);
  nats_cfg.schedule = constant_schedule(3, 1.0);
  NatsConfig nts_cfg = small_config(Scheme::nts, 4, 1, 3);

  Rng r1(8), r2(8);
  run_nats(a.gen, a.disc, a.data, nats_cfg, r1);
  run_nats(b.gen, b.disc, b.data, nts_cfg, r2);
  CHECK(same_params(a.gen.net, b.gen.net));
  CHECK(same_params(a.disc.net, b.disc.net));
}

TEST_CASE("degenerate equivalence: nats with N_d=1 == cts, bit-identical") {
  Rig a = Rig::make(9);
  Rig b = Rig::make(9);
  NatsConfig nats_cfg = small_config(Scheme::nats, 4, 2, 1);
  nats_cfg.schedule = constant_schedule(1, 1.0);
  NatsConfig cts_cfg = small_config(Scheme::cts, 4, 2, 1);

  Rng r1(10), r2(10);
  ScheduleTrace t1 = run_nats(a.gen, a.disc, a.data, nats_cfg, r1);
  ScheduleTrace t2 = run_cts(b.gen, b.disc, b.data, cts_cfg, r2);
  CHECK(t1.entries.size() == t2.entries.size());
  CHECK(same_params(a.gen.net, b.gen.net));
  CHECK(same_params(a.disc.net, b.disc.net));
}

TEST_CASE("wgan generator gradient is exactly homogeneous in the weight") {
  Rig rig = Rig::make(11);
  Rng rng(12);
  Tensor z = rig.gen.sample_latent(32, rng);
  for (double w : {0.5, 2.0, 0.01}) {
    GradientFieldReport rep = nats_gradient_field_check(rig.gen, rig.disc, z, w);
    CHECK(rep.max_param_rel_error < 1e-10);
    CHECK(rep.max_direction_rel_error < 1e-10);
  }
  GradientFieldReport unit = nats_gradient_field_check(rig.gen, rig.disc, z, 1.0);
  CHECK(unit.max_param_rel_error == 0.0);
}

TEST_CASE("nats weights reproduce the weighted flow directions") {
  // Shared (G, D, z): the generator's sample-space direction under the
  // wgan loss with weight w must match the w-scaled discriminator input
  // gradient that drives the particle flow.
  Rig rig = Rig::make(13);
  Rng rng(14);
  Tensor z = rig.gen.sample_latent(16, rng);
  Tensor x = rig.gen.net.eval(z);
  DiscOutput field = disc_value_and_input_grad(rig.disc, x);
  WeightSchedule sched = geometric_schedule(5, 1.0, 0.01);
  double n = static_cast<double>(z.rows());

  for (double w : sched.weights) {
    Tape tape;
    ForwardPass gp = forward(rig.gen.net, z, tape);
    ForwardPass dp = forward(rig.disc.net, gp.output, tape);
    Var loss = tape.neg(tape.mean(tape.scale(dp.output, w)));
    tape.backward_scalar(loss);
    Tensor xgrad = tape.adjoint(dp.input);

    for (std::size_t i = 0; i < xgrad.size(); ++i) {
      double gan_dir = -n * xgrad[i];        // sample-space ascent direction
      double flow_dir = w * field.grads[i];  // weighted flow move (eta = delta = 1)
      CHECK(gan_dir == doctest::Approx(flow_dir).epsilon(1e-10));
    }
  }
}

TEST_CASE("wgan discriminator weights stay inside the clip bound") {
  Rig rig = Rig::make(15);
  NatsConfig cfg = small_config(Scheme::cts, 10, 1, 1);
  cfg.loss = GanLoss::wgan;
  cfg.wgan_clip = 0.05;
  Rng rng(16);
  run_cts(rig.gen, rig.disc, rig.data, cfg, rng);
  for (const auto& layer : rig.disc.net.layers) {
    CHECK(max_abs(layer.weight) <= 0.05);
    CHECK(max_abs(layer.bias) <= 0.05);
  }
}

TEST_CASE("config validation rejects inconsistent nats setups") {
  NatsConfig cfg = small_config(Scheme::nats, 5, 1, 4);
  cfg.schedule = geometric_schedule(3, 1.0, 0.01);  // wrong length
  CHECK_THROWS_AS(cfg.validate(), EngineError);
  NatsConfig zero = small_config(Scheme::nts, 0, 1, 2);
  CHECK_THROWS_AS(zero.validate(), EngineError);
}
