#include <benchmark/benchmark.h>

#include "cfgflow/cfg_engine.hpp"
#include "cfgflow/dataset.hpp"
#include "cfgflow/gan_engine.hpp"
#include "cfgflow/samplers.hpp"

using namespace cfgflow;

namespace {

Discriminator bench_disc(Rng& rng, double lr = 2e-4) {
  return Discriminator::mlp({2, 64, 64, 1}, Activation::leaky_relu,
                            OptimizerState::adam(lr, 0.5, 0.999), rng);
}

void ForwardBackward(benchmark::State& state) {
  Rng rng(1);
  NetParams net = NetParams::mlp({2, 64, 64, 1}, Activation::leaky_relu,
                                 Activation::identity, rng);
  Tensor x = rng.normal_tensor({static_cast<std::size_t>(state.range(0)), 2});
  for (auto _ : state) {
    Tape tape;
    ForwardPass pass = forward(net, x, tape);
    Tensor seed = Tensor::full(tape.value(pass.output).shape(), 1.0);
    BackwardResult grads = backward(tape, pass, seed);
    benchmark::DoNotOptimize(grads.input_grad);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(ForwardBackward)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void MixtureScore(benchmark::State& state) {
  DatasetSpec spec;
  spec.kind = DatasetKind::ring;
  GaussianMixture mix = make_mixture(spec);
  Rng rng(2);
  Tensor x = rng.uniform_tensor({static_cast<std::size_t>(state.range(0)), 2}, -3, 3);
  for (auto _ : state) {
    Tensor s = mix.score(x);
    benchmark::DoNotOptimize(s);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(MixtureScore)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void LogisticDiscUpdate(benchmark::State& state) {
  Rng rng(3);
  Discriminator disc = bench_disc(rng);
  GaussianMixture star = GaussianMixture::single(
      GaussianComponent(Eigen::Vector2d(1, 0), Eigen::Matrix2d::Identity(), 1.0));
  GaussianMixture pg = GaussianMixture::single(
      GaussianComponent(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity(), 1.0));
  Tensor real = star.sample(state.range(0), rng);
  Tensor fake = pg.sample(state.range(0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(logistic_disc_update(disc, real, fake));
  }
}
BENCHMARK(LogisticDiscUpdate)->Arg(64)->Arg(256);

void FlowStep(benchmark::State& state) {
  Rng rng(4);
  Discriminator disc = bench_disc(rng);
  DiscField field = make_field(disc);
  CfgConfig cfg;
  cfg.flow_steps = 1;
  cfg.eta_flow = 0.25;
  cfg.schedule = constant_schedule(1, 1.0);
  Tensor x0 = rng.normal_tensor({static_cast<std::size_t>(state.range(0)), 2});
  for (auto _ : state) {
    ParticleSet particles;
    particles.x = x0;
    particles.z = x0;
    FlowStepRecord rec = flow_step(particles, field, 1.0, cfg);
    benchmark::DoNotOptimize(rec.mean_move_norm);
  }
}
BENCHMARK(FlowStep)->Arg(640);

void AnnealedSweep(benchmark::State& state) {
  DatasetSpec spec;
  spec.kind = DatasetKind::two_gaussian;
  spec.radius = 4.0;
  spec.sigma = 0.1;
  GaussianMixture target = make_mixture(spec);
  GaussianComponent prior(Eigen::Vector2d(8, 0), Eigen::Matrix2d::Identity(), 1.0);
  SigmaLadder ladder = SigmaLadder::from_ratio(8.0, select_gamma(2), 10);
  for (auto _ : state) {
    ChainConfig cc(10, 5e-6, state.range(0), prior);
    Rng rng(5);
    SampleResult res = annealed_langevin(target, cc, ladder, rng);
    benchmark::DoNotOptimize(res.points);
  }
}
BENCHMARK(AnnealedSweep)->Arg(128);

void NatsOuterIteration(benchmark::State& state) {
  Rng rng(6);
  Generator gen = Generator::mlp(4, {64, 64, 2}, Activation::leaky_relu,
                                 OptimizerState::adam(2e-4, 0.5, 0.999), rng);
  Discriminator disc = bench_disc(rng);
  DatasetSpec spec;
  spec.kind = DatasetKind::ring;
  spec.samples = 4096;
  Tensor data = make_dataset(spec, rng).samples;
  NatsConfig cfg;
  cfg.scheme = Scheme::nats;
  cfg.outer = 1;
  cfg.nested = static_cast<std::size_t>(state.range(0));
  cfg.batch = 32;
  cfg.schedule = geometric_schedule(cfg.nested, 1.0, 0.01);
  Rng train(7);
  for (auto _ : state) {
    run_nats(gen, disc, data, cfg, train);
  }
}
BENCHMARK(NatsOuterIteration)->Arg(5)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
