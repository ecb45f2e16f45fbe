#include "cfgflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cfgflow/errors.hpp"
#include "cfgflow/samplers.hpp"

namespace cfgflow {

namespace fs = std::filesystem;

namespace {

std::string fmt_metric(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string metrics_csv_header() {
  return "run_id,seed,outer,scheme,loss,n_d,m,frechet,kl,modes_covered,quality_fraction,"
         "score_gap";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::ostringstream os;
  os << r.run_id << ',' << r.seed << ',' << r.outer << ',' << r.scheme << ',' << r.loss << ','
     << r.n_d << ',' << r.m << ',' << fmt_metric(r.frechet) << ',' << fmt_metric(r.kl) << ','
     << r.modes_covered << ',' << fmt_metric(r.quality_fraction) << ','
     << fmt_metric(r.score_gap);
  return os.str();
}

void write_field(const std::string& path, const FieldDump& field) {
  std::ofstream out(path);
  if (!out) throw EngineError("cannot write field dump '" + path + "'");
  out << "FIELD v1 " << field.nx << ' ' << field.ny << ' ' << fmt_exact(field.xmin) << ' '
      << fmt_exact(field.xmax) << ' ' << fmt_exact(field.ymin) << ' ' << fmt_exact(field.ymax)
      << '\n';
  for (std::size_t i = 0; i < field.x.size(); ++i) {
    out << fmt_exact(field.x[i]) << ' ' << fmt_exact(field.y[i]) << ' '
        << fmt_exact(field.gx[i]) << ' ' << fmt_exact(field.gy[i]) << '\n';
  }
}

FieldDump read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EngineError("cannot read field dump '" + path + "'");
  std::string magic, version;
  FieldDump f;
  in >> magic >> version >> f.nx >> f.ny >> f.xmin >> f.xmax >> f.ymin >> f.ymax;
  if (magic != "FIELD" || version != "v1") {
    throw EngineError("'" + path + "' is not a FIELD v1 dump");
  }
  std::size_t total = f.nx * f.ny;
  f.x.resize(total);
  f.y.resize(total);
  f.gx.resize(total);
  f.gy.resize(total);
  for (std::size_t i = 0; i < total; ++i) in >> f.x[i] >> f.y[i] >> f.gx[i] >> f.gy[i];
  if (!in) throw EngineError("truncated field dump '" + path + "'");
  return f;
}

void write_samples(const std::string& path, const Tensor& points) {
  std::ofstream out(path);
  if (!out) throw EngineError("cannot write samples dump '" + path + "'");
  out << "SAMPLES v1 " << points.rows() << ' ' << points.cols() << '\n';
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t j = 0; j < points.cols(); ++j) {
      if (j) out << ' ';
      out << fmt_exact(points.at(i, j));
    }
    out << '\n';
  }
}

Tensor read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EngineError("cannot read samples dump '" + path + "'");
  std::string magic, version;
  std::size_t n = 0, d = 0;
  in >> magic >> version >> n >> d;
  if (magic != "SAMPLES" || version != "v1") {
    throw EngineError("'" + path + "' is not a SAMPLES v1 dump");
  }
  Tensor points({n, d});
  for (std::size_t i = 0; i < n * d; ++i) in >> points[i];
  if (!in) throw EngineError("truncated samples dump '" + path + "'");
  return points;
}

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softplus: return "softplus";
  }
  return "?";
}

Activation activation_from(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softplus") return Activation::softplus;
  throw EngineError("unknown activation '" + s + "' in model file");
}

}  // namespace

void write_model(const std::string& path, const NetParams& net) {
  std::ofstream out(path);
  if (!out) throw EngineError("cannot write model '" + path + "'");
  out << "MODEL v1 " << net.layers.size() << '\n';
  for (const Layer& layer : net.layers) {
    std::size_t in = layer.weight.rows(), outw = layer.weight.cols();
    out << "LAYER " << in << ' ' << outw << ' ' << activation_name(layer.act) << '\n';
    for (std::size_t r = 0; r < in; ++r) {
      for (std::size_t c = 0; c < outw; ++c) {
        if (c) out << ' ';
        out << fmt_exact(layer.weight.at(r, c));
      }
      out << '\n';
    }
    for (std::size_t c = 0; c < outw; ++c) {
      if (c) out << ' ';
      out << fmt_exact(layer.bias[c]);
    }
    out << '\n';
  }
}

NetParams read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EngineError("cannot read model '" + path + "'");
  std::string magic, version;
  std::size_t layers = 0;
  in >> magic >> version >> layers;
  if (magic != "MODEL" || version != "v1") throw EngineError("'" + path + "' is not MODEL v1");
  NetParams net;
  for (std::size_t l = 0; l < layers; ++l) {
    std::string tag, act;
    std::size_t inw = 0, outw = 0;
    in >> tag >> inw >> outw >> act;
    if (tag != "LAYER") throw EngineError("malformed model file '" + path + "'");
    Layer layer;
    layer.act = activation_from(act);
    layer.weight = Tensor({inw, outw});
    for (std::size_t i = 0; i < inw * outw; ++i) in >> layer.weight[i];
    layer.bias = Tensor({outw});
    for (std::size_t i = 0; i < outw; ++i) in >> layer.bias[i];
    net.layers.push_back(std::move(layer));
  }
  if (!in) throw EngineError("truncated model file '" + path + "'");
  return net;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EngineError("cannot hash '" + path + "'");
  std::uint64_t h = 0xCBF29CE484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ull;
    }
  }
  return h;
}

GridSpec auto_grid(const GaussianMixture& mix, std::size_t nx, std::size_t ny) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& c : mix.components()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.cov());
    double margin = 3.0 * std::sqrt(es.eigenvalues().maxCoeff());
    double x = c.mean()[0], y = c.mean()[1];
    if (first || x - margin < xmin) xmin = x - margin;
    if (first || x + margin > xmax) xmax = x + margin;
    if (first || y - margin < ymin) ymin = y - margin;
    if (first || y + margin > ymax) ymax = y + margin;
    first = false;
  }
  g.xmin = xmin;
  g.xmax = xmax;
  g.ymin = ymin;
  g.ymax = ymax;
  return g;
}

namespace {

struct SeedOutcome {
  std::vector<MetricsRecord> rows;
  std::vector<std::string> outputs;  // relative paths
  std::vector<std::string> notes;
  long long wall_ms = 0;
  std::string error;
};

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a64_str(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

OptimizerState make_opt(const ModelConfig& m, double lr) {
  return m.optimizer == OptimizerKind::sgd
             ? OptimizerState::sgd(lr)
             : OptimizerState::adam(lr, m.adam_beta1, m.adam_beta2);
}

Generator build_generator(const ModelConfig& m, Rng& rng) {
  std::vector<std::size_t> widths(m.gen_depth, m.gen_hidden);
  widths.push_back(2);
  return Generator::mlp(m.latent_dim, widths, Activation::leaky_relu, make_opt(m, m.gen_lr),
                        rng);
}

Discriminator build_discriminator(const ModelConfig& m, Rng& rng) {
  std::vector<std::size_t> widths;
  widths.push_back(2);
  for (std::size_t i = 0; i < m.disc_depth; ++i) widths.push_back(m.disc_hidden);
  widths.push_back(1);
  return Discriminator::mlp(widths, Activation::leaky_relu, make_opt(m, m.disc_lr), rng);
}

/// Metrics of a sample batch against the truth mixture. When `disc` is
/// given, the score-gap compares its gradient field with the analytic
/// score difference over the auto grid.
MetricsRecord sample_metrics(const Tensor& x, const GaussianMixture& truth,
                             double quality_sigmas, const Discriminator* disc) {
  MetricsRecord r;
  GaussianFit fit = GaussianFit::from_points(x);
  GaussianComponent target_moment = truth.moment_match();
  r.frechet = frechet_gaussian(fit, GaussianFit::from_component(target_moment));
  r.kl = kl_gaussians(fit.as_component(), target_moment);
  ModeReport modes = mode_report(x, truth, quality_sigmas);
  r.modes_covered = modes.modes_covered;
  r.quality_fraction = modes.high_quality_fraction;
  if (disc) {
    ScoreFieldReport rep =
        score_diff_field(make_field(*disc), truth,
                         GaussianMixture::single(fit.as_component()), auto_grid(truth));
    r.score_gap = rep.mean_l2_gap;
  } else {
    r.score_gap = kNaN;
  }
  return r;
}

GaussianComponent single_gaussian(const DatasetSpec& spec, const char* what) {
  if (spec.kind != DatasetKind::gaussian_point) {
    throw ConfigError(std::string(what) + " must be a single gaussian(mx, my, sigma)");
  }
  Eigen::VectorXd mu(2);
  mu << spec.cx, spec.cy;
  return GaussianComponent::isotropic(mu, spec.sigma, 1.0);
}

void seed_train_gan(const RunConfig& cfg, const std::string& run_id, const fs::path& out_dir,
                    std::uint64_t seed, SeedOutcome& out) {
  Rng root(seed);
  Rng data_rng = root.split("data");
  Dataset ds = make_dataset(cfg.dataset, data_rng);
  Rng init_rng = root.split("init");
  Generator gen = build_generator(cfg.model, init_rng);
  Discriminator disc = build_discriminator(cfg.model, init_rng);

  NatsConfig nc;
  nc.scheme = cfg.gan.scheme;
  nc.loss = cfg.gan.loss;
  nc.outer = cfg.gan.outer;
  nc.disc_steps = cfg.gan.disc_steps;
  nc.nested = cfg.gan.scheme == Scheme::cts ? 1 : cfg.gan.n_d;
  nc.batch = cfg.gan.batch;
  nc.wgan_clip = cfg.gan.wgan_clip;
  if (nc.scheme == Scheme::nats) nc.schedule = cfg.gan.schedule.materialize(nc.nested);

  const char* scheme = nc.scheme == Scheme::cts ? "cts" : (nc.scheme == Scheme::nts ? "nts" : "nats");
  const char* loss = nc.loss == GanLoss::original ? "original"
                     : nc.loss == GanLoss::lsgan  ? "lsgan"
                     : nc.loss == GanLoss::wgan   ? "wgan"
                                                  : "hinge";

  auto hook = [&](std::size_t outer) {
    Rng eval_rng = root.split("eval", outer);
    Tensor z = gen.sample_latent(cfg.run.eval_samples, eval_rng);
    Tensor x = gen.net.eval(z);
    MetricsRecord r = sample_metrics(x, ds.truth, cfg.run.quality_sigmas, &disc);
    r.run_id = run_id;
    r.seed = seed;
    r.outer = outer;
    r.scheme = scheme;
    r.loss = loss;
    r.n_d = nc.nested;
    r.m = 0;
    out.rows.push_back(std::move(r));
  };

  Rng train_rng = root.split("train");
  run_nats(gen, disc, ds.samples, nc, train_rng, cfg.run.eval_every, hook);

  std::string seed_dir = "seed" + std::to_string(seed);
  fs::create_directories(out_dir / seed_dir);
  Rng dump_rng = root.split("dump");
  Tensor z = gen.sample_latent(cfg.run.eval_samples, dump_rng);
  Tensor samples = gen.net.eval(z);
  write_samples((out_dir / seed_dir / "samples.samples").string(), samples);
  out.outputs.push_back(seed_dir + "/samples.samples");
  write_model((out_dir / seed_dir / "generator.model").string(), gen.net);
  out.outputs.push_back(seed_dir + "/generator.model");
  write_model((out_dir / seed_dir / "discriminator.model").string(), disc.net);
  out.outputs.push_back(seed_dir + "/discriminator.model");
  ScoreFieldReport rep = score_diff_field(
      make_field(disc), ds.truth,
      GaussianMixture::single(GaussianFit::from_points(samples).as_component()),
      auto_grid(ds.truth));
  write_field((out_dir / seed_dir / "disc_grad.field").string(), rep.field);
  out.outputs.push_back(seed_dir + "/disc_grad.field");
}

void seed_train_cfg(const RunConfig& cfg, const std::string& run_id, const fs::path& out_dir,
                    std::uint64_t seed, SeedOutcome& out) {
  Rng root(seed);
  Rng data_rng = root.split("data");
  Dataset ds = make_dataset(cfg.dataset, data_rng);
  Rng init_rng = root.split("init");
  Generator gen = build_generator(cfg.model, init_rng);
  Discriminator disc = build_discriminator(cfg.model, init_rng);

  CfgConfig ec;
  ec.flow_steps = cfg.cfg.steps;
  ec.disc_updates = cfg.cfg.disc_updates;
  ec.examples = cfg.cfg.examples;
  ec.batch = cfg.cfg.batch;
  ec.eta_flow = cfg.cfg.eta_flow;
  ec.schedule = cfg.cfg.schedule.materialize(ec.flow_steps);
  ec.delta_mode = cfg.cfg.delta.mode;
  ec.delta_value = cfg.cfg.delta.value;
  ec.s_scale = cfg.cfg.s_scale;
  ec.phi0 = cfg.cfg.phi0;
  ec.distill_passes = cfg.cfg.distill_passes;

  Rng train_rng = root.split("train");
  for (std::size_t epoch = 1; epoch <= cfg.cfg.epochs; ++epoch) {
    run_cfg_epoch(gen, disc, ds.samples, ec, train_rng);
    if (epoch % cfg.run.eval_every == 0 || epoch == cfg.cfg.epochs) {
      Rng eval_rng = root.split("eval", epoch);
      Tensor z = gen.sample_latent(cfg.run.eval_samples, eval_rng);
      Tensor x = gen.net.eval(z);
      MetricsRecord r = sample_metrics(x, ds.truth, cfg.run.quality_sigmas, &disc);
      r.run_id = run_id;
      r.seed = seed;
      r.outer = epoch;
      r.scheme = "cfg";
      r.loss = "logistic";
      r.n_d = 0;
      r.m = ec.flow_steps;
      out.rows.push_back(std::move(r));
    }
  }

  std::string seed_dir = "seed" + std::to_string(seed);
  fs::create_directories(out_dir / seed_dir);
  Rng dump_rng = root.split("dump");
  Tensor z = gen.sample_latent(cfg.run.eval_samples, dump_rng);
  Tensor samples = gen.net.eval(z);
  write_samples((out_dir / seed_dir / "samples.samples").string(), samples);
  out.outputs.push_back(seed_dir + "/samples.samples");
  write_model((out_dir / seed_dir / "generator.model").string(), gen.net);
  out.outputs.push_back(seed_dir + "/generator.model");
  write_model((out_dir / seed_dir / "discriminator.model").string(), disc.net);
  out.outputs.push_back(seed_dir + "/discriminator.model");
  ScoreFieldReport rep = score_diff_field(
      make_field(disc), ds.truth,
      GaussianMixture::single(GaussianFit::from_points(samples).as_component()),
      auto_grid(ds.truth));
  write_field((out_dir / seed_dir / "disc_grad.field").string(), rep.field);
  out.outputs.push_back(seed_dir + "/disc_grad.field");
}

void seed_flow(const RunConfig& cfg, const std::string& run_id, const fs::path& out_dir,
               std::uint64_t seed, SeedOutcome& out) {
  GaussianMixture target = make_mixture(cfg.flow.target);
  GaussianComponent start = single_gaussian(cfg.flow.start, "flow.start");

  AnalyticFlowConfig fc;
  fc.particles = cfg.flow.particles;
  fc.eta_flow = cfg.flow.eta;
  fc.schedule = cfg.flow.schedule.materialize(cfg.flow.steps);
  fc.epochs = cfg.flow.epochs;
  fc.refit = cfg.flow.refit;
  fc.delta_mode = cfg.flow.delta.mode;
  fc.delta_value = cfg.flow.delta.value;
  fc.s_scale = cfg.flow.s_scale;
  fc.phi0 = cfg.flow.phi0;

  Rng root(seed);
  Rng flow_rng = root.split("flow");
  AnalyticFlowResult res = annealed_analytic_flow(start, target, fc, flow_rng);

  std::size_t total = res.kl.size() - 1;
  for (std::size_t step = 0; step <= total; ++step) {
    if (step % cfg.run.eval_every != 0 && step != total) continue;
    MetricsRecord r;
    r.run_id = run_id;
    r.seed = seed;
    r.outer = step;
    r.scheme = "flow";
    r.loss = "analytic";
    r.n_d = 0;
    r.m = cfg.flow.steps;
    r.kl = res.kl[step];
    if (step == total) {
      MetricsRecord final_metrics = sample_metrics(res.x, target, cfg.run.quality_sigmas, nullptr);
      r.frechet = final_metrics.frechet;
      r.modes_covered = final_metrics.modes_covered;
      r.quality_fraction = final_metrics.quality_fraction;
    } else {
      r.frechet = kNaN;
      r.quality_fraction = kNaN;
    }
    r.score_gap = kNaN;
    out.rows.push_back(std::move(r));
  }

  std::string seed_dir = "seed" + std::to_string(seed);
  fs::create_directories(out_dir / seed_dir);
  write_samples((out_dir / seed_dir / "particles.samples").string(), res.x);
  out.outputs.push_back(seed_dir + "/particles.samples");
}

void seed_langevin(const RunConfig& cfg, const std::string& run_id, const fs::path& out_dir,
                   std::uint64_t seed, SeedOutcome& out) {
  GaussianMixture truth = make_mixture(cfg.dataset);
  GaussianComponent prior = single_gaussian(cfg.chain.prior, "chain.prior");

  ChainConfig cc(cfg.chain.steps, cfg.chain.epsilon, cfg.chain.chains, prior);
  cc.divergence_bound = cfg.chain.bound;

  Rng root(seed);
  Rng chain_rng = root.split("chains");
  SampleResult res;
  std::size_t total_steps = 0;
  if (cfg.chain.annealed) {
    double gamma = cfg.chain.gamma == 0.0 ? select_gamma(truth.dim()) : cfg.chain.gamma;
    SigmaLadder ladder = SigmaLadder::from_ratio(cfg.chain.sigma_first, gamma, cfg.chain.levels);
    res = annealed_langevin(truth, cc, ladder, chain_rng);
    total_steps = cfg.chain.levels * cfg.chain.steps;
  } else {
    res = langevin(make_score_oracle(truth), cc, chain_rng);
    total_steps = cfg.chain.steps;
  }

  MetricsRecord r = sample_metrics(res.points, truth, cfg.run.quality_sigmas, nullptr);
  r.run_id = run_id;
  r.seed = seed;
  r.outer = total_steps;
  r.scheme = cfg.chain.annealed ? "langevin-annealed" : "langevin";
  r.loss = "none";
  out.rows.push_back(std::move(r));
  if (res.diverged > 0) {
    out.notes.push_back("seed " + std::to_string(seed) + " diverged_chains " +
                        std::to_string(res.diverged));
  }

  std::string seed_dir = "seed" + std::to_string(seed);
  fs::create_directories(out_dir / seed_dir);
  write_samples((out_dir / seed_dir / "chains.samples").string(), res.points);
  out.outputs.push_back(seed_dir + "/chains.samples");
}

void seed_eval(const RunConfig& cfg, const std::string& run_id, const fs::path&,
               std::uint64_t seed, SeedOutcome& out) {
  GaussianMixture truth = make_mixture(cfg.dataset);
  Tensor samples = read_samples(cfg.eval.samples_file);
  MetricsRecord r = sample_metrics(samples, truth, cfg.run.quality_sigmas, nullptr);
  r.run_id = run_id;
  r.seed = seed;
  r.outer = 0;
  r.scheme = "eval";
  r.loss = "none";
  out.rows.push_back(std::move(r));
}

void seed_dump_field(const RunConfig& cfg, const std::string& run_id, const fs::path& out_dir,
                     std::uint64_t seed, SeedOutcome& out) {
  GaussianMixture target = make_mixture(cfg.field.target);
  GaussianMixture start = make_mixture(cfg.field.start);

  std::string seed_dir = "seed" + std::to_string(seed);
  fs::create_directories(out_dir / seed_dir);

  ScoreFieldReport rep;
  std::string loss_label;
  if (cfg.field.analytic) {
    AnalyticDiscriminator ad(target, start);
    rep = score_diff_field(make_field(ad), target, start, cfg.field.grid);
    loss_label = "analytic";
  } else {
    Rng root(seed);
    Rng init_rng = root.split("init");
    Discriminator disc = build_discriminator(cfg.model, init_rng);
    Rng train_rng = root.split("train");
    for (std::size_t step = 0; step < cfg.field.train_steps; ++step) {
      Tensor real = target.sample(cfg.field.train_batch, train_rng);
      Tensor fake = start.sample(cfg.field.train_batch, train_rng);
      logistic_disc_update(disc, real, fake);
    }
    rep = score_diff_field(make_field(disc), target, start, cfg.field.grid);
    write_model((out_dir / seed_dir / "discriminator.model").string(), disc.net);
    out.outputs.push_back(seed_dir + "/discriminator.model");
    loss_label = "logistic";
  }

  write_field((out_dir / seed_dir / "disc_grad.field").string(), rep.field);
  out.outputs.push_back(seed_dir + "/disc_grad.field");

  MetricsRecord r;
  r.run_id = run_id;
  r.seed = seed;
  r.outer = cfg.field.analytic ? 0 : cfg.field.train_steps;
  r.scheme = "field";
  r.loss = loss_label;
  r.frechet = kNaN;
  r.kl = kNaN;
  r.quality_fraction = kNaN;
  r.score_gap = rep.mean_l2_gap;
  out.rows.push_back(std::move(r));
}

void seed_grad_check(const RunConfig& cfg, const std::string& run_id, const fs::path& out_dir,
                     std::uint64_t seed, SeedOutcome& out) {
  Rng root(seed);
  double worst = 0.0;
  std::size_t failures = 0;
  std::ostringstream report;
  static const Activation kActs[] = {Activation::tanh, Activation::leaky_relu,
                                     Activation::sigmoid, Activation::softplus};
  for (std::size_t i = 0; i < cfg.grad.nets; ++i) {
    Rng net_rng = root.split("net", i);
    std::size_t in = 2 + net_rng.below(4);
    std::size_t depth = 1 + net_rng.below(2);
    std::vector<std::size_t> widths{in};
    for (std::size_t l = 0; l < depth; ++l) widths.push_back(2 + net_rng.below(14));
    widths.push_back(1 + net_rng.below(2));
    Activation act = kActs[net_rng.below(4)];
    NetParams net = NetParams::mlp(widths, act, Activation::identity, net_rng);
    Tensor input = net_rng.normal_tensor({cfg.grad.batch, in});
    GradCheckReport rep = grad_check(net, input, cfg.grad.tolerance);
    worst = std::max(worst, rep.max_rel_error);
    if (!rep.passed) ++failures;
    report << "net " << i << " act " << activation_name(act) << " max_rel_error "
           << fmt_metric(rep.max_rel_error) << (rep.passed ? "" : " FAIL") << '\n';
  }
  report << "worst " << fmt_metric(worst) << " failures " << failures << " of "
         << cfg.grad.nets << '\n';

  std::string seed_dir = "seed" + std::to_string(seed);
  fs::create_directories(out_dir / seed_dir);
  std::ofstream rf(out_dir / seed_dir / "grad_report.txt");
  rf << report.str();
  out.outputs.push_back(seed_dir + "/grad_report.txt");

  MetricsRecord r;
  r.run_id = run_id;
  r.seed = seed;
  r.outer = cfg.grad.nets;
  r.scheme = "grad-check";
  r.loss = "none";
  r.frechet = kNaN;
  r.kl = kNaN;
  r.quality_fraction = kNaN;
  r.score_gap = worst;
  out.rows.push_back(std::move(r));
}

void run_one_seed(const RunConfig& cfg, const std::string& run_id, const fs::path& out_dir,
                  std::uint64_t seed, SeedOutcome& out) {
  switch (cfg.kind) {
    case ExperimentKind::train_gan: seed_train_gan(cfg, run_id, out_dir, seed, out); return;
    case ExperimentKind::train_cfg: seed_train_cfg(cfg, run_id, out_dir, seed, out); return;
    case ExperimentKind::flow: seed_flow(cfg, run_id, out_dir, seed, out); return;
    case ExperimentKind::sample_langevin: seed_langevin(cfg, run_id, out_dir, seed, out); return;
    case ExperimentKind::eval: seed_eval(cfg, run_id, out_dir, seed, out); return;
    case ExperimentKind::dump_field: seed_dump_field(cfg, run_id, out_dir, seed, out); return;
    case ExperimentKind::grad_check: seed_grad_check(cfg, run_id, out_dir, seed, out); return;
  }
  throw EngineError("unknown experiment kind");
}

std::size_t seed_parallelism(std::size_t seeds) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CFG_ANNEAL_THREADS")) {
    try {
      std::size_t v = std::stoull(env);
      if (v >= 1) cap = std::min(cap, v);
    } catch (const std::exception&) {
      // ignore malformed values; default cap stands
    }
  }
  return std::max<std::size_t>(1, std::min(cap, seeds));
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir, bool quiet) {
  fs::create_directories(out_dir);
  std::string config_text = cfg.emit();
  std::string run_id = hex64(fnv1a64_str(config_text));

  const auto& seeds = cfg.run.seeds;
  std::vector<SeedOutcome> outcomes(seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      auto t0 = std::chrono::steady_clock::now();
      try {
        run_one_seed(cfg, run_id, out_dir, seeds[i], outcomes[i]);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
      auto t1 = std::chrono::steady_clock::now();
      outcomes[i].wall_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
      if (!quiet) {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (outcomes[i].error.empty()) {
          std::cout << "seed " << seeds[i] << ": done (" << outcomes[i].wall_ms << " ms)\n";
        } else {
          std::cerr << "seed " << seeds[i] << ": aborted: " << outcomes[i].error << "\n";
        }
      }
    }
  };

  std::size_t threads = seed_parallelism(seeds.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunResult result;
  result.run_id = run_id;

  // Rows land in the CSV grouped by seed, in the configured seed order,
  // no matter how many workers ran.
  {
    std::ofstream csv(fs::path(out_dir) / "metrics.csv");
    csv << metrics_csv_header() << '\n';
    for (const auto& outcome : outcomes) {
      for (const auto& row : outcome.rows) csv << metrics_csv_row(row) << '\n';
    }
  }
  result.outputs.push_back("metrics.csv");
  for (const auto& outcome : outcomes) {
    for (const auto& f : outcome.outputs) result.outputs.push_back(f);
  }

  {
    std::ofstream man(fs::path(out_dir) / "manifest.txt");
    man << "MANIFEST v1\n";
    man << "run_id " << run_id << '\n';
    man << "config:\n";
    std::stringstream cs(config_text);
    std::string line;
    while (std::getline(cs, line)) man << "  " << line << '\n';
    man << "outputs:\n";
    for (const auto& f : result.outputs) {
      man << "  " << f << " fnv1a64:" << hex64(fnv1a64_file((fs::path(out_dir) / f).string()))
          << '\n';
    }
    man << "timing:\n";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      man << "  seed " << seeds[i] << " wall_ms " << outcomes[i].wall_ms << '\n';
    }
    bool have_notes = false;
    for (const auto& o : outcomes) have_notes = have_notes || !o.notes.empty();
    if (have_notes) {
      man << "notes:\n";
      for (const auto& o : outcomes) {
        for (const auto& n : o.notes) man << "  " << n << '\n';
      }
    }
  }

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!outcomes[i].error.empty()) {
      result.errors.push_back("seed " + std::to_string(seeds[i]) + ": " + outcomes[i].error);
      result.exit_code = 2;
    }
  }
  return result;
}

namespace {

struct ParsedRun {
  std::string dataset_line;
  std::string cadence_line;
  std::vector<MetricsRecord> rows;
};

ParsedRun load_run(const std::string& dir) {
  ParsedRun run;
  std::ifstream man(fs::path(dir) / "manifest.txt");
  if (!man) throw EngineError("cannot read manifest in '" + dir + "'");
  std::string line;
  while (std::getline(man, line)) {
    std::string t = line;
    if (t.find("  dataset.spec = ") == 0) run.dataset_line = t;
    if (t.find("  run.eval_every = ") == 0) run.cadence_line = t;
  }

  std::ifstream csv(fs::path(dir) / "metrics.csv");
  if (!csv) throw EngineError("cannot read metrics.csv in '" + dir + "'");
  std::getline(csv, line);
  if (line != metrics_csv_header()) {
    throw EngineError("unexpected metrics.csv header in '" + dir + "'");
  }
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, ',')) parts.push_back(part);
    if (parts.size() != 12) throw EngineError("malformed metrics row in '" + dir + "'");
    MetricsRecord r;
    r.run_id = parts[0];
    r.seed = std::stoull(parts[1]);
    r.outer = std::stoull(parts[2]);
    r.scheme = parts[3];
    r.loss = parts[4];
    r.n_d = std::stoull(parts[5]);
    r.m = std::stoull(parts[6]);
    r.frechet = std::stod(parts[7]);
    r.kl = std::stod(parts[8]);
    r.modes_covered = std::stoull(parts[9]);
    r.quality_fraction = std::stod(parts[10]);
    r.score_gap = std::stod(parts[11]);
    run.rows.push_back(std::move(r));
  }
  return run;
}

double metric_of(const MetricsRecord& r, const std::string& metric) {
  if (metric == "frechet") return r.frechet;
  if (metric == "kl") return r.kl;
  if (metric == "modes_covered") return static_cast<double>(r.modes_covered);
  if (metric == "quality_fraction") return r.quality_fraction;
  if (metric == "score_gap") return r.score_gap;
  throw EngineError("unknown metric '" + metric + "'");
}

}  // namespace

CompareTable compare_runs(const std::vector<std::string>& run_dirs, const std::string& metric,
                          const std::string& aggregation) {
  if (run_dirs.empty()) throw EngineError("compare: no run directories given");
  if (aggregation != "median" && aggregation != "min" && aggregation != "mean") {
    throw EngineError("unknown aggregation '" + aggregation + "'");
  }

  CompareTable table;
  table.metric = metric;
  table.aggregation = aggregation;

  std::string dataset_line, cadence_line;
  bool first_run = true;
  for (const auto& dir : run_dirs) {
    ParsedRun run = load_run(dir);
    if (first_run) {
      dataset_line = run.dataset_line;
      cadence_line = run.cadence_line;
      first_run = false;
    } else if (run.dataset_line != dataset_line || run.cadence_line != cadence_line) {
      throw EngineError("incompatible runs: '" + dir +
                        "' differs in dataset or evaluation cadence");
    }

    // Final row per seed: rows are grouped by seed, in order.
    std::map<std::uint64_t, MetricsRecord> finals;
    for (const auto& r : run.rows) finals[r.seed] = r;
    if (finals.empty()) throw EngineError("no metrics rows in '" + dir + "'");

    std::vector<double> values;
    std::string label;
    for (const auto& [s, r] : finals) {
      values.push_back(metric_of(r, metric));
      label = r.scheme + "/" + r.loss;
      if (r.n_d > 0) label += "(n_d=" + std::to_string(r.n_d) + ")";
    }
    std::sort(values.begin(), values.end());
    double agg = 0.0;
    if (aggregation == "min") {
      agg = values.front();
    } else if (aggregation == "median") {
      std::size_t mid = values.size() / 2;
      agg = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    } else {
      for (double v : values) agg += v;
      agg /= static_cast<double>(values.size());
    }
    table.rows.push_back({label + " [" + dir + "]", agg, values.size()});
  }

  std::sort(table.rows.begin(), table.rows.end(),
            [](const CompareRow& a, const CompareRow& b) { return a.value < b.value; });
  return table;
}

std::string format_table(const CompareTable& table) {
  std::ostringstream os;
  os << "rank  " << table.aggregation << "(" << table.metric << ")  seeds  run\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    os << i + 1 << "  " << fmt_metric(table.rows[i].value) << "  " << table.rows[i].seeds
       << "  " << table.rows[i].label << '\n';
  }
  return os.str();
}

}  // namespace cfgflow
