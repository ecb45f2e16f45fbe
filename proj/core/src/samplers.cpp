#include "cfgflow/samplers.hpp"

#include <cmath>

#include "cfgflow/errors.hpp"

namespace cfgflow {

Tensor smoothed_score(const GaussianMixture& mix, double sigma, const Tensor& x) {
  if (sigma == 0.0) return mix.score(x);
  return mix.inflate(sigma).score(x);
}

ScoreFn make_score_oracle(const GaussianMixture& mix) {
  return [mix](const Tensor& x) { return mix.score(x); };
}

ScoreFn make_score_oracle(const AnalyticDiscriminator& d) {
  return [d](const Tensor& x) { return analytic_disc(d, x).grads; };
}

ScoreFn make_score_oracle(const Discriminator& d) {
  const Discriminator* ptr = &d;
  return [ptr](const Tensor& x) { return disc_value_and_input_grad(*ptr, x).grads; };
}

namespace {

struct ChainState {
  Tensor x;                    // (chains, d), rows frozen once diverged
  std::vector<Rng> streams;    // one per chain
  std::vector<bool> diverged;
};

ChainState init_chains(const ChainConfig& cfg, Rng& rng) {
  if (cfg.steps < 1) throw EngineError("langevin: steps must be >= 1");
  if (cfg.epsilon <= 0.0) throw EngineError("langevin: epsilon must be positive");
  ChainState st;
  std::size_t d = cfg.prior.dim();
  st.x = Tensor({cfg.chains, d});
  st.diverged.assign(cfg.chains, false);
  st.streams.reserve(cfg.chains);
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    st.streams.push_back(rng.split("chain", c));
    Eigen::VectorXd z(d);
    for (std::size_t j = 0; j < d; ++j) z[static_cast<int>(j)] = st.streams[c].normal();
    set_tensor_row(st.x, c, cfg.prior.mean() + cfg.prior.chol_lower() * z);
  }
  return st;
}

void sweep(ChainState& st, const ChainConfig& cfg, double alpha, std::size_t steps,
           const std::function<Tensor(const Tensor&)>& score, std::vector<double>* alphas_used) {
  std::size_t d = st.x.cols();
  double noise_scale = std::sqrt(2.0 * cfg.epsilon);
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor s = score(st.x);
    for (std::size_t c = 0; c < st.x.rows(); ++c) {
      if (st.diverged[c]) continue;
      double norm2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double v = st.x.at(c, j) + alpha * s.at(c, j) + noise_scale * st.streams[c].normal();
        st.x.at(c, j) = v;
        norm2 += v * v;
      }
      if (!std::isfinite(norm2) || std::sqrt(norm2) > cfg.divergence_bound) {
        st.diverged[c] = true;
      }
    }
    if (alphas_used) alphas_used->push_back(alpha);
  }
}

SampleResult finish(ChainState& st, std::vector<double> alphas_used) {
  SampleResult res;
  res.alphas_used = std::move(alphas_used);
  std::size_t d = st.x.cols(), live = 0;
  for (bool f : st.diverged) {
    if (f) {
      res.diverged++;
    } else {
      live++;
    }
  }
  res.points = Tensor({live, d});
  std::size_t out = 0;
  for (std::size_t c = 0; c < st.x.rows(); ++c) {
    if (st.diverged[c]) continue;
    for (std::size_t j = 0; j < d; ++j) res.points.at(out, j) = st.x.at(c, j);
    ++out;
  }
  return res;
}

}  // namespace

SampleResult langevin(const ScoreFn& score, const ChainConfig& cfg, Rng& rng) {
  ChainState st = init_chains(cfg, rng);
  std::vector<double> alphas;
  sweep(st, cfg, cfg.epsilon, cfg.steps, score, &alphas);
  return finish(st, std::move(alphas));
}

SampleResult annealed_langevin(const LevelScoreFn& score, const ChainConfig& cfg,
                               const AlphaLadder& ladder, Rng& rng) {
  if (ladder.alphas.empty()) throw EngineError("annealed_langevin: empty ladder");
  ChainState st = init_chains(cfg, rng);
  std::vector<double> alphas;
  for (std::size_t level = 0; level < ladder.alphas.size(); ++level) {
    auto level_score = [&](const Tensor& x) { return score(level, x); };
    sweep(st, cfg, ladder.alphas[level], cfg.steps, level_score, &alphas);
  }
  return finish(st, std::move(alphas));
}

SampleResult annealed_langevin(const GaussianMixture& mix, const ChainConfig& cfg,
                               const SigmaLadder& sigmas, Rng& rng) {
  AlphaLadder ladder = alpha_ladder(sigmas, cfg.epsilon);
  // Pre-inflate one mixture per level; the sweep reuses them.
  std::vector<GaussianMixture> smoothed;
  smoothed.reserve(sigmas.sigmas.size());
  for (double s : sigmas.sigmas) smoothed.push_back(mix.inflate(s));
  LevelScoreFn fn = [&](std::size_t level, const Tensor& x) {
    return smoothed[level].score(x);
  };
  return annealed_langevin(fn, cfg, ladder, rng);
}

}  // namespace cfgflow
