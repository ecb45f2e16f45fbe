#pragma once

#include <functional>

#include "cfgflow/gaussian.hpp"
#include "cfgflow/models.hpp"
#include "cfgflow/schedules.hpp"

namespace cfgflow {

/// Score field s(x) evaluated on a point batch, returning (n,d).
using ScoreFn = std::function<Tensor(const Tensor&)>;

/// Exact score of the mixture convolved with N(0, sigma^2 I).
Tensor smoothed_score(const GaussianMixture& mix, double sigma, const Tensor& x);

ScoreFn make_score_oracle(const GaussianMixture& mix);
ScoreFn make_score_oracle(const AnalyticDiscriminator& d);
ScoreFn make_score_oracle(const Discriminator& d);

struct ChainConfig {
  std::size_t steps = 1000;       // K per level
  double epsilon = 0.01;          // base step size
  std::size_t chains = 1;
  GaussianComponent prior;        // chain initialization law
  double divergence_bound = 1e3;  // ||x|| beyond this flags the chain

  ChainConfig(std::size_t steps, double epsilon, std::size_t chains, GaussianComponent prior)
      : steps(steps), epsilon(epsilon), chains(chains), prior(std::move(prior)) {}
};

struct SampleResult {
  Tensor points;                 // (surviving chains, d), ordered by chain index
  std::size_t diverged = 0;      // chains excluded by the divergence bound
  std::vector<double> alphas_used;  // step sizes actually applied, in order
};

/// Plain dynamics: x <- x + eps * s(x) + sqrt(2 eps) * z for `steps`
/// iterations per chain. Each chain owns the stream split("chain", index).
SampleResult langevin(const ScoreFn& score, const ChainConfig& cfg, Rng& rng);

/// Per-level score oracle for the annealed sweep (level index, points).
using LevelScoreFn = std::function<Tensor(std::size_t, const Tensor&)>;

/// Annealed sweep: for each level i, `steps` iterations at step size
/// alpha_i = eps * sigma_i^2 / sigma_L^2, with the level-i oracle.
SampleResult annealed_langevin(const LevelScoreFn& score, const ChainConfig& cfg,
                               const AlphaLadder& ladder, Rng& rng);

/// Convenience: analytic mixture smoothed per level by the sigma ladder.
SampleResult annealed_langevin(const GaussianMixture& mix, const ChainConfig& cfg,
                               const SigmaLadder& sigmas, Rng& rng);

}  // namespace cfgflow
