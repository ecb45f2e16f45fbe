#pragma once

#include <functional>

#include "cfgflow/gaussian.hpp"
#include "cfgflow/net.hpp"

namespace cfgflow {

/// Discriminator with a raw scalar output (an unsquashed log-ratio
/// scale; no output sigmoid).
struct Discriminator {
  NetParams net;
  OptimizerState opt;

  static Discriminator mlp(const std::vector<std::size_t>& widths, Activation hidden,
                           OptimizerState opt, Rng& rng);
};

struct Generator {
  NetParams net;
  std::size_t latent_dim = 4;
  OptimizerState opt;

  static Generator mlp(std::size_t latent_dim, const std::vector<std::size_t>& hidden_and_out,
                       Activation hidden, OptimizerState opt, Rng& rng);

  /// (n, latent_dim) standard-normal codes.
  Tensor sample_latent(std::size_t n, Rng& rng) const;
};

/// The closed-form optimal discriminator for a known pair of densities:
/// value log p_star(x) - log p_g(x), gradient score(p_star) - score(p_g).
struct AnalyticDiscriminator {
  GaussianMixture p_star;
  GaussianMixture p_g;

  AnalyticDiscriminator(GaussianMixture star, GaussianMixture g);
};

struct DiscOutput {
  Tensor values;  // (n)
  Tensor grads;   // (n, d) input gradients
};

/// Raw values D(x) and per-row input gradients via one backward pass.
DiscOutput disc_value_and_input_grad(const Discriminator& d, const Tensor& x);

DiscOutput analytic_disc(const AnalyticDiscriminator& d, const Tensor& x);

/// Any discriminator-like vector field the flow can follow.
using DiscField = std::function<DiscOutput(const Tensor&)>;

DiscField make_field(const Discriminator& d);
DiscField make_field(const AnalyticDiscriminator& d);

/// One optimizer step on the logistic pair loss
///   mean ln(1+e^{-D(real)}) + mean ln(1+e^{D(fake)})
/// and returns the pre-step loss. Throws EngineError (step rejected) on
/// a non-finite loss.
double logistic_disc_update(Discriminator& d, const Tensor& real, const Tensor& fake);

/// The logistic pair loss without any update (exposed for tests).
double logistic_disc_loss(const Discriminator& d, const Tensor& real, const Tensor& fake);

/// Regresses G onto target points: `steps` optimizer steps on
/// mean_i 0.5 ||G(z_i) - target_i||^2 over the full batch. Returns the
/// loss after the final step (the initial loss when steps == 0).
double distill_generator(Generator& g, const Tensor& z, const Tensor& targets,
                         std::size_t steps);

}  // namespace cfgflow
