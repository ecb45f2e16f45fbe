#include "cfgflow/models.hpp"

#include <cmath>

#include "cfgflow/errors.hpp"

namespace cfgflow {

Discriminator Discriminator::mlp(const std::vector<std::size_t>& widths, Activation hidden,
                                 OptimizerState opt, Rng& rng) {
  Discriminator d;
  d.net = NetParams::mlp(widths, hidden, Activation::identity, rng);
  if (d.net.output_width() != 1) throw NumericsError("discriminator output width must be 1");
  d.opt = std::move(opt);
  return d;
}

Generator Generator::mlp(std::size_t latent_dim,
                         const std::vector<std::size_t>& hidden_and_out, Activation hidden,
                         OptimizerState opt, Rng& rng) {
  Generator g;
  std::vector<std::size_t> widths;
  widths.push_back(latent_dim);
  widths.insert(widths.end(), hidden_and_out.begin(), hidden_and_out.end());
  g.net = NetParams::mlp(widths, hidden, Activation::identity, rng);
  g.latent_dim = latent_dim;
  g.opt = std::move(opt);
  return g;
}

Tensor Generator::sample_latent(std::size_t n, Rng& rng) const {
  return rng.normal_tensor({n, latent_dim});
}

AnalyticDiscriminator::AnalyticDiscriminator(GaussianMixture star, GaussianMixture g)
    : p_star(std::move(star)), p_g(std::move(g)) {
  if (p_star.dim() != p_g.dim()) {
    throw DistributionError("analytic discriminator: dimension mismatch");
  }
}

DiscOutput disc_value_and_input_grad(const Discriminator& d, const Tensor& x) {
  Tape tape;
  ForwardPass pass = forward(d.net, x, tape);
  const Tensor& out = tape.value(pass.output);  // (n,1)
  // Rows are independent, so seeding every output with 1 gives the
  // per-row input gradient in one sweep.
  BackwardResult grads = backward(tape, pass, Tensor::full(out.shape(), 1.0));
  DiscOutput res;
  res.values = out.reshaped({out.rows()});
  res.grads = grads.input_grad;
  if (!res.values.all_finite()) throw EngineError("discriminator produced non-finite values");
  return res;
}

DiscOutput analytic_disc(const AnalyticDiscriminator& d, const Tensor& x) {
  DiscOutput res;
  Tensor ls = d.p_star.log_pdf(x);
  Tensor lg = d.p_g.log_pdf(x);
  res.values = sub(ls, lg);
  res.grads = sub(d.p_star.score(x), d.p_g.score(x));
  return res;
}

DiscField make_field(const Discriminator& d) {
  const Discriminator* ptr = &d;
  return [ptr](const Tensor& x) { return disc_value_and_input_grad(*ptr, x); };
}

DiscField make_field(const AnalyticDiscriminator& d) {
  return [d](const Tensor& x) { return analytic_disc(d, x); };
}

namespace {

struct LogisticLossGraph {
  Tape tape;
  ForwardPass real_pass;
  ForwardPass fake_pass;
  Var loss;
};

void build_logistic_loss(const Discriminator& d, const Tensor& real, const Tensor& fake,
                         LogisticLossGraph& g) {
  if (real.rows() == 0 || fake.rows() == 0) {
    throw EngineError("logistic_disc_update: empty batch");
  }
  g.real_pass = forward(d.net, real, g.tape);
  g.fake_pass = forward(d.net, fake, g.tape);
  Var lr = g.tape.mean(g.tape.softplus(g.tape.neg(g.real_pass.output)));
  Var lf = g.tape.mean(g.tape.softplus(g.fake_pass.output));
  g.loss = g.tape.add(lr, lf);
}

}  // namespace

double logistic_disc_loss(const Discriminator& d, const Tensor& real, const Tensor& fake) {
  LogisticLossGraph g;
  build_logistic_loss(d, real, fake, g);
  return g.tape.value(g.loss)[0];
}

double logistic_disc_update(Discriminator& d, const Tensor& real, const Tensor& fake) {
  LogisticLossGraph g;
  build_logistic_loss(d, real, fake, g);
  double loss = g.tape.value(g.loss)[0];
  if (!std::isfinite(loss)) {
    throw EngineError("logistic_disc_update: non-finite loss; step rejected");
  }
  g.tape.backward_scalar(g.loss);
  // The same parameters appear as leaves in both passes; their gradients add.
  BackwardResult gr = collect_grads(g.tape, g.real_pass);
  BackwardResult gf = collect_grads(g.tape, g.fake_pass);
  std::vector<Tensor> grads;
  grads.reserve(gr.param_grads.size());
  for (std::size_t i = 0; i < gr.param_grads.size(); ++i) {
    grads.push_back(add(gr.param_grads[i], gf.param_grads[i]));
  }
  optimizer_step(d.net, grads, d.opt);
  return loss;
}

double distill_generator(Generator& g, const Tensor& z, const Tensor& targets,
                         std::size_t steps) {
  if (z.rows() != targets.rows()) {
    throw NumericsError("distill_generator: latent and target batch sizes differ");
  }
  double n = static_cast<double>(z.rows());
  auto loss_value = [&]() {
    Tensor diff = sub(g.net.eval(z), targets);
    return 0.5 * sum(mul(diff, diff)) / n;
  };
  for (std::size_t s = 0; s < steps; ++s) {
    Tape tape;
    ForwardPass pass = forward(g.net, z, tape);
    Var diff = tape.sub(pass.output, tape.leaf(targets, false));
    Var loss = tape.scale(tape.sum(tape.mul(diff, diff)), 0.5 / n);
    tape.backward_scalar(loss);
    BackwardResult grads = collect_grads(tape, pass);
    optimizer_step(g.net, grads.param_grads, g.opt);
  }
  return loss_value();
}

}  // namespace cfgflow
