#include "cfgflow/net.hpp"

#include <algorithm>
#include <cmath>

#include "cfgflow/errors.hpp"

namespace cfgflow {

std::size_t NetParams::input_width() const {
  if (layers.empty()) throw NumericsError("empty network");
  return layers.front().weight.rows();
}

std::size_t NetParams::output_width() const {
  if (layers.empty()) throw NumericsError("empty network");
  return layers.back().weight.cols();
}

NetParams NetParams::mlp(const std::vector<std::size_t>& widths, Activation hidden,
                         Activation output, Rng& rng) {
  if (widths.size() < 2) throw NumericsError("mlp needs at least input and output widths");
  NetParams net;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    std::size_t in = widths[i], out = widths[i + 1];
    Layer layer;
    double s = std::sqrt(2.0 / static_cast<double>(in));
    layer.weight = Tensor({in, out});
    for (auto& w : layer.weight.data()) w = s * rng.normal();
    layer.bias = Tensor({out});
    layer.act = i + 2 < widths.size() ? hidden : output;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace {

Var apply_activation(Tape& tape, Var x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::tanh: return tape.tanh(x);
    case Activation::leaky_relu: return tape.leaky_relu(x, 0.2);
    case Activation::sigmoid: return tape.sigmoid(x);
    case Activation::softplus: return tape.softplus(x);
  }
  throw NumericsError("unknown activation");
}

void apply_activation_inplace(Tensor& t, Activation act) {
  switch (act) {
    case Activation::identity: return;
    case Activation::tanh:
      for (auto& v : t.data()) v = std::tanh(v);
      return;
    case Activation::leaky_relu:
      for (auto& v : t.data()) v = v > 0.0 ? v : 0.2 * v;
      return;
    case Activation::sigmoid:
      for (auto& v : t.data()) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                            : std::exp(v) / (1.0 + std::exp(v));
      return;
    case Activation::softplus:
      for (auto& v : t.data()) v = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
      return;
  }
}

}  // namespace

Tensor NetParams::eval(const Tensor& input) const {
  bool was_rank1 = input.rank() == 1;
  Tensor x = was_rank1 ? input.reshaped({1, input.size()}) : input;
  if (x.cols() != input_width()) {
    throw NumericsError("eval: input width " + std::to_string(x.cols()) +
                        " does not match net input width " + std::to_string(input_width()));
  }
  for (const Layer& layer : layers) {
    std::size_t n = x.rows(), in = layer.weight.rows(), out = layer.weight.cols();
    Tensor y({n, out});
    const double* xp = x.data().data();
    const double* wp = layer.weight.data().data();
    const double* bp = layer.bias.data().data();
    double* yp = y.data().data();
    for (std::size_t r = 0; r < n; ++r) {
      double* yrow = yp + r * out;
      for (std::size_t c = 0; c < out; ++c) yrow[c] = bp[c];
      const double* xrow = xp + r * in;
      for (std::size_t k = 0; k < in; ++k) {
        double xv = xrow[k];
        const double* wrow = wp + k * out;
        for (std::size_t c = 0; c < out; ++c) yrow[c] += xv * wrow[c];
      }
    }
    apply_activation_inplace(y, layer.act);
    x = std::move(y);
  }
  if (was_rank1) return x.reshaped({x.size()});
  return x;
}

ForwardPass forward(const NetParams& net, const Tensor& input, Tape& tape) {
  Tensor x = input.rank() == 1 ? input.reshaped({1, input.size()}) : input;
  return forward(net, tape.leaf(std::move(x), true), tape);
}

ForwardPass forward(const NetParams& net, Var input_var, Tape& tape) {
  ForwardPass pass;
  pass.input = input_var;
  Var x = input_var;
  const Tensor& xin = tape.value(x);
  if (xin.rank() != 2 || xin.cols() != net.input_width()) {
    throw NumericsError("forward: input " + xin.shape_str() +
                        " does not match net input width " +
                        std::to_string(net.input_width()));
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& layer = net.layers[i];
    Var w = tape.leaf(layer.weight, true);
    Var b = tape.leaf(layer.bias, true);
    pass.params.push_back(w);
    pass.params.push_back(b);
    if (tape.value(x).cols() != layer.weight.rows()) {
      throw NumericsError("forward: layer " + std::to_string(i) + " expects width " +
                          std::to_string(layer.weight.rows()) + ", got " +
                          std::to_string(tape.value(x).cols()));
    }
    x = tape.affine(x, w, b);
    x = apply_activation(tape, x, layer.act);
  }
  pass.output = x;
  if (!tape.value(x).all_finite()) {
    throw NumericsError("forward produced non-finite output");
  }
  return pass;
}

BackwardResult backward(Tape& tape, const ForwardPass& pass, const Tensor& seed_adjoint) {
  tape.backward(pass.output, seed_adjoint);
  return collect_grads(tape, pass);
}

BackwardResult collect_grads(const Tape& tape, const ForwardPass& pass) {
  BackwardResult out;
  out.param_grads.reserve(pass.params.size());
  for (Var p : pass.params) out.param_grads.push_back(tape.adjoint(p));
  out.input_grad = tape.adjoint(pass.input);
  return out;
}

OptimizerState OptimizerState::sgd(double lr) {
  OptimizerState s;
  s.kind = OptimizerKind::sgd;
  s.learning_rate = lr;
  return s;
}

OptimizerState OptimizerState::adam(double lr, double beta1, double beta2, double epsilon) {
  OptimizerState s;
  s.kind = OptimizerKind::adam;
  s.learning_rate = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void optimizer_step(NetParams& net, const std::vector<Tensor>& grads, OptimizerState& state) {
  if (grads.size() != net.param_tensor_count()) {
    throw EngineError("optimizer_step: got " + std::to_string(grads.size()) +
                      " gradient tensors for " + std::to_string(net.param_tensor_count()) +
                      " parameter tensors");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].all_finite()) {
      throw EngineError("optimizer_step: non-finite gradient at layer " +
                        std::to_string(i / 2) + (i % 2 ? " bias" : " weight") +
                        "; step rejected");
    }
  }

  auto param_at = [&](std::size_t i) -> Tensor& {
    Layer& layer = net.layers[i / 2];
    return i % 2 ? layer.bias : layer.weight;
  };

  if (state.kind == OptimizerKind::sgd) {
    ++state.step_count;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      Tensor& p = param_at(i);
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= state.learning_rate * grads[i][k];
    }
    return;
  }

  if (state.m.empty()) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
      state.m.push_back(Tensor::zeros(grads[i].shape()));
      state.v.push_back(Tensor::zeros(grads[i].shape()));
    }
  }
  ++state.step_count;
  double t = static_cast<double>(state.step_count);
  double bc1 = 1.0 - std::pow(state.beta1, t);
  double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Tensor& p = param_at(i);
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      double g = grads[i][k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      double mhat = m[k] / bc1;
      double vhat = v[k] / bc2;
      p[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

void clip_weights(NetParams& net, double bound) {
  for (Layer& layer : net.layers) {
    for (auto& w : layer.weight.data()) w = std::clamp(w, -bound, bound);
    for (auto& b : layer.bias.data()) b = std::clamp(b, -bound, bound);
  }
}

GradCheckReport grad_check(const NetParams& net, const Tensor& input, double tolerance,
                           double fd_step) {
  if (tolerance <= 0.0) throw NumericsError("grad_check: tolerance must be positive");
  GradCheckReport report;
  report.tolerance = tolerance;
  if (input.size() == 0 || input.rows() == 0) return report;  // empty batch: empty report

  auto objective = [&](const NetParams& n, const Tensor& x) {
    Tensor y = n.eval(x);
    return sum(y);
  };

  Tape tape;
  ForwardPass pass = forward(net, input, tape);
  Tensor seed = Tensor::full(tape.value(pass.output).shape(), 1.0);
  BackwardResult grads = backward(tape, pass, seed);

  auto rel_error = [](double analytic, double numeric) {
    double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / denom;
  };

  NetParams probe = net;
  for (std::size_t i = 0; i < grads.param_grads.size(); ++i) {
    Tensor& p = i % 2 ? probe.layers[i / 2].bias : probe.layers[i / 2].weight;
    GradCheckEntry entry;
    entry.name = "layer" + std::to_string(i / 2) + (i % 2 ? ".bias" : ".weight");
    for (std::size_t k = 0; k < p.size(); ++k) {
      double saved = p[k];
      p[k] = saved + fd_step;
      double up = objective(probe, input);
      p[k] = saved - fd_step;
      double down = objective(probe, input);
      p[k] = saved;
      double numeric = (up - down) / (2.0 * fd_step);
      entry.max_rel_error =
          std::max(entry.max_rel_error, rel_error(grads.param_grads[i][k], numeric));
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }

  Tensor xprobe = input.rank() == 1 ? input.reshaped({1, input.size()}) : input;
  GradCheckEntry entry;
  entry.name = "input";
  for (std::size_t k = 0; k < xprobe.size(); ++k) {
    double saved = xprobe[k];
    xprobe[k] = saved + fd_step;
    double up = objective(net, xprobe);
    xprobe[k] = saved - fd_step;
    double down = objective(net, xprobe);
    xprobe[k] = saved;
    double numeric = (up - down) / (2.0 * fd_step);
    entry.max_rel_error = std::max(entry.max_rel_error, rel_error(grads.input_grad[k], numeric));
  }
  report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
  report.entries.push_back(std::move(entry));

  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace cfgflow
