#include "cfgflow/tape.hpp"

#include <cmath>

#include "cfgflow/errors.hpp"

namespace cfgflow {

namespace {

double sigmoid_stable(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_stable(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size()) throw NumericsError("invalid tape handle");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw NumericsError("invalid tape handle");
  return nodes_[v.id];
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::affine(Var x, Var w, Var b) {
  const Tensor& xv = node(x).value;
  const Tensor& wv = node(w).value;
  const Tensor& bv = node(b).value;
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1) {
    throw NumericsError("affine expects x:(n,in) w:(in,out) b:(out)");
  }
  std::size_t nrows = xv.rows(), in = xv.cols(), out = wv.cols();
  if (wv.rows() != in || bv.size() != out) {
    throw NumericsError("affine: x " + xv.shape_str() + " incompatible with w " +
                        wv.shape_str() + ", b " + bv.shape_str());
  }
  Tensor y({nrows, out});
  {
    const double* xp = xv.data().data();
    const double* wp = wv.data().data();
    const double* bp = bv.data().data();
    double* yp = y.data().data();
    for (std::size_t r = 0; r < nrows; ++r) {
      double* yrow = yp + r * out;
      for (std::size_t c = 0; c < out; ++c) yrow[c] = bp[c];
      const double* xrow = xp + r * in;
      for (std::size_t k = 0; k < in; ++k) {
        double xv_k = xrow[k];
        const double* wrow = wp + k * out;
        for (std::size_t c = 0; c < out; ++c) yrow[c] += xv_k * wrow[c];
      }
    }
  }
  Node n;
  n.op = Op::affine;
  n.a = x;
  n.b = w;
  n.c = b;
  n.value = std::move(y);
  return push(std::move(n));
}

Var Tape::tanh(Var x) {
  Tensor y = node(x).value;
  for (auto& v : y.data()) v = std::tanh(v);
  Node n;
  n.op = Op::tanh;
  n.a = x;
  n.value = std::move(y);
  return push(std::move(n));
}

Var Tape::leaky_relu(Var x, double slope) {
  Tensor y = node(x).value;
  for (auto& v : y.data()) v = v > 0.0 ? v : slope * v;
  Node n;
  n.op = Op::leaky_relu;
  n.a = x;
  n.scalar = slope;
  n.value = std::move(y);
  return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
  Tensor y = node(x).value;
  for (auto& v : y.data()) v = sigmoid_stable(v);
  Node n;
  n.op = Op::sigmoid;
  n.a = x;
  n.value = std::move(y);
  return push(std::move(n));
}

Var Tape::softplus(Var x) {
  Tensor y = node(x).value;
  for (auto& v : y.data()) v = softplus_stable(v);
  Node n;
  n.op = Op::softplus;
  n.a = x;
  n.value = std::move(y);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  Node n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.value = cfgflow::add(node(a).value, node(b).value);
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  Node n;
  n.op = Op::sub;
  n.a = a;
  n.b = b;
  n.value = cfgflow::sub(node(a).value, node(b).value);
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  Node n;
  n.op = Op::mul;
  n.a = a;
  n.b = b;
  n.value = cfgflow::mul(node(a).value, node(b).value);
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::scale;
  n.a = a;
  n.scalar = s;
  n.value = cfgflow::scale(node(a).value, s);
  return push(std::move(n));
}

Var Tape::add_scalar(Var a, double s) {
  Node n;
  n.op = Op::add_scalar;
  n.a = a;
  n.scalar = s;
  Tensor y = node(a).value;
  for (auto& v : y.data()) v += s;
  n.value = std::move(y);
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::sum;
  n.a = a;
  n.value = Tensor::scalar(cfgflow::sum(node(a).value));
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  Node n;
  n.op = Op::mean;
  n.a = a;
  n.value = Tensor::scalar(cfgflow::mean(node(a).value));
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

void Tape::accumulate(Var v, const Tensor& grad) {
  Node& n = node(v);
  if (n.adjoint.empty()) {
    n.adjoint = grad;
  } else {
    n.adjoint = cfgflow::add(n.adjoint, grad);
  }
}

void Tape::backward(Var root, const Tensor& seed_adjoint) {
  if (nodes_.empty()) throw NumericsError("backward on empty tape (run forward first)");
  const Node& r = node(root);
  if (!r.value.same_shape(seed_adjoint)) {
    throw NumericsError("backward: seed adjoint shape " + seed_adjoint.shape_str() +
                        " does not match root value shape " + r.value.shape_str());
  }
  for (auto& n : nodes_) n.adjoint = Tensor();
  node(root).adjoint = seed_adjoint;
  ran_backward_ = true;

  for (std::uint32_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.adjoint.empty() || n.op == Op::leaf) continue;
    const Tensor& g = n.adjoint;
    switch (n.op) {
      case Op::affine: {
        const Tensor& xv = node(n.a).value;
        const Tensor& wv = node(n.b).value;
        std::size_t nrows = xv.rows(), in = xv.cols(), out = wv.cols();
        Tensor dx({nrows, in});
        Tensor dw({in, out});
        Tensor db({out});
        const double* xp = xv.data().data();
        const double* wp = wv.data().data();
        const double* gp = g.data().data();
        double* dxp = dx.data().data();
        double* dwp = dw.data().data();
        double* dbp = db.data().data();
        for (std::size_t r2 = 0; r2 < nrows; ++r2) {
          const double* grow = gp + r2 * out;
          const double* xrow = xp + r2 * in;
          double* dxrow = dxp + r2 * in;
          for (std::size_t c = 0; c < out; ++c) dbp[c] += grow[c];
          for (std::size_t k = 0; k < in; ++k) {
            const double* wrow = wp + k * out;
            double* dwrow = dwp + k * out;
            double acc = 0.0;
            double xv_k = xrow[k];
            for (std::size_t c = 0; c < out; ++c) {
              acc += grow[c] * wrow[c];
              dwrow[c] += grow[c] * xv_k;
            }
            dxrow[k] = acc;
          }
        }
        accumulate(n.a, dx);
        accumulate(n.b, dw);
        accumulate(n.c, db);
        break;
      }
      case Op::tanh: {
        Tensor dx = g;
        const Tensor& y = n.value;
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] *= 1.0 - y[k] * y[k];
        accumulate(n.a, dx);
        break;
      }
      case Op::leaky_relu: {
        Tensor dx = g;
        const Tensor& xv = node(n.a).value;
        for (std::size_t k = 0; k < dx.size(); ++k) {
          if (xv[k] <= 0.0) dx[k] *= n.scalar;
        }
        accumulate(n.a, dx);
        break;
      }
      case Op::sigmoid: {
        Tensor dx = g;
        const Tensor& y = n.value;
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] *= y[k] * (1.0 - y[k]);
        accumulate(n.a, dx);
        break;
      }
      case Op::softplus: {
        Tensor dx = g;
        const Tensor& xv = node(n.a).value;
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] *= sigmoid_stable(xv[k]);
        accumulate(n.a, dx);
        break;
      }
      case Op::add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::sub:
        accumulate(n.a, g);
        accumulate(n.b, cfgflow::scale(g, -1.0));
        break;
      case Op::mul:
        accumulate(n.a, cfgflow::mul(g, node(n.b).value));
        accumulate(n.b, cfgflow::mul(g, node(n.a).value));
        break;
      case Op::scale:
        accumulate(n.a, cfgflow::scale(g, n.scalar));
        break;
      case Op::add_scalar:
        accumulate(n.a, g);
        break;
      case Op::sum: {
        const Tensor& xv = node(n.a).value;
        accumulate(n.a, Tensor::full(xv.shape(), g[0]));
        break;
      }
      case Op::mean: {
        const Tensor& xv = node(n.a).value;
        accumulate(n.a, Tensor::full(xv.shape(), g[0] / static_cast<double>(xv.size())));
        break;
      }
      case Op::leaf:
        break;
    }
  }
}

Tensor Tape::adjoint(Var v) const {
  if (!ran_backward_) throw NumericsError("adjoint queried before backward");
  const Node& n = node(v);
  if (n.adjoint.empty()) return Tensor::zeros(n.value.shape());
  return n.adjoint;
}

}  // namespace cfgflow
