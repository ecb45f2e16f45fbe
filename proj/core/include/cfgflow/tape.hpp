#pragma once

#include <cstdint>
#include <vector>

#include "cfgflow/tensor.hpp"

namespace cfgflow {

/// Handle to a node on a Tape.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

/// Reverse-mode differentiation tape. Nodes are appended in evaluation
/// order, so parent indices always precede children and the backward
/// sweep is a single reverse pass that touches each node once.
///
/// Supported primitives: affine map, tanh, leaky-relu, sigmoid,
/// softplus, elementwise arithmetic, scalar reductions.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = true);

  /// x: (n,in), w: (in,out), b: (out) -> (n,out)
  Var affine(Var x, Var w, Var b);

  Var tanh(Var x);
  Var leaky_relu(Var x, double slope = 0.2);
  Var relu(Var x) { return leaky_relu(x, 0.0); }
  Var sigmoid(Var x);
  Var softplus(Var x);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var neg(Var a) { return scale(a, -1.0); }

  /// Reductions produce a shape-(1) scalar node.
  Var sum(Var a);
  Var mean(Var a);

  const Tensor& value(Var v) const;

  /// Seeds the root with `seed_adjoint` (shape must match the root
  /// value) and accumulates adjoints into every ancestor. Previous
  /// adjoints are discarded, so repeated calls with different seeds are
  /// independent. Throws NumericsError if the tape is empty or the seed
  /// shape mismatches.
  void backward(Var root, const Tensor& seed_adjoint);
  void backward_scalar(Var root) { backward(root, Tensor::scalar(1.0)); }

  /// Adjoint accumulated by the last backward(); zero tensor if the
  /// node was not an ancestor of the root.
  Tensor adjoint(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    leaf,
    affine,
    tanh,
    leaky_relu,
    sigmoid,
    softplus,
    add,
    sub,
    mul,
    scale,
    add_scalar,
    sum,
    mean,
  };

  struct Node {
    Op op;
    Var a, b, c;
    double scalar = 0.0;
    Tensor value;
    Tensor adjoint;      // empty until touched by backward
    bool requires_grad = false;
  };

  Var push(Node node);
  Node& node(Var v);
  const Node& node(Var v) const;
  void accumulate(Var v, const Tensor& grad);

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace cfgflow
