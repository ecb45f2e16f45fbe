#pragma once

#include <string>
#include <vector>

#include "cfgflow/rng.hpp"
#include "cfgflow/tape.hpp"
#include "cfgflow/tensor.hpp"

namespace cfgflow {

enum class Activation { identity, tanh, leaky_relu, sigmoid, softplus };

struct Layer {
  Tensor weight;  // (in, out)
  Tensor bias;    // (out)
  Activation act = Activation::identity;
};

/// Stack of affine layers with pointwise nonlinearities. Parameters are
/// flattened in layer order as [w0, b0, w1, b1, ...] wherever a gradient
/// list or optimizer state aligns with them.
struct NetParams {
  std::vector<Layer> layers;

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t param_tensor_count() const { return layers.size() * 2; }

  /// He-style scaled initialization. `widths` includes input and output,
  /// e.g. {2, 64, 64, 1}. Hidden layers get `hidden`, the last layer
  /// `output` (identity output gives the raw-logit nets used here).
  static NetParams mlp(const std::vector<std::size_t>& widths, Activation hidden,
                       Activation output, Rng& rng);

  /// Tape-free evaluation (no gradients recorded). Accepts (n,d) or a
  /// single rank-1 point, mirroring forward().
  Tensor eval(const Tensor& input) const;
};

/// Handles into a tape for one network application.
struct ForwardPass {
  Var input;
  std::vector<Var> params;  // [w0, b0, w1, b1, ...]
  Var output;
};

/// Records the network application on the tape and returns the handles
/// needed to read gradients after backward. Throws NumericsError naming
/// the layer on a shape mismatch.
ForwardPass forward(const NetParams& net, const Tensor& input, Tape& tape);

/// Replays the network on `input_var`, an existing tape node (used when
/// the input is itself a differentiable result, e.g. D(G(z))).
ForwardPass forward(const NetParams& net, Var input_var, Tape& tape);

struct BackwardResult {
  std::vector<Tensor> param_grads;  // aligned with ForwardPass::params
  Tensor input_grad;
};

/// Seeds the pass output with `seed_adjoint` and returns gradients for
/// every parameter tensor and the input batch.
BackwardResult backward(Tape& tape, const ForwardPass& pass, const Tensor& seed_adjoint);

/// Reads this pass's gradients after a backward() driven from some other
/// root (e.g. a composite loss node).
BackwardResult collect_grads(const Tape& tape, const ForwardPass& pass);

enum class OptimizerKind { sgd, adam };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<Tensor> m;  // first moments, aligned with params
  std::vector<Tensor> v;  // second moments

  static OptimizerState sgd(double lr);
  static OptimizerState adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                             double epsilon = 1e-8);
};

/// One optimizer step in place. Throws EngineError naming the layer if a
/// gradient is non-finite; parameters are untouched in that case.
void optimizer_step(NetParams& net, const std::vector<Tensor>& grads, OptimizerState& state);

/// Clamps every weight and bias to [-bound, bound].
void clip_weights(NetParams& net, double bound);

struct GradCheckEntry {
  std::string name;  // "layer0.weight", "input", ...
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::vector<GradCheckEntry> entries;
};

/// Compares tape gradients of sum(net(input)) against central finite
/// differences for every parameter entry and every input entry.
GradCheckReport grad_check(const NetParams& net, const Tensor& input, double tolerance,
                           double fd_step = 1e-5);

}  // namespace cfgflow
