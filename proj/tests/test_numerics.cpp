#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "cfgflow/errors.hpp"
#include "cfgflow/net.hpp"
#include "cfgflow/rng.hpp"
#include "cfgflow/tape.hpp"

using namespace cfgflow;

namespace {

NetParams single_affine(std::vector<double> w, std::size_t in, std::size_t out,
                        std::vector<double> b) {
  NetParams net;
  Layer layer;
  layer.weight = Tensor({in, out}, std::move(w));
  layer.bias = Tensor({out}, std::move(b));
  layer.act = Activation::identity;
  net.layers.push_back(std::move(layer));
  return net;
}

}  // namespace

TEST_CASE("rng determinism and stream splitting") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  // split is pure: independent of how much the parent has consumed
  Rng parent1(7), parent2(7);
  (void)parent1.next_u64();
  (void)parent1.next_u64();
  Rng s1 = parent1.split("data", 3);
  Rng s2 = parent2.split("data", 3);
  CHECK(s1.next_u64() == s2.next_u64());
  // different labels and indices give different streams
  Rng other = parent2.split("data", 4);
  CHECK(s2.next_u64() != other.next_u64());

  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("forward: single affine layer") {
  NetParams net = single_affine({2.0}, 1, 1, {1.0});
  Tape tape;
  ForwardPass pass = forward(net, Tensor::row({3.0}), tape);
  CHECK(tape.value(pass.output)[0] == doctest::Approx(7.0));
}

TEST_CASE("forward: zero weights give the bias vector") {
  NetParams net = single_affine({0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, 2, 3, {1.5, -2.0, 0.25});
  Tape tape;
  ForwardPass pass = forward(net, Tensor({2, 2}, {5.0, -1.0, 0.3, 9.0}), tape);
  const Tensor& y = tape.value(pass.output);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(y.at(r, 0) == doctest::Approx(1.5));
    CHECK(y.at(r, 1) == doctest::Approx(-2.0));
    CHECK(y.at(r, 2) == doctest::Approx(0.25));
  }
}

TEST_CASE("forward: 2-16-16-1 output shape and mismatch error") {
  Rng rng(3);
  NetParams net = NetParams::mlp({2, 16, 16, 1}, Activation::tanh, Activation::identity, rng);
  Tape tape;
  ForwardPass pass = forward(net, rng.normal_tensor({8, 2}), tape);
  CHECK(tape.value(pass.output).rows() == 8);
  CHECK(tape.value(pass.output).cols() == 1);

  Tape bad;
  CHECK_THROWS_WITH_AS(forward(net, rng.normal_tensor({8, 3}), bad),
                       doctest::Contains("input"), NumericsError);
}

TEST_CASE("backward: linear map input gradient is the weight row") {
  NetParams net = single_affine({2.0, -3.0}, 2, 1, {0.0});  // D(x) = 2 x1 - 3 x2
  Tape tape;
  ForwardPass pass = forward(net, Tensor({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}), tape);
  BackwardResult grads = backward(tape, pass, Tensor::full({4, 1}, 1.0));
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(grads.input_grad.at(r, 0) == doctest::Approx(2.0));
    CHECK(grads.input_grad.at(r, 1) == doctest::Approx(-3.0));
  }
}

TEST_CASE("backward: zero seed gives zero gradients") {
  Rng rng(11);
  NetParams net = NetParams::mlp({3, 8, 2}, Activation::sigmoid, Activation::identity, rng);
  Tape tape;
  ForwardPass pass = forward(net, rng.normal_tensor({5, 3}), tape);
  BackwardResult grads = backward(tape, pass, Tensor::zeros({5, 2}));
  CHECK(max_abs(grads.input_grad) == 0.0);
  for (const auto& g : grads.param_grads) CHECK(max_abs(g) == 0.0);
}

TEST_CASE("backward before forward is a usage error") {
  Tape tape;
  CHECK_THROWS_AS(tape.backward(Var{0}, Tensor::scalar(1.0)), NumericsError);
}

TEST_CASE("backward: tanh net input gradient matches finite differences") {
  Rng rng(17);
  NetParams net = NetParams::mlp({2, 8, 1}, Activation::tanh, Activation::identity, rng);
  Tensor x = rng.normal_tensor({3, 2});

  Tape tape;
  ForwardPass pass = forward(net, x, tape);
  BackwardResult grads = backward(tape, pass, Tensor::full({3, 1}, 1.0));

  const double h = 1e-5;
  for (std::size_t k = 0; k < x.size(); ++k) {
    Tensor up = x, down = x;
    up[k] += h;
    down[k] -= h;
    double numeric = (sum(net.eval(up)) - sum(net.eval(down))) / (2.0 * h);
    double analytic = grads.input_grad[k];
    double rel = std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic)});
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("backward correctness: every primitive against finite differences") {
  // 100 random probes across the primitive set, driven through small
  // tape graphs with a scalar objective.
  Rng rng(23);
  const double h = 1e-5;
  int probes = 0;
  while (probes < 100) {
    Tensor a = rng.uniform_tensor({2, 3}, -2.0, 2.0);
    Tensor b = rng.uniform_tensor({2, 3}, -2.0, 2.0);
    std::size_t which = probes % 10;

    auto objective = [&](const Tensor& av, const Tensor& bv) {
      Tape t;
      Var va = t.leaf(av), vb = t.leaf(bv);
      Var expr;
      switch (which) {
        case 0: expr = t.add(va, vb); break;
        case 1: expr = t.sub(va, vb); break;
        case 2: expr = t.mul(va, vb); break;
        case 3: expr = t.scale(va, 1.7); break;
        case 4: expr = t.add_scalar(va, -0.3); break;
        case 5: expr = t.tanh(va); break;
        case 6: expr = t.leaky_relu(va, 0.2); break;
        case 7: expr = t.sigmoid(va); break;
        case 8: expr = t.softplus(va); break;
        default: expr = t.mul(t.tanh(va), t.sigmoid(vb)); break;
      }
      Var obj = t.mean(expr);
      return std::tuple<Tape, Var, Var, Var>(std::move(t), va, vb, obj);
    };

    auto [tape, va, vb, obj] = objective(a, b);
    double base_unused = tape.value(obj)[0];
    (void)base_unused;
    tape.backward_scalar(obj);
    Tensor ga = tape.adjoint(va);
    Tensor gb = tape.adjoint(vb);

    auto value_at = [&](const Tensor& av, const Tensor& bv) {
      auto [t2, x1, x2, o2] = objective(av, bv);
      (void)x1;
      (void)x2;
      return t2.value(o2)[0];
    };

    bool skip = false;
    for (std::size_t k = 0; k < a.size() && !skip; ++k) {
      // keep clear of the leaky-relu kink where differences are one-sided
      if (which == 6 && std::abs(a[k]) < 10 * h) skip = true;
    }
    if (skip) continue;

    for (std::size_t k = 0; k < a.size(); ++k) {
      Tensor up = a, down = a;
      up[k] += h;
      down[k] -= h;
      double numeric = (value_at(up, b) - value_at(down, b)) / (2.0 * h);
      double rel = std::abs(ga[k] - numeric) / std::max({1.0, std::abs(ga[k])});
      CHECK(rel < 1e-4);
    }
    for (std::size_t k = 0; k < b.size(); ++k) {
      Tensor up = b, down = b;
      up[k] += h;
      down[k] -= h;
      double numeric = (value_at(a, up) - value_at(a, down)) / (2.0 * h);
      double rel = std::abs(gb[k] - numeric) / std::max({1.0, std::abs(gb[k])});
      CHECK(rel < 1e-4);
    }
    ++probes;
  }
}

TEST_CASE("backward is linear in the seed adjoint") {
  Rng rng(31);
  NetParams net = NetParams::mlp({2, 6, 2}, Activation::softplus, Activation::identity, rng);
  Tensor x = rng.normal_tensor({4, 2});
  Tensor u = rng.normal_tensor({4, 2});
  Tensor v = rng.normal_tensor({4, 2});
  const double alpha = 0.7, beta = -1.3;

  Tape tape;
  ForwardPass pass = forward(net, x, tape);

  BackwardResult gu = backward(tape, pass, u);
  BackwardResult gv = backward(tape, pass, v);
  BackwardResult gmix = backward(tape, pass, add(scale(u, alpha), scale(v, beta)));

  Tensor expect = add(scale(gu.input_grad, alpha), scale(gv.input_grad, beta));
  CHECK(max_abs_diff(gmix.input_grad, expect) < 1e-10);
  for (std::size_t i = 0; i < gmix.param_grads.size(); ++i) {
    Tensor pe = add(scale(gu.param_grads[i], alpha), scale(gv.param_grads[i], beta));
    CHECK(max_abs_diff(gmix.param_grads[i], pe) < 1e-10);
  }
}

TEST_CASE("optimizer: zero gradients leave parameters unchanged") {
  Rng rng(5);
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    NetParams net = NetParams::mlp({2, 4, 1}, Activation::tanh, Activation::identity, rng);
    NetParams before = net;
    OptimizerState opt =
        kind == OptimizerKind::sgd ? OptimizerState::sgd(0.1) : OptimizerState::adam(0.1);
    std::vector<Tensor> grads;
    for (const auto& layer : net.layers) {
      grads.push_back(Tensor::zeros(layer.weight.shape()));
      grads.push_back(Tensor::zeros(layer.bias.shape()));
    }
    optimizer_step(net, grads, opt);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      CHECK(max_abs_diff(net.layers[l].weight, before.layers[l].weight) == 0.0);
      CHECK(max_abs_diff(net.layers[l].bias, before.layers[l].bias) == 0.0);
    }
  }
}

TEST_CASE("optimizer: sgd rule and adam first-step magnitude") {
  NetParams net = single_affine({1.0, 2.0}, 2, 1, {3.0});
  OptimizerState sgd = OptimizerState::sgd(0.1);
  std::vector<Tensor> grads = {Tensor({2, 1}, {0.5, -1.0}), Tensor({1}, {2.0})};
  optimizer_step(net, grads, sgd);
  CHECK(net.layers[0].weight[0] == doctest::Approx(1.0 - 0.05));
  CHECK(net.layers[0].weight[1] == doctest::Approx(2.0 + 0.1));
  CHECK(net.layers[0].bias[0] == doctest::Approx(3.0 - 0.2));

  // First adam step from zero moments: update = lr * g / (|g| + eps),
  // so the magnitude is ~lr for any nonzero gradient.
  NetParams net2 = single_affine({1.0, 2.0}, 2, 1, {3.0});
  OptimizerState adam = OptimizerState::adam(0.01);
  optimizer_step(net2, grads, adam);
  CHECK(std::abs(net2.layers[0].weight[0] - 1.0) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(std::abs(net2.layers[0].weight[1] - 2.0) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(net2.layers[0].weight[0] < 1.0);  // moves against the gradient
  CHECK(net2.layers[0].weight[1] > 2.0);
}

TEST_CASE("optimizer: non-finite gradient rejects the step naming the layer") {
  NetParams net = single_affine({1.0}, 1, 1, {0.0});
  NetParams before = net;
  OptimizerState opt = OptimizerState::sgd(0.1);
  std::vector<Tensor> grads = {Tensor({1, 1}, {std::nan("")}), Tensor({1}, {0.0})};
  CHECK_THROWS_WITH_AS(optimizer_step(net, grads, opt), doctest::Contains("layer 0"),
                       EngineError);
  CHECK(net.layers[0].weight[0] == before.layers[0].weight[0]);
}

TEST_CASE("grad_check: linear, tanh, and empty cases") {
  NetParams linear = single_affine({1.25, -0.5}, 2, 1, {0.75});
  Rng rng(41);
  GradCheckReport lin = grad_check(linear, rng.normal_tensor({4, 2}), 1e-6);
  CHECK(lin.max_rel_error < 1e-8);
  CHECK(lin.passed);

  NetParams net = NetParams::mlp({2, 16, 1}, Activation::tanh, Activation::identity, rng);
  GradCheckReport rep = grad_check(net, rng.normal_tensor({4, 2}), 1e-4);
  CHECK(rep.max_rel_error < 1e-4);
  CHECK(rep.passed);

  GradCheckReport empty = grad_check(net, Tensor({0, 2}), 1e-4);
  CHECK(empty.entries.empty());
  CHECK(empty.passed);
}

TEST_CASE("determinism: identical seeds reproduce tensors bit-for-bit") {
  auto build = [](std::uint64_t seed) {
    Rng rng(seed);
    NetParams net = NetParams::mlp({2, 8, 2}, Activation::leaky_relu, Activation::identity, rng);
    Tensor x = rng.normal_tensor({16, 2});
    return net.eval(x);
  };
  Tensor a = build(99), b = build(99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
