#include <doctest.h>

#include <cmath>

#include "cfgflow/errors.hpp"
#include "cfgflow/models.hpp"

using namespace cfgflow;

namespace {

GaussianMixture point_gaussian(double mx, double my) {
  return GaussianMixture::single(
      GaussianComponent(Eigen::Vector2d(mx, my), Eigen::Matrix2d::Identity(), 1.0));
}

Discriminator linear_disc(std::vector<double> w, double b) {
  Discriminator d;
  Layer layer;
  std::size_t in = w.size();
  layer.weight = Tensor({in, 1}, std::move(w));
  layer.bias = Tensor({1}, {b});
  layer.act = Activation::identity;
  d.net.layers.push_back(std::move(layer));
  d.opt = OptimizerState::sgd(0.1);
  return d;
}

}  // namespace

TEST_CASE("disc_value_and_input_grad: linear and constant discriminators") {
  Discriminator lin = linear_disc({2.0, -1.0}, 0.5);
  Tensor x({3, 2}, {0, 0, 1, 1, -2, 3});
  DiscOutput out = disc_value_and_input_grad(lin, x);
  CHECK(out.values[0] == doctest::Approx(0.5));
  CHECK(out.values[1] == doctest::Approx(1.5));
  CHECK(out.values[2] == doctest::Approx(-6.5));
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(out.grads.at(r, 0) == doctest::Approx(2.0));
    CHECK(out.grads.at(r, 1) == doctest::Approx(-1.0));
  }

  Discriminator constant = linear_disc({0.0, 0.0}, 3.0);
  DiscOutput cout_ = disc_value_and_input_grad(constant, x);
  CHECK(max_abs(cout_.grads) == 0.0);
}

TEST_CASE("analytic_disc: shifted-pair closed form") {
  AnalyticDiscriminator d(point_gaussian(1, 0), point_gaussian(0, 0));
  Tensor x({3, 2}, {0.0, 0.0, 2.0, -1.0, -0.5, 0.25});
  DiscOutput out = analytic_disc(d, x);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(out.values[r] == doctest::Approx(x.at(r, 0) - 0.5).epsilon(1e-12));
    CHECK(out.grads.at(r, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.grads.at(r, 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("analytic_disc: identical distributions give zero everywhere") {
  AnalyticDiscriminator d(point_gaussian(0.3, -0.7), point_gaussian(0.3, -0.7));
  Rng rng(3);
  Tensor x = rng.normal_tensor({5, 2});
  DiscOutput out = analytic_disc(d, x);
  CHECK(max_abs(out.values) < 1e-12);
  CHECK(max_abs(out.grads) < 1e-12);
}

TEST_CASE("analytic_disc gradients match finite differences of the values") {
  std::vector<GaussianComponent> star, g;
  star.emplace_back(Eigen::Vector2d(1.2, -0.4), 0.6 * Eigen::Matrix2d::Identity(), 0.5);
  star.emplace_back(Eigen::Vector2d(-1.0, 0.8), 1.3 * Eigen::Matrix2d::Identity(), 0.5);
  g.emplace_back(Eigen::Vector2d(0.0, 0.0), Eigen::Matrix2d::Identity(), 1.0);
  AnalyticDiscriminator d{GaussianMixture(std::move(star)), GaussianMixture(std::move(g))};

  Rng rng(5);
  const double h = 1e-6;
  for (int probe = 0; probe < 50; ++probe) {
    Tensor x({1, 2}, {4 * (rng.uniform() - 0.5), 4 * (rng.uniform() - 0.5)});
    DiscOutput out = analytic_disc(d, x);
    for (int j = 0; j < 2; ++j) {
      Tensor up = x, down = x;
      up.at(0, j) += h;
      down.at(0, j) -= h;
      double numeric =
          (analytic_disc(d, up).values[0] - analytic_disc(d, down).values[0]) / (2 * h);
      CHECK(out.grads.at(0, j) == doctest::Approx(numeric).epsilon(1e-6));
    }
  }
}

TEST_CASE("analytic_disc gradient equals the score difference exactly") {
  GaussianMixture star = point_gaussian(0.7, -0.3);
  GaussianMixture pg = point_gaussian(-0.2, 0.9);
  AnalyticDiscriminator d(star, pg);
  Rng rng(7);
  Tensor x = rng.normal_tensor({20, 2});
  Tensor expected = sub(star.score(x), pg.score(x));
  CHECK(max_abs_diff(analytic_disc(d, x).grads, expected) < 1e-12);
}

TEST_CASE("logistic_disc_update: zero discriminator loss is 2 ln 2") {
  Discriminator d = linear_disc({0.0, 0.0}, 0.0);
  Tensor real({4, 2}, {1, 0, 2, 0, 3, 0, 4, 0});
  Tensor fake({4, 2}, {-1, 0, -2, 0, -3, 0, -4, 0});
  CHECK(logistic_disc_loss(d, real, fake) == doctest::Approx(2.0 * std::log(2.0)));
}

TEST_CASE("logistic loss on identical batches is bounded below by 2 ln 2") {
  Rng rng(9);
  Tensor batch = rng.normal_tensor({16, 2});
  for (int trial = 0; trial < 10; ++trial) {
    Discriminator d = linear_disc({rng.normal(), rng.normal()}, rng.normal());
    CHECK(logistic_disc_loss(d, batch, batch) >= 2.0 * std::log(2.0) - 1e-12);
  }
}

TEST_CASE("logistic loss is invariant under swapping batches and negating D") {
  Rng rng(11);
  Discriminator d;
  d.net = NetParams::mlp({2, 8, 1}, Activation::tanh, Activation::identity, rng);
  d.opt = OptimizerState::sgd(0.1);
  Tensor real = rng.normal_tensor({6, 2});
  Tensor fake = rng.normal_tensor({6, 2});
  double base = logistic_disc_loss(d, real, fake);

  Discriminator neg = d;
  for (auto& w : neg.net.layers.back().weight.data()) w = -w;
  for (auto& b : neg.net.layers.back().bias.data()) b = -b;
  CHECK(logistic_disc_loss(neg, fake, real) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("logistic_disc_update separates two clusters in 500 steps") {
  Rng rng(13);
  Discriminator d;
  d.net = NetParams::mlp({2, 32, 1}, Activation::leaky_relu, Activation::identity, rng);
  d.opt = OptimizerState::adam(1e-2);
  GaussianMixture real_law = GaussianMixture::single(
      GaussianComponent(Eigen::Vector2d(3, 0), 0.1 * Eigen::Matrix2d::Identity(), 1.0));
  GaussianMixture fake_law = GaussianMixture::single(
      GaussianComponent(Eigen::Vector2d(-3, 0), 0.1 * Eigen::Matrix2d::Identity(), 1.0));
  double loss = 0.0;
  for (int step = 0; step < 500; ++step) {
    loss = logistic_disc_update(d, real_law.sample(64, rng), fake_law.sample(64, rng));
  }
  CHECK(loss < 0.1);
}

TEST_CASE("distill_generator: fixed point, zero steps, and convergence") {
  Rng rng(17);
  Generator g = Generator::mlp(2, {8, 2}, Activation::tanh, OptimizerState::sgd(1e-3), rng);
  Tensor z = rng.normal_tensor({32, 2});
  Tensor self_targets = g.net.eval(z);
  NetParams before = g.net;
  CHECK(distill_generator(g, z, self_targets, 5) == doctest::Approx(0.0));
  for (std::size_t l = 0; l < g.net.layers.size(); ++l) {
    CHECK(max_abs_diff(g.net.layers[l].weight, before.layers[l].weight) == 0.0);
  }

  // steps = 0 returns the initial loss without updates
  Tensor other = rng.normal_tensor({32, 2});
  double initial = distill_generator(g, z, other, 0);
  CHECK(initial > 0.0);
  for (std::size_t l = 0; l < g.net.layers.size(); ++l) {
    CHECK(max_abs_diff(g.net.layers[l].weight, before.layers[l].weight) == 0.0);
  }

  // an affine-capable generator regresses onto an affine map
  Generator aff = Generator::mlp(2, {2}, Activation::identity, OptimizerState::adam(1e-2), rng);
  Tensor za = rng.normal_tensor({64, 2});
  Tensor targets({64, 2});
  for (std::size_t i = 0; i < 64; ++i) {
    targets.at(i, 0) = 2.0 * za.at(i, 0) - 1.0 * za.at(i, 1) + 0.5;
    targets.at(i, 1) = 0.3 * za.at(i, 0) + 1.7 * za.at(i, 1) - 2.0;
  }
  double final_loss = distill_generator(aff, za, targets, 2000);
  CHECK(final_loss < 1e-3);
}

TEST_CASE("distill loss is non-increasing at a small sgd rate") {
  Rng rng(19);
  Generator g = Generator::mlp(2, {2}, Activation::identity, OptimizerState::sgd(1e-3), rng);
  Tensor z = rng.normal_tensor({32, 2});
  Tensor targets = rng.normal_tensor({32, 2});
  double prev = distill_generator(g, z, targets, 0);
  for (int step = 0; step < 200; ++step) {
    double cur = distill_generator(g, z, targets, 1);
    CHECK(cur <= prev + 1e-9);
    prev = cur;
  }
}

TEST_CASE("distill_generator rejects mismatched batches") {
  Rng rng(21);
  Generator g = Generator::mlp(2, {4, 2}, Activation::tanh, OptimizerState::sgd(0.1), rng);
  CHECK_THROWS_AS(distill_generator(g, rng.normal_tensor({8, 2}), rng.normal_tensor({7, 2}), 1),
                  NumericsError);
}
