#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cfgflow/errors.hpp"
#include "cfgflow/rng.hpp"
#include "cfgflow/schedules.hpp"

using namespace cfgflow;

TEST_CASE("geometric_schedule: 15-step [1, 0.01] ladder") {
  WeightSchedule s = geometric_schedule(15, 1.0, 0.01);
  REQUIRE(s.length() == 15);
  CHECK(s.kind == ScheduleKind::annealed_geometric);
  CHECK(s.first() == 1.0);
  CHECK(s.last() == 0.01);
  double ratio = std::pow(0.01, 1.0 / 14.0);
  CHECK(ratio == doctest::Approx(0.71969).epsilon(1e-5));
  CHECK(s.weights[1] == doctest::Approx(ratio).epsilon(1e-12));
  // constant ratio within 1e-12, strictly decreasing
  for (std::size_t m = 0; m + 1 < s.length(); ++m) {
    CHECK(s.weights[m] > s.weights[m + 1]);
    CHECK(s.weights[m] / s.weights[m + 1] == doctest::Approx(1.0 / ratio).epsilon(1e-12));
  }
}

TEST_CASE("geometric_schedule: endpoints-only and perfect-square cases") {
  WeightSchedule two = geometric_schedule(2, 20.0, 1.0);
  CHECK(two.weights == std::vector<double>{20.0, 1.0});

  WeightSchedule three = geometric_schedule(3, 4.0, 1.0);
  CHECK(three.weights[0] == doctest::Approx(4.0));
  CHECK(three.weights[1] == doctest::Approx(2.0));
  CHECK(three.weights[2] == doctest::Approx(1.0));
}

TEST_CASE("geometric_schedule rejects non-decreasing endpoints") {
  CHECK_THROWS_AS(geometric_schedule(5, 0.01, 1.0), ScheduleError);
  CHECK_THROWS_AS(geometric_schedule(5, 1.0, 1.0), ScheduleError);
  CHECK_THROWS_AS(geometric_schedule(1, 1.0, 0.01), ScheduleError);
}

TEST_CASE("reverse_schedule flips order, kind, and is an involution") {
  WeightSchedule s = geometric_schedule(15, 1.0, 0.01);
  WeightSchedule r = reverse_schedule(s);
  CHECK(r.kind == ScheduleKind::reverse_geometric);
  CHECK(r.first() == 0.01);
  CHECK(r.last() == 1.0);
  for (std::size_t m = 0; m + 1 < r.length(); ++m) CHECK(r.weights[m] < r.weights[m + 1]);

  WeightSchedule rr = reverse_schedule(r);
  CHECK(rr.kind == ScheduleKind::annealed_geometric);
  CHECK(rr.weights == s.weights);

  WeightSchedule three = reverse_schedule(geometric_schedule(3, 4.0, 1.0));
  CHECK(three.weights[0] == doctest::Approx(1.0));
  CHECK(three.weights[1] == doctest::Approx(2.0));
  CHECK(three.weights[2] == doctest::Approx(4.0));
}

TEST_CASE("reverse_schedule preserves the weight multiset") {
  WeightSchedule s = geometric_schedule(9, 7.0, 0.2);
  WeightSchedule r = reverse_schedule(s);
  std::vector<double> a = s.weights, b = r.weights;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("initial_weight_from_distance: default buckets match the reference pairings") {
  CHECK(initial_weight_from_distance(125.0) == 1.0);
  CHECK(initial_weight_from_distance(520.0) == 20.0);
  CHECK(initial_weight_from_distance(62.0) == 1.0);
}

TEST_CASE("initial_weight_from_distance honors a custom threshold map") {
  std::map<double, double> buckets = {{50.0, 0.5}, {150.0, 2.0}, {400.0, 8.0}};
  CHECK(initial_weight_from_distance(30.0, buckets, 32.0) == 0.5);
  CHECK(initial_weight_from_distance(50.0, buckets, 32.0) == 0.5);
  CHECK(initial_weight_from_distance(90.0, buckets, 32.0) == 2.0);
  CHECK(initial_weight_from_distance(399.0, buckets, 32.0) == 8.0);
  CHECK(initial_weight_from_distance(1000.0, buckets, 32.0) == 32.0);
}

TEST_CASE("initial_weight_from_distance is monotone in the distance") {
  double prev = 0.0;
  for (double d2 = 1.0; d2 < 1000.0; d2 += 7.0) {
    double w = initial_weight_from_distance(d2);
    CHECK(w >= prev);
    prev = w;
  }
  CHECK_THROWS_AS(initial_weight_from_distance(-3.0), ScheduleError);
}

TEST_CASE("select_gamma: bracket, tolerance, and monotonicity") {
  for (int dim : {1, 2, 3, 32 * 32}) {
    CHECK(gamma_equation(dim, 1.0) == doctest::Approx(0.9973).epsilon(1e-3));
    double gamma = select_gamma(dim, 1e-9);
    CHECK(gamma > 0.0);
    CHECK(gamma < 1.0);
    CHECK(std::abs(gamma_equation(dim, gamma) - 0.5) <= 1e-6);
    // sampled monotonicity on the solution bracket
    double prev = gamma_equation(dim, gamma * 0.5);
    for (double g = gamma * 0.5; g <= std::min(1.0, gamma * 1.5); g += gamma * 0.05) {
      double v = gamma_equation(dim, g);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("alpha_ladder: direct formula and endpoint") {
  SigmaLadder sig = SigmaLadder::from_ratio(1.0, 0.5, 3);
  AlphaLadder a = alpha_ladder(sig, 0.1);
  REQUIRE(a.length() == 3);
  CHECK(a.alphas[0] == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(a.alphas[1] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(a.alphas[2] == 0.1);

  SigmaLadder one = SigmaLadder::from_ratio(2.0, 0.5, 1);
  AlphaLadder single = alpha_ladder(one, 0.25);
  REQUIRE(single.length() == 1);
  CHECK(single.alphas[0] == 0.25);
}

TEST_CASE("alpha_ladder is strictly decreasing for decreasing sigmas") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    double gamma = 0.3 + 0.6 * rng.uniform();
    std::size_t levels = 2 + rng.below(8);
    SigmaLadder sig = SigmaLadder::from_ratio(1.0 + 9.0 * rng.uniform(), gamma, levels);
    for (std::size_t i = 0; i + 1 < sig.length(); ++i) {
      CHECK(sig.sigmas[i] > sig.sigmas[i + 1]);
      CHECK(sig.sigmas[i + 1] / sig.sigmas[i] == doctest::Approx(gamma).epsilon(1e-12));
    }
    AlphaLadder a = alpha_ladder(sig, 0.01);
    for (std::size_t i = 0; i + 1 < a.length(); ++i) CHECK(a.alphas[i] > a.alphas[i + 1]);
    CHECK(a.alphas.back() == 0.01);
  }
}

TEST_CASE("sigma ladder from endpoints pins both ends") {
  SigmaLadder sig = SigmaLadder::from_endpoints(8.0, 0.1, 10);
  CHECK(sig.sigmas.front() == 8.0);
  CHECK(sig.sigmas.back() == 0.1);
  CHECK(sig.gamma == doctest::Approx(std::pow(0.1 / 8.0, 1.0 / 9.0)));
}
