#pragma once

#include <map>
#include <vector>

namespace cfgflow {

enum class ScheduleKind { annealed_geometric, constant, reverse_geometric };

/// Ordered positive step weights w[1..M]. annealed_geometric is strictly
/// decreasing with a constant ratio; reverse_geometric strictly
/// increasing; constant all equal.
struct WeightSchedule {
  std::vector<double> weights;
  ScheduleKind kind = ScheduleKind::constant;

  std::size_t length() const { return weights.size(); }
  double first() const { return weights.front(); }
  double last() const { return weights.back(); }
};

/// w[1] = w_first, w[M] = w_last, uniform ratio (w_last/w_first)^(1/(M-1)).
/// Requires M >= 2 and w_first > w_last > 0.
WeightSchedule geometric_schedule(std::size_t steps, double w_first, double w_last);

WeightSchedule constant_schedule(std::size_t steps, double w);

/// Reverses an annealed-geometric schedule into a strictly increasing one.
WeightSchedule reverse_schedule(const WeightSchedule& s);

/// Picks the starting weight from the median pairwise distance between
/// training and initial synthesized samples: the weight of the smallest
/// threshold >= d2, or the largest bucket's weight beyond all thresholds.
/// `thresholds` maps distance upper bounds to weights, e.g.
/// {{200, 1}, {inf handled by fallback_weight}}.
double initial_weight_from_distance(double d2, const std::map<double, double>& thresholds,
                                    double fallback_weight);

/// Default bucket map calibrated so d2 <= 200 -> 1 and larger -> 20.
double initial_weight_from_distance(double d2);

/// Solves Phi(sqrt(2*dim)(g-1) + 3g) - Phi(sqrt(2*dim)(g-1) - 3g) = 0.5
/// for g in (0,1) by bisection, where Phi is the standard normal CDF.
double select_gamma(int dim, double tolerance = 1e-9);

/// The gamma-equation left-hand side, exposed for tests.
double gamma_equation(int dim, double gamma);

/// Noise ladder sigma[1..L], strictly decreasing geometric progression.
struct SigmaLadder {
  std::vector<double> sigmas;
  double gamma = 0.5;  // common ratio sigma[i+1]/sigma[i]

  std::size_t length() const { return sigmas.size(); }

  /// sigma_first * gamma^(i-1), i = 1..levels.
  static SigmaLadder from_ratio(double sigma_first, double gamma, std::size_t levels);
  /// Endpoints fixed; gamma = (sigma_last/sigma_first)^(1/(L-1)).
  static SigmaLadder from_endpoints(double sigma_first, double sigma_last, std::size_t levels);
};

/// Step sizes alpha_i = epsilon * sigma_i^2 / sigma_L^2; alpha_L = epsilon.
struct AlphaLadder {
  std::vector<double> alphas;
  double epsilon = 0.0;

  std::size_t length() const { return alphas.size(); }
};

AlphaLadder alpha_ladder(const SigmaLadder& sigmas, double epsilon);

}  // namespace cfgflow
