#include "cfgflow/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cfgflow/errors.hpp"

namespace cfgflow {

WeightSchedule geometric_schedule(std::size_t steps, double w_first, double w_last) {
  if (steps < 2) throw ScheduleError("geometric schedule needs at least 2 steps");
  if (w_last <= 0.0) throw ScheduleError("schedule endpoints must be positive");
  if (w_first <= w_last) {
    throw ScheduleError("geometric schedule requires w_first > w_last; use the reverse "
                        "constructor for increasing weights");
  }
  WeightSchedule s;
  s.kind = ScheduleKind::annealed_geometric;
  s.weights.resize(steps);
  double ratio = std::pow(w_last / w_first, 1.0 / static_cast<double>(steps - 1));
  for (std::size_t m = 0; m < steps; ++m) {
    s.weights[m] = w_first * std::pow(ratio, static_cast<double>(m));
  }
  // Pin the endpoints exactly; interior points keep the uniform ratio.
  s.weights.front() = w_first;
  s.weights.back() = w_last;
  return s;
}

WeightSchedule constant_schedule(std::size_t steps, double w) {
  if (steps < 1) throw ScheduleError("constant schedule needs at least 1 step");
  if (w <= 0.0) throw ScheduleError("schedule weight must be positive");
  WeightSchedule s;
  s.kind = ScheduleKind::constant;
  s.weights.assign(steps, w);
  return s;
}

WeightSchedule reverse_schedule(const WeightSchedule& s) {
  WeightSchedule out = s;
  std::reverse(out.weights.begin(), out.weights.end());
  switch (s.kind) {
    case ScheduleKind::annealed_geometric:
      out.kind = ScheduleKind::reverse_geometric;
      break;
    case ScheduleKind::reverse_geometric:
      out.kind = ScheduleKind::annealed_geometric;
      break;
    case ScheduleKind::constant:
      out.kind = ScheduleKind::constant;
      break;
  }
  return out;
}

double initial_weight_from_distance(double d2, const std::map<double, double>& thresholds,
                                    double fallback_weight) {
  if (d2 <= 0.0) throw ScheduleError("pairwise distance must be positive");
  if (thresholds.empty()) throw ScheduleError("threshold map is empty");
  auto it = thresholds.lower_bound(d2);  // smallest threshold >= d2
  if (it == thresholds.end()) return fallback_weight;
  return it->second;
}

double initial_weight_from_distance(double d2) {
  static const std::map<double, double> kDefault = {{200.0, 1.0}};
  return initial_weight_from_distance(d2, kDefault, 20.0);
}

namespace {
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
}  // namespace

double gamma_equation(int dim, double gamma) {
  double root2d = std::sqrt(2.0 * static_cast<double>(dim));
  double a = root2d * (gamma - 1.0) + 3.0 * gamma;
  double b = root2d * (gamma - 1.0) - 3.0 * gamma;
  return normal_cdf(a) - normal_cdf(b);
}

double select_gamma(int dim, double tolerance) {
  if (dim < 1) throw ScheduleError("select_gamma: dimension must be >= 1");
  double lo = 1e-12, hi = 1.0 - 1e-12;
  double flo = gamma_equation(dim, lo) - 0.5;
  double fhi = gamma_equation(dim, hi) - 0.5;
  if (flo * fhi > 0.0) {
    throw ScheduleError("select_gamma: no sign change on (0,1)");
  }
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    double fmid = gamma_equation(dim, mid) - 0.5;
    if (std::abs(fmid) <= tolerance) return mid;
    if (flo * fmid <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }
  return 0.5 * (lo + hi);
}

SigmaLadder SigmaLadder::from_ratio(double sigma_first, double gamma, std::size_t levels) {
  if (sigma_first <= 0.0) throw ScheduleError("sigma ladder start must be positive");
  if (levels >= 2 && (gamma <= 0.0 || gamma >= 1.0)) {
    throw ScheduleError("sigma ladder ratio must be in (0,1)");
  }
  SigmaLadder s;
  s.gamma = gamma;
  s.sigmas.resize(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    s.sigmas[i] = sigma_first * std::pow(gamma, static_cast<double>(i));
  }
  return s;
}

SigmaLadder SigmaLadder::from_endpoints(double sigma_first, double sigma_last,
                                        std::size_t levels) {
  if (levels < 2) throw ScheduleError("sigma ladder from endpoints needs >= 2 levels");
  if (sigma_first <= sigma_last || sigma_last <= 0.0) {
    throw ScheduleError("sigma ladder requires sigma_first > sigma_last > 0");
  }
  double gamma = std::pow(sigma_last / sigma_first, 1.0 / static_cast<double>(levels - 1));
  SigmaLadder s = from_ratio(sigma_first, gamma, levels);
  s.sigmas.back() = sigma_last;
  return s;
}

AlphaLadder alpha_ladder(const SigmaLadder& sigmas, double epsilon) {
  if (epsilon <= 0.0) throw ScheduleError("alpha ladder epsilon must be positive");
  if (sigmas.sigmas.empty()) throw ScheduleError("alpha ladder needs a non-empty sigma ladder");
  AlphaLadder a;
  a.epsilon = epsilon;
  double last2 = sigmas.sigmas.back() * sigmas.sigmas.back();
  a.alphas.reserve(sigmas.sigmas.size());
  for (double s : sigmas.sigmas) {
    a.alphas.push_back(epsilon * (s * s) / last2);
  }
  a.alphas.back() = epsilon;  // exact by construction
  return a;
}

}  // namespace cfgflow
