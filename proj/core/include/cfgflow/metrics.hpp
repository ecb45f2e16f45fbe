#pragma once

#include <optional>

#include "cfgflow/gaussian.hpp"
#include "cfgflow/models.hpp"

namespace cfgflow {

/// Moment-matched Gaussian fit of a point batch. Covariance is
/// symmetrized and eigenvalue-clamped at 1e-10 so downstream matrix
/// square roots stay defined.
struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  static GaussianFit from_points(const Tensor& points);
  static GaussianFit from_component(const GaussianComponent& c);

  GaussianComponent as_component() const;
};

/// 2-Wasserstein distance squared between Gaussian fits:
///   ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2).
double frechet_gaussian(const GaussianFit& a, const GaussianFit& b);

struct ModeReport {
  std::size_t modes_covered = 0;
  std::size_t modes_total = 0;
  double high_quality_fraction = 0.0;
  std::vector<std::size_t> occupancy;  // samples assigned per mode
};

/// Assigns samples to the nearest mixture mode. A mode counts as covered
/// when at least max(20, 1% of samples) of its members fall within
/// radius_sigmas * sigma_k of its mean; the high-quality fraction is the
/// share of all samples within that radius of their assigned mode.
ModeReport mode_report(const Tensor& samples, const GaussianMixture& truth,
                       double quality_radius_sigmas);

/// Median Euclidean distance over all pairs within `a`, or across
/// (a, b) when `b` is given. Pair sets beyond 1e6 are subsampled with a
/// fixed internal seed.
double median_pairwise(const Tensor& a, const Tensor* b = nullptr);

struct FieldDump {
  std::size_t nx = 0, ny = 0;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  std::vector<double> x, y, gx, gy;  // row-major over the grid
};

struct ScoreFieldReport {
  double mean_l2_gap = 0.0;
  FieldDump field;  // the discriminator gradient field
};

struct GridSpec {
  std::size_t nx = 21, ny = 21;
  double xmin = -2, xmax = 3, ymin = -2, ymax = 2;
};

/// Evaluates the discriminator gradient on the grid and compares it with
/// the analytic score difference score(truth) - score(reference_g).
ScoreFieldReport score_diff_field(const DiscField& field, const GaussianMixture& truth,
                                  const GaussianMixture& reference_g, const GridSpec& grid);

}  // namespace cfgflow
