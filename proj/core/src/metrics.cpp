#include "cfgflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfgflow/errors.hpp"
#include "cfgflow/rng.hpp"

namespace cfgflow {

namespace {

Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.eigenvalues().minCoeff() < -1e-8) {
    throw DistributionError("matrix square root of a non-PSD matrix");
  }
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GaussianFit GaussianFit::from_points(const Tensor& points) {
  std::size_t n = points.rows(), d = points.cols();
  if (n == 0) throw DistributionError("moment fit of an empty batch");
  GaussianFit fit;
  fit.mean = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < n; ++i) fit.mean += tensor_row(points, i);
  fit.mean /= static_cast<double>(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd diff = tensor_row(points, i) - fit.mean;
    cov += diff * diff.transpose();
  }
  cov /= static_cast<double>(n);
  fit.cov = clamp_psd(cov, 1e-10);
  return fit;
}

GaussianFit GaussianFit::from_component(const GaussianComponent& c) {
  GaussianFit fit;
  fit.mean = c.mean();
  fit.cov = c.cov();
  return fit;
}

GaussianComponent GaussianFit::as_component() const {
  return GaussianComponent(mean, clamp_psd(cov, 1e-10), 1.0);
}

double frechet_gaussian(const GaussianFit& a, const GaussianFit& b) {
  if (a.mean.size() != b.mean.size()) {
    throw DistributionError("frechet_gaussian: dimension mismatch");
  }
  double mean_term = (a.mean - b.mean).squaredNorm();
  Eigen::MatrixXd ra = sqrt_psd(a.cov);
  Eigen::MatrixXd cross = sqrt_psd(ra * b.cov * ra);
  double trace_term = (a.cov + b.cov - 2.0 * cross).trace();
  return mean_term + trace_term;
}

ModeReport mode_report(const Tensor& samples, const GaussianMixture& truth,
                       double quality_radius_sigmas) {
  if (quality_radius_sigmas <= 0.0) {
    throw DistributionError("mode_report: radius multiplier must be positive");
  }
  const auto& comps = truth.components();
  ModeReport report;
  report.modes_total = comps.size();
  report.occupancy.assign(comps.size(), 0);
  std::vector<std::size_t> within(comps.size(), 0);
  std::size_t n = samples.rows(), quality_count = 0;

  // Per-mode scale: sqrt of the largest covariance eigenvalue.
  std::vector<double> mode_sigma(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comps[k].cov());
    mode_sigma[k] = std::sqrt(es.eigenvalues().maxCoeff());
  }

  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x = tensor_row(samples, i);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      double dist = (x - comps[k].mean()).norm();
      if (dist < best) {
        best = dist;
        best_k = k;
      }
    }
    report.occupancy[best_k]++;
    if (best <= quality_radius_sigmas * mode_sigma[best_k]) {
      within[best_k]++;
      quality_count++;
    }
  }

  std::size_t need = std::max<std::size_t>(20, n / 100);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (within[k] >= need) report.modes_covered++;
  }
  report.high_quality_fraction = n ? static_cast<double>(quality_count) / n : 0.0;
  return report;
}

double median_pairwise(const Tensor& a, const Tensor* b) {
  constexpr std::size_t kMaxPairs = 1000000;
  std::vector<double> dists;
  auto dist = [](const Tensor& p, std::size_t i, const Tensor& q, std::size_t j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < p.cols(); ++c) {
      double d = p.at(i, c) - q.at(j, c);
      acc += d * d;
    }
    return std::sqrt(acc);
  };

  if (b == nullptr) {
    std::size_t n = a.rows();
    if (n < 2) throw DistributionError("median_pairwise needs at least 2 points");
    std::size_t total = n * (n - 1) / 2;
    if (total <= kMaxPairs) {
      dists.reserve(total);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) dists.push_back(dist(a, i, a, j));
      }
    } else {
      Rng rng(0x9C0FFEEull);
      dists.reserve(kMaxPairs);
      while (dists.size() < kMaxPairs) {
        std::size_t i = rng.below(n), j = rng.below(n);
        if (i != j) dists.push_back(dist(a, i, a, j));
      }
    }
  } else {
    std::size_t n = a.rows(), m = b->rows();
    if (n < 1 || m < 1) throw DistributionError("median_pairwise needs non-empty batches");
    if (a.cols() != b->cols()) throw DistributionError("median_pairwise: dimension mismatch");
    std::size_t total = n * m;
    if (total <= kMaxPairs) {
      dists.reserve(total);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) dists.push_back(dist(a, i, *b, j));
      }
    } else {
      Rng rng(0x9C0FFEEull);
      dists.reserve(kMaxPairs);
      while (dists.size() < kMaxPairs) {
        dists.push_back(dist(a, rng.below(n), *b, rng.below(m)));
      }
    }
  }

  std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  double upper = dists[mid];
  if (dists.size() % 2 == 1) return upper;
  std::nth_element(dists.begin(), dists.begin() + (mid - 1), dists.begin() + mid);
  return 0.5 * (upper + dists[mid - 1]);
}

ScoreFieldReport score_diff_field(const DiscField& field, const GaussianMixture& truth,
                                  const GaussianMixture& reference_g, const GridSpec& grid) {
  if (grid.nx < 2 || grid.ny < 2) throw DistributionError("score_diff_field: grid too small");
  std::size_t total = grid.nx * grid.ny;
  Tensor points({total, 2});
  std::size_t idx = 0;
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix, ++idx) {
      points.at(idx, 0) = grid.xmin + (grid.xmax - grid.xmin) * ix / (grid.nx - 1);
      points.at(idx, 1) = grid.ymin + (grid.ymax - grid.ymin) * iy / (grid.ny - 1);
    }
  }

  DiscOutput out = field(points);
  Tensor ref = sub(truth.score(points), reference_g.score(points));

  ScoreFieldReport report;
  report.field.nx = grid.nx;
  report.field.ny = grid.ny;
  report.field.xmin = grid.xmin;
  report.field.xmax = grid.xmax;
  report.field.ymin = grid.ymin;
  report.field.ymax = grid.ymax;
  report.field.x.resize(total);
  report.field.y.resize(total);
  report.field.gx.resize(total);
  report.field.gy.resize(total);
  double acc = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    report.field.x[i] = points.at(i, 0);
    report.field.y[i] = points.at(i, 1);
    report.field.gx[i] = out.grads.at(i, 0);
    report.field.gy[i] = out.grads.at(i, 1);
    double dx = out.grads.at(i, 0) - ref.at(i, 0);
    double dy = out.grads.at(i, 1) - ref.at(i, 1);
    acc += std::sqrt(dx * dx + dy * dy);
  }
  report.mean_l2_gap = acc / static_cast<double>(total);
  return report;
}

}  // namespace cfgflow
