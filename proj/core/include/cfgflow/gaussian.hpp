#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cfgflow/rng.hpp"
#include "cfgflow/tensor.hpp"

namespace cfgflow {

/// One weighted Gaussian. Construction validates symmetry (1e-12) and
/// positive-definiteness (Cholesky must succeed) and caches the factors
/// every density/score/sample evaluation needs.
class GaussianComponent {
 public:
  GaussianComponent(Eigen::VectorXd mean, Eigen::MatrixXd cov, double weight = 1.0);

  static GaussianComponent isotropic(Eigen::VectorXd mean, double sigma, double weight = 1.0);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  double weight() const { return weight_; }
  int dim() const { return static_cast<int>(mean_.size()); }

  const Eigen::MatrixXd& chol_lower() const { return chol_lower_; }
  const Eigen::MatrixXd& cov_inverse() const { return cov_inv_; }
  double log_det_cov() const { return log_det_; }

  double log_pdf(const Eigen::VectorXd& x) const;
  Eigen::VectorXd score(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  double weight_;
  Eigen::MatrixXd chol_lower_;
  Eigen::MatrixXd cov_inv_;
  double log_det_ = 0.0;
  double log_norm_ = 0.0;  // -(d/2)log(2*pi) - log_det/2
};

/// Weighted Gaussian mixture with exact density, score, sampling, and
/// moment matching. Point batches are (n,d) tensors.
class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<GaussianComponent> components);
  static GaussianMixture single(GaussianComponent c);

  int dim() const { return components_.front().dim(); }
  const std::vector<GaussianComponent>& components() const { return components_; }

  /// Exact log density via log-sum-exp over components.
  Tensor log_pdf(const Tensor& points) const;
  double log_pdf_point(const Eigen::VectorXd& x) const;

  /// Gradient of log density: responsibilities-weighted component scores.
  Tensor score(const Tensor& points) const;
  Eigen::VectorXd score_point(const Eigen::VectorXd& x) const;

  /// (n,d) samples. Each sample consumes one uniform (component choice)
  /// then d normals, so the stream layout is reproducible.
  Tensor sample(std::size_t n, Rng& rng) const;

  /// Index of the chosen component per sample, same stream layout as
  /// sample(); used by occupancy tests.
  std::vector<std::size_t> sample_components(std::size_t n, Rng& rng, Tensor* points) const;

  /// Exact mixture mean and covariance as a single Gaussian.
  GaussianComponent moment_match() const;

  /// Mixture convolved with N(0, sigma^2 I): covariances inflated.
  GaussianMixture inflate(double sigma) const;

 private:
  std::vector<GaussianComponent> components_;
};

/// Closed-form KL(p || q) between Gaussians of the same dimension.
double kl_gaussians(const GaussianComponent& p, const GaussianComponent& q);

// Tensor row <-> Eigen adapters used throughout the analytic modules.
Eigen::VectorXd tensor_row(const Tensor& t, std::size_t row);
void set_tensor_row(Tensor& t, std::size_t row, const Eigen::VectorXd& v);

}  // namespace cfgflow
