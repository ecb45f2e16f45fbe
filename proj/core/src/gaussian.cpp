#include "cfgflow/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cfgflow/errors.hpp"

namespace cfgflow {

Eigen::VectorXd tensor_row(const Tensor& t, std::size_t row) {
  std::size_t d = t.cols();
  Eigen::VectorXd v(d);
  for (std::size_t j = 0; j < d; ++j) v[static_cast<int>(j)] = t.at(row, j);
  return v;
}

void set_tensor_row(Tensor& t, std::size_t row, const Eigen::VectorXd& v) {
  for (std::size_t j = 0; j < t.cols(); ++j) t.at(row, j) = v[static_cast<int>(j)];
}

GaussianComponent::GaussianComponent(Eigen::VectorXd mean, Eigen::MatrixXd cov, double weight)
    : mean_(std::move(mean)), cov_(std::move(cov)), weight_(weight) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size()) {
    throw DistributionError("covariance/mean dimension mismatch");
  }
  if (weight_ <= 0.0 || weight_ > 1.0) {
    throw DistributionError("component weight must be in (0, 1]");
  }
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DistributionError("covariance is not symmetric within 1e-12");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw DistributionError("covariance is not positive definite (Cholesky failed)");
  }
  chol_lower_ = llt.matrixL();
  cov_inv_ = llt.solve(Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols()));
  log_det_ = 2.0 * chol_lower_.diagonal().array().log().sum();
  log_norm_ = -0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) -
              0.5 * log_det_;
}

GaussianComponent GaussianComponent::isotropic(Eigen::VectorXd mean, double sigma,
                                               double weight) {
  if (sigma <= 0.0) throw DistributionError("isotropic sigma must be positive");
  int d = static_cast<int>(mean.size());
  return GaussianComponent(std::move(mean),
                           Eigen::MatrixXd::Identity(d, d) * (sigma * sigma), weight);
}

double GaussianComponent::log_pdf(const Eigen::VectorXd& x) const {
  Eigen::VectorXd diff = x - mean_;
  double quad = diff.dot(cov_inv_ * diff);
  return log_norm_ - 0.5 * quad;
}

Eigen::VectorXd GaussianComponent::score(const Eigen::VectorXd& x) const {
  return cov_inv_ * (mean_ - x);
}

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw DistributionError("mixture needs at least one component");
  int d = components_.front().dim();
  double wsum = 0.0;
  for (const auto& c : components_) {
    if (c.dim() != d) throw DistributionError("mixture components disagree on dimension");
    wsum += c.weight();
  }
  if (std::abs(wsum - 1.0) > 1e-12) {
    throw DistributionError("mixture weights sum to " + std::to_string(wsum) + ", expected 1");
  }
}

GaussianMixture GaussianMixture::single(GaussianComponent c) {
  std::vector<GaussianComponent> v;
  v.push_back(GaussianComponent(c.mean(), c.cov(), 1.0));
  return GaussianMixture(std::move(v));
}

double GaussianMixture::log_pdf_point(const Eigen::VectorXd& x) const {
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    terms[k] = std::log(components_[k].weight()) + components_[k].log_pdf(x);
    max_term = std::max(max_term, terms[k]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

Tensor GaussianMixture::log_pdf(const Tensor& points) const {
  if (points.cols() != static_cast<std::size_t>(dim())) {
    throw DistributionError("log_pdf: point dimension mismatch");
  }
  Tensor out({points.rows()});
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out[i] = log_pdf_point(tensor_row(points, i));
  }
  return out;
}

Eigen::VectorXd GaussianMixture::score_point(const Eigen::VectorXd& x) const {
  // Responsibilities via log-sum-exp, then the weighted component scores.
  std::vector<double> logterms(components_.size());
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < components_.size(); ++k) {
    logterms[k] = std::log(components_[k].weight()) + components_[k].log_pdf(x);
    max_term = std::max(max_term, logterms[k]);
  }
  double z = 0.0;
  for (double t : logterms) z += std::exp(t - max_term);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(dim());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    double resp = std::exp(logterms[k] - max_term) / z;
    s += resp * components_[k].score(x);
  }
  return s;
}

Tensor GaussianMixture::score(const Tensor& points) const {
  if (points.cols() != static_cast<std::size_t>(dim())) {
    throw DistributionError("score: point dimension mismatch");
  }
  Tensor out({points.rows(), points.cols()});
  for (std::size_t i = 0; i < points.rows(); ++i) {
    set_tensor_row(out, i, score_point(tensor_row(points, i)));
  }
  return out;
}

std::vector<std::size_t> GaussianMixture::sample_components(std::size_t n, Rng& rng,
                                                            Tensor* points) const {
  std::vector<std::size_t> chosen(n);
  if (points) *points = Tensor({n, static_cast<std::size_t>(dim())});
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    double acc = 0.0;
    std::size_t k = components_.size() - 1;
    for (std::size_t j = 0; j < components_.size(); ++j) {
      acc += components_[j].weight();
      if (u < acc) {
        k = j;
        break;
      }
    }
    chosen[i] = k;
    Eigen::VectorXd z(dim());
    for (int j = 0; j < dim(); ++j) z[j] = rng.normal();
    if (points) {
      Eigen::VectorXd x = components_[k].mean() + components_[k].chol_lower() * z;
      set_tensor_row(*points, i, x);
    }
  }
  return chosen;
}

Tensor GaussianMixture::sample(std::size_t n, Rng& rng) const {
  Tensor points;
  sample_components(n, rng, &points);
  return points;
}

GaussianComponent GaussianMixture::moment_match() const {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim());
  for (const auto& c : components_) mu += c.weight() * c.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim(), dim());
  for (const auto& c : components_) {
    Eigen::VectorXd d = c.mean() - mu;
    cov += c.weight() * (c.cov() + d * d.transpose());
  }
  cov = 0.5 * (cov + cov.transpose());
  return GaussianComponent(mu, cov, 1.0);
}

GaussianMixture GaussianMixture::inflate(double sigma) const {
  if (sigma < 0.0) throw DistributionError("inflate: sigma must be non-negative");
  if (sigma == 0.0) return *this;
  std::vector<GaussianComponent> comps;
  comps.reserve(components_.size());
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim(), dim());
  for (const auto& c : components_) {
    comps.emplace_back(c.mean(), c.cov() + sigma * sigma * eye, c.weight());
  }
  return GaussianMixture(std::move(comps));
}

double kl_gaussians(const GaussianComponent& p, const GaussianComponent& q) {
  if (p.dim() != q.dim()) throw DistributionError("kl_gaussians: dimension mismatch");
  double d = static_cast<double>(p.dim());
  Eigen::VectorXd diff = q.mean() - p.mean();
  double trace_term = (q.cov_inverse() * p.cov()).trace();
  double quad = diff.dot(q.cov_inverse() * diff);
  return 0.5 * (trace_term + quad - d + q.log_det_cov() - p.log_det_cov());
}

}  // namespace cfgflow
