#include "cfgflow/dataset.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cfgflow/errors.hpp"

namespace cfgflow {

std::string DatasetSpec::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case DatasetKind::ring:
      os << "ring(" << modes << ", " << radius << ", " << sigma << ")";
      break;
    case DatasetKind::grid:
      os << "grid(" << modes << ", " << spacing << ", " << sigma << ")";
      break;
    case DatasetKind::two_gaussian:
      os << "two_gaussian(" << radius << ", " << sigma << ")";
      break;
    case DatasetKind::gaussian_point:
      os << "gaussian(" << cx << ", " << cy << ", " << sigma << ")";
      break;
    case DatasetKind::custom_mixture:
      os << "custom_mixture(" << custom.size() << " components)";
      break;
  }
  return os.str();
}

GaussianMixture make_mixture(const DatasetSpec& spec) {
  if (spec.kind != DatasetKind::custom_mixture) {
    if (spec.modes < 1) throw DistributionError("dataset needs at least one mode");
    if (spec.sigma <= 0.0) throw DistributionError("dataset sigma must be positive");
  }
  std::vector<GaussianComponent> comps;
  switch (spec.kind) {
    case DatasetKind::ring: {
      double w = 1.0 / spec.modes;
      for (int k = 0; k < spec.modes; ++k) {
        double theta = 2.0 * std::numbers::pi * k / spec.modes;
        Eigen::VectorXd mu(2);
        mu << spec.radius * std::cos(theta), spec.radius * std::sin(theta);
        comps.push_back(GaussianComponent::isotropic(mu, spec.sigma, w));
      }
      break;
    }
    case DatasetKind::grid: {
      int n = spec.modes;
      double w = 1.0 / (n * n);
      double half = 0.5 * spec.spacing * (n - 1);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          Eigen::VectorXd mu(2);
          mu << -half + spec.spacing * i, -half + spec.spacing * j;
          comps.push_back(GaussianComponent::isotropic(mu, spec.sigma, w));
        }
      }
      break;
    }
    case DatasetKind::two_gaussian: {
      Eigen::VectorXd mu(2);
      mu << spec.radius, 0.0;
      comps.push_back(GaussianComponent::isotropic(mu, spec.sigma, 0.5));
      comps.push_back(GaussianComponent::isotropic(-mu, spec.sigma, 0.5));
      break;
    }
    case DatasetKind::gaussian_point: {
      Eigen::VectorXd mu(2);
      mu << spec.cx, spec.cy;
      comps.push_back(GaussianComponent::isotropic(mu, spec.sigma, 1.0));
      break;
    }
    case DatasetKind::custom_mixture: {
      if (spec.custom.empty()) throw DistributionError("custom_mixture has no components");
      comps = spec.custom;
      break;
    }
  }
  return GaussianMixture(std::move(comps));
}

Dataset make_dataset(const DatasetSpec& spec, Rng& rng) {
  GaussianMixture truth = make_mixture(spec);
  Tensor samples = truth.sample(spec.samples, rng);
  return Dataset{std::move(samples), std::move(truth)};
}

}  // namespace cfgflow
