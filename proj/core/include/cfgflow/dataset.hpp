#pragma once

#include <string>

#include "cfgflow/gaussian.hpp"
#include "cfgflow/rng.hpp"

namespace cfgflow {

enum class DatasetKind { ring, grid, two_gaussian, gaussian_point, custom_mixture };

/// Declarative description of a 2-D toy target. ring: `modes` equally
/// spaced on a circle of `radius` (mode 0 at (radius, 0)). grid:
/// modes x modes lattice with `spacing`, centered at the origin.
/// two_gaussian: modes at (+radius, 0) and (-radius, 0). gaussian_point:
/// a single isotropic Gaussian at (cx, cy).
struct DatasetSpec {
  DatasetKind kind = DatasetKind::ring;
  int modes = 8;
  double radius = 2.0;
  double spacing = 1.0;
  double sigma = 0.05;
  double cx = 0.0;
  double cy = 0.0;
  std::size_t samples = 10000;
  std::vector<GaussianComponent> custom;  // used by custom_mixture

  std::string to_string() const;
};

struct Dataset {
  Tensor samples;         // (n, 2) draws from `truth`
  GaussianMixture truth;  // the exact generating law
};

/// Builds the mixture for a spec without sampling.
GaussianMixture make_mixture(const DatasetSpec& spec);

Dataset make_dataset(const DatasetSpec& spec, Rng& rng);

}  // namespace cfgflow
