#pragma once

#include <cstddef>
#include <span>

#include "mflab/spde/density_field.hpp"

namespace mflab::sde {

enum class DensityMethod { histogram, kde };

struct EmpiricalOptions {
  DensityMethod method = DensityMethod::kde;
  /// Gaussian KDE bandwidth; 0 selects Silverman's rule.
  double bandwidth = 0.0;
  /// Kernel truncated at this many bandwidths.
  double truncation = 8.0;
};

struct EmpiricalDensity {
  spde::DensityField field;
  std::size_t total = 0;
  std::size_t outside = 0;
  double bandwidth = 0.0;
};

/// Silverman's rule 0.9 min(sd, IQR/1.34) n^{-1/5} (d = 1) or
/// sd n^{-1/6} per axis average (d = 2).
double silverman_bandwidth(std::span<const double> points, int d);

/// Density estimate of the point cloud on `grid`. Points outside the box are
/// dropped and counted; the field's mass is inside/total. KDE contributions
/// are integrated over cells and each point's kernel is renormalized on the box.
EmpiricalDensity empirical_density(std::span<const double> points, int d, const spde::GridSpec& grid,
                                   const EmpiricalOptions& opts = {});

} // namespace mflab::sde
