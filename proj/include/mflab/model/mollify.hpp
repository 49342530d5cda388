#pragma once

#include <vector>

#include "mflab/model/coefficients.hpp"
#include "mflab/model/kernel.hpp"

namespace mflab::model {

/// Standard bump J^1(u) = exp(-1/(1-|u|^2)) / Z_d on |u| < 1, unit mass.
double mollifier(const double* u, int d);
/// Normalization Z_d of the bump in dimension d (d = 1, 2).
double mollifier_mass(int d);

/// Positive-weight quadrature for integrals against J^1 over the unit ball.
/// Weights include J^1 and are normalized to sum to one, so a rule
/// applied to a bounded function is a convex combination of its values.
struct MollifierRule {
  int d = 1;
  std::vector<double> nodes;   // d coordinates per node
  std::vector<double> weights; // one per node, sum = 1

  /// d = 1 rule with extra panel boundaries at `splits` (in u-space).
  static MollifierRule line(const std::vector<double>& splits = {}, int panels = 16);
  /// d = 2 polar rule.
  static MollifierRule disk(int radial_panels = 4, int angles = 64);
};

struct MollifyOptions {
  /// Table nodes per axis for the mollified kernel.
  int nodes_per_axis = 4097;
  /// Extent used when the kernel has unbounded support.
  double extent_if_unbounded = 10.0;
};

/// k * J^eps, returned as a tabulated kernel. The declared sup norm is the
/// exact max of the table; the L2 bound is min(quadrature, input bound).
KernelSpec mollify_kernel(const KernelSpec& k, double epsilon, const MollifyOptions& opts = {});

/// sigma sigma^T and nu mollified entrywise; the returned sigma is the
/// Cholesky factor of the mollified sigma sigma^T, so m becomes d.
CoefficientSet mollify_coefficients(const CoefficientSet& coeffs, double epsilon);

} // namespace mflab::model
