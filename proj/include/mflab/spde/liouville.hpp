#pragma once

#include "mflab/model/kernel.hpp"
#include "mflab/spde/fpk.hpp"

namespace mflab::spde {

/// rho^{(x)N} on the product grid; N * d <= 2.
DensityField tensorize(const DensityField& rho, int N);
/// One-dimensional marginal (which = 1 or 2) of a 2-D field.
DensityField marginal(const DensityField& rho2, int which);

/// Conditional Liouville equation for N = 2 particles in d = 1.
struct LiouvilleSolution2 : SpdeSolution {
  /// max over recorded steps of max |rho(x1,x2) - rho(x2,x1)|.
  double max_asymmetry = 0.0;
};

/// Drift b_i = -(k(0) + k(x_i - x_j)) / 2; sigma acts per coordinate and a
/// constant nu shifts both coordinates by the same nu dW.
LiouvilleSolution2 solve_liouville_2(const model::KernelSpec& k, const model::CoefficientSet& coeffs,
                                     const DensityField& rho0_2d, const sde::CommonPath& W,
                                     const FpkOptions& opts = {});

/// max |rho(x1,x2) - rho(x2,x1)| on a square grid.
double swap_asymmetry(const DensityField& rho2);

} // namespace mflab::spde
