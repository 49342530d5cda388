#pragma once

#include "mflab/model/kernel.hpp"
#include "mflab/spde/density_field.hpp"

namespace mflab::entropy {

/// Right-hand side terms of the entropy inequality for N = 2, d = 1 on a grid.
struct DissipationReport {
  /// delta/4 sum_i int rhoN |d_i log(rhoN / rho (x) rho)|^2.
  double fisher_term = 0.0;
  /// 1/delta sum_i int rhoN |N^{-1} sum_j k(x_i - x_j) - (k*rho)(x_i)|^2.
  double fluctuation_term = 0.0;
};

/// Log-gradients by centred differences on cells where both densities
/// (and their neighbours) exceed `floor`.
DissipationReport dissipation_terms(const spde::DensityField& rhoN, const spde::DensityField& rho,
                                    const model::KernelSpec& k, double delta, double floor = 1e-12);

} // namespace mflab::entropy
