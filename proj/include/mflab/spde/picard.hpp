#pragma once

#include <stdexcept>
#include <vector>

#include "mflab/model/kernel.hpp"
#include "mflab/spde/fpk.hpp"

namespace mflab::spde {

struct PicardOptions {
  /// Stop when sup_t ||rho^n_t - rho^{n-1}_t||_{L2} < tol; a negative value
  /// selects 1e-8 * ||rho_0||_{L2}.
  double tol = -1.0;
  int max_iter = 50;
  FpkOptions fpk;
};

struct PicardResult {
  SpdeSolution solution;
  /// increments[n-1] = sup_t ||rho^n_t - rho^{n-1}_t||_{L2}, rho^0 = rho_0 frozen in time.
  std::vector<double> increments;
  /// Index of the last iterate that moved by at least tol (k = 0 gives 1).
  int iterations = 0;
  double tol = 0.0;
};

class PicardDivergence : public std::runtime_error {
public:
  PicardDivergence(const std::string& what, std::vector<double> increments)
      : std::runtime_error(what), increments_(std::move(increments)) {}
  const std::vector<double>& increments() const { return increments_; }

private:
  std::vector<double> increments_;
};

/// Nonlinear SPDE by Picard iteration: rho^n solves the linear equation with
/// velocity -(k * rho^{n-1}_t). Every field is recorded.
PicardResult picard_solve(const model::KernelSpec& k, const model::CoefficientSet& coeffs, const DensityField& rho0,
                          const sde::CommonPath& W, const PicardOptions& opts = {});

} // namespace mflab::spde
