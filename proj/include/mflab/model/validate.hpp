#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mflab/model/coefficients.hpp"
#include "mflab/model/initial_density.hpp"

namespace mflab::model {

/// Probe points in [-extent, extent]^d: a uniform lattice plus random points,
/// each evaluated at t in {0, T/2, T}.
struct ProbePlan {
  int random_points = 1000;
  int lattice_per_axis = 11;
  double extent = 4.0;
  /// Finite-difference step is 1e-4 times this.
  double length_scale = 1.0;
  double horizon = 1.0;
  std::uint64_t seed = 0x5eed;

  std::vector<double> points(int d) const;
  std::array<double, 3> times() const { return {0.0, 0.5 * horizon, horizon}; }
  double fd_step() const { return 1e-4 * length_scale; }
};

struct CheckResult {
  std::string name;
  bool pass = true;
  /// Largest violation found (0 when the condition holds exactly).
  double worst = 0.0;
  /// Observed quantity at the worst probe (e.g. the C^1 norm or min eigenvalue).
  double observed = 0.0;
  std::array<double, 2> where{0.0, 0.0};
  double time = 0.0;
};

struct ValidationReport {
  /// sigma_c1, nu_c1, nu_divergence_free, cancellation, ellipticity.
  std::vector<CheckResult> structural;
  /// rho0_mass, rho0_second_moment.
  std::vector<CheckResult> density;

  bool pass() const;
  const CheckResult& find(const std::string& name) const;
};

/// Throws std::runtime_error naming the probe when a coefficient is not finite.
ValidationReport validate(const CoefficientSet& coeffs, const InitialDensity& rho0, const ProbePlan& plan, double tol);

} // namespace mflab::model
