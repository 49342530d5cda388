#pragma once

#include <iosfwd>
#include <string>

#include "mflab/model/coefficients.hpp"
#include "mflab/model/kernel.hpp"
#include "mflab/spde/fpk.hpp"

namespace mflab::spde {

struct DiagnosticBounds {
  double l2_cap = 0.0;
  double moment_cap = 0.0;
  /// Allowed |mass + outflow - mass_0| per step.
  double mass_tol = 1e-10;
};

struct DiagnosticsReport {
  bool pass = true;
  bool l2_ok = true;
  bool moment_ok = true;
  bool positivity_ok = true;
  bool conservation_ok = true;
  double sup_l2 = 0.0;
  double sup_m2 = 0.0;
  double min_value = 0.0;
  /// max_t |mass_t + outflow_t - mass_0|.
  double mass_defect = 0.0;
  /// First step at which any check failed, -1 if none.
  int first_violation_step = -1;
  std::string message;
};

/// exp((2 ||k||_inf^2 + c) T)^{1/2} ||rho_0||_{L2}, with
/// c = d^2 G^2 / (2 delta) and G = sup |grad(sigma sigma^T + nu nu^T)|
/// (G = 0 for constant coefficients).
double l2_cap(const model::KernelSpec& k, const model::CoefficientSet& coeffs, double rho0_l2, double T,
              double grad_bound = 0.0);

/// Pathwise second-moment cap for constant coefficients:
/// (sqrt(m2_0) + ||k|| T + |nu| sup|W| + sqrt(tr(sigma sigma^T) T))^2.
double moment_cap(const model::KernelSpec& k, const model::CoefficientSet& coeffs, double rho0_m2, double T,
                  double sup_W);

DiagnosticsReport diagnostics_check(const SpdeSolution& sol, const DiagnosticBounds& bounds);

/// CSV with header t,mass,l2,m2,min,outflow.
void write_diagnostics_csv(const SpdeSolution& sol, std::ostream& os);

} // namespace mflab::spde
