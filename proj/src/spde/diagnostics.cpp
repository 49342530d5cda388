#include "mflab/spde/diagnostics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace mflab::spde {

double l2_cap(const model::KernelSpec& k, const model::CoefficientSet& coeffs, double rho0_l2, double T, double grad_bound) {
  const int d = coeffs.d();
  const double c = d * d * grad_bound * grad_bound / (2.0 * coeffs.delta);
  const double kk = k.sup_norm();
  return std::sqrt(std::exp((2.0 * kk * kk + c) * T)) * rho0_l2;
}

double moment_cap(const model::KernelSpec& k, const model::CoefficientSet& coeffs, double rho0_m2, double T, double sup_W) {
  if (!coeffs.sigma.constant || !coeffs.nu.constant) return std::numeric_limits<double>::infinity();
  const double z[2] = {0.0, 0.0};
  const auto a = model::sigma_sigma_t(coeffs.sigma, 0.0, z);
  double tr = 0.0;
  for (int i = 0; i < coeffs.d(); ++i) tr += a[static_cast<std::size_t>(i * coeffs.d() + i)];
  // Operator norm of nu bounded by its Frobenius norm.
  const auto nu = coeffs.nu.at(0.0, z);
  double fro = 0.0;
  for (double x : nu) fro += x * x;
  const double r = std::sqrt(rho0_m2) + k.sup_norm() * T + std::sqrt(fro) * sup_W + std::sqrt(tr * T);
  return r * r;
}

DiagnosticsReport diagnostics_check(const SpdeSolution& sol, const DiagnosticBounds& bounds) {
  DiagnosticsReport rep;
  if (sol.diagnostics.empty()) throw std::invalid_argument("diagnostics_check: empty solution");
  const double m0 = sol.diagnostics.front().mass;
  rep.min_value = std::numeric_limits<double>::infinity();
  std::ostringstream msg;
  for (std::size_t j = 0; j < sol.diagnostics.size(); ++j) {
    const auto& s = sol.diagnostics[j];
    rep.sup_l2 = std::max(rep.sup_l2, s.l2);
    rep.sup_m2 = std::max(rep.sup_m2, s.m2);
    rep.min_value = std::min(rep.min_value, s.min);
    const double defect = std::abs(s.mass + s.outflow - m0);
    rep.mass_defect = std::max(rep.mass_defect, defect);
    bool bad = false;
    if (s.l2 > bounds.l2_cap) {
      if (rep.l2_ok) msg << "L2 norm " << s.l2 << " exceeds cap " << bounds.l2_cap << " at t=" << s.t << "; ";
      rep.l2_ok = false;
      bad = true;
    }
    if (s.m2 > bounds.moment_cap) {
      if (rep.moment_ok) msg << "second moment " << s.m2 << " exceeds cap " << bounds.moment_cap << " at t=" << s.t << "; ";
      rep.moment_ok = false;
      bad = true;
    }
    if (s.min < 0.0) {
      if (rep.positivity_ok) msg << "negative cell " << s.min << " at t=" << s.t << "; ";
      rep.positivity_ok = false;
      bad = true;
    }
    if (defect > bounds.mass_tol) {
      if (rep.conservation_ok) msg << "mass defect " << defect << " at t=" << s.t << "; ";
      rep.conservation_ok = false;
      bad = true;
    }
    if (bad && rep.first_violation_step < 0) rep.first_violation_step = static_cast<int>(j);
  }
  rep.pass = rep.l2_ok && rep.moment_ok && rep.positivity_ok && rep.conservation_ok;
  rep.message = msg.str();
  return rep;
}

void write_diagnostics_csv(const SpdeSolution& sol, std::ostream& os) {
  os << "t,mass,l2,m2,min,outflow\n" << std::setprecision(17);
  for (const auto& s : sol.diagnostics)
    os << s.t << ',' << s.mass << ',' << s.l2 << ',' << s.m2 << ',' << s.min << ',' << s.outflow << '\n';
}

} // namespace mflab::spde
