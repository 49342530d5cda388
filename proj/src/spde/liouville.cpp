#include "mflab/spde/liouville.hpp"

#include <cmath>
#include <sstream>

namespace mflab::spde {

DensityField tensorize(const DensityField& rho, int N) {
  if (N < 1 || N * rho.dim() > 2) throw std::invalid_argument("tensorize: need N * d <= 2");
  if (N == 1) return rho;
  const GridSpec& g = rho.grid();
  GridSpec g2;
  g2.dim = 2;
  g2.lo = {g.lo[0], g.lo[0]};
  g2.h = g.h;
  g2.n = {g.n[0], g.n[0]};
  DensityField out(g2);
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[0]; ++j)
      out.values()[g2.index(i, j)] = rho[static_cast<std::size_t>(i)] * rho[static_cast<std::size_t>(j)];
  return out;
}

DensityField marginal(const DensityField& rho2, int which) {
  if (rho2.dim() != 2) throw std::invalid_argument("marginal: need a 2-D field");
  if (which != 1 && which != 2) throw std::invalid_argument("marginal: which must be 1 or 2");
  const GridSpec& g = rho2.grid();
  const int axis = which - 1;
  GridSpec g1;
  g1.dim = 1;
  g1.lo = {g.lo[axis], 0.0};
  g1.h = g.h;
  g1.n = {g.n[axis], 1};
  DensityField out(g1);
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j) out.values()[static_cast<std::size_t>(axis == 0 ? i : j)] += rho2.at(i, j) * g.h;
  return out;
}

double swap_asymmetry(const DensityField& rho2) {
  const GridSpec& g = rho2.grid();
  if (g.dim != 2 || g.n[0] != g.n[1] || std::abs(g.lo[0] - g.lo[1]) > 1e-12 * std::max(1.0, std::abs(g.lo[0])))
    throw std::invalid_argument("swap_asymmetry: need a square grid symmetric under swap");
  double worst = 0.0;
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = i + 1; j < g.n[1]; ++j) worst = std::max(worst, std::abs(rho2.at(i, j) - rho2.at(j, i)));
  return worst;
}

LiouvilleSolution2 solve_liouville_2(const model::KernelSpec& k, const model::CoefficientSet& coeffs,
                                     const DensityField& rho0_2d, const sde::CommonPath& W, const FpkOptions& opts) {
  coeffs.check();
  if (coeffs.d() != 1 || k.dim() != 1) throw std::invalid_argument("solve_liouville_2: needs d = 1");
  if (rho0_2d.dim() != 2) throw std::invalid_argument("solve_liouville_2: needs a 2-D initial field");
  if (!coeffs.nu.constant) throw std::invalid_argument("solve_liouville_2: nu must be constant in d = 1 (divergence free)");
  if (W.m_nu != coeffs.m_nu()) throw std::invalid_argument("solve_liouville_2: W dimension differs from nu");
  const sde::TimeGrid& tg = W.grid;
  if (opts.record_stride < 1 || tg.steps % opts.record_stride != 0)
    throw std::invalid_argument("solve_liouville_2: record_stride must divide the step count");

  // Each coordinate diffuses with sigma sigma^T evaluated at that coordinate.
  detail::Diffusivity diff;
  const model::MatrixField sigma = coeffs.sigma;
  diff.constant = sigma.constant;
  if (diff.constant) {
    const double z = 0.0;
    const double s = model::sigma_sigma_t(sigma, 0.0, &z)[0];
    diff.value = {s, s};
  } else {
    diff.at = [sigma](int axis, double t, const double* z) { return model::sigma_sigma_t(sigma, t, &z[axis])[0]; };
  }
  const detail::Stepper stepper(opts.boundary, opts.cfl, std::move(diff));

  // Velocities depend on x1 - x2 only, so they are frame independent.
  const GridSpec& g0 = rho0_2d.grid();
  const std::size_t size = g0.size();
  std::vector<double> v(2 * size, 0.0);
  if (!k.is_zero()) {
    const double k0 = k.eval1(0.0);
    for (int i = 0; i < g0.n[0]; ++i)
      for (int j = 0; j < g0.n[1]; ++j) {
        const double z = g0.center(0, i) - g0.center(1, j);
        v[g0.index(i, j)] = -0.5 * (k0 + k.eval1(z));
        v[size + g0.index(i, j)] = -0.5 * (k0 + k.eval1(-z));
      }
  }

  std::vector<double> nu_row;
  {
    const double z = 0.0;
    nu_row = coeffs.nu.at(0.0, &z);
  }

  LiouvilleSolution2 sol;
  sol.time = tg;
  sol.stride = opts.record_stride;
  sol.w_fingerprint = W.fingerprint();
  DensityField rho = rho0_2d;
  double outflow = 0.0;
  auto diag = [&](double t) {
    return StepDiagnostics{t, rho.mass(), rho.l2_norm(), rho.second_moment(), rho.min_value(), outflow};
  };
  sol.fields.push_back(rho);
  sol.diagnostics.push_back(diag(0.0));
  const bool square = g0.n[0] == g0.n[1] && g0.lo[0] == g0.lo[1];
  if (square) sol.max_asymmetry = swap_asymmetry(rho);

  const double dt = tg.dt();
  for (int j = 0; j < tg.steps; ++j) {
    if (!k.is_zero()) outflow += stepper.advect(rho, v, dt);
    outflow += stepper.diffuse(rho, tg.t(j), dt);
    double s = 0.0;
    for (int l = 0; l < coeffs.m_nu(); ++l) s += nu_row[static_cast<std::size_t>(l)] * W.increment(j, l);
    rho.grid() = rho.grid().translated({s, s});
    const double mn = rho.min_value();
    if (mn < -opts.negativity_tol) {
      std::ostringstream os;
      os << "negative density " << mn << " at step " << j + 1 << "; positivity of the scheme was violated";
      throw std::runtime_error(os.str());
    }
    sol.diagnostics.push_back(diag(tg.t(j + 1)));
    if ((j + 1) % opts.record_stride == 0) {
      sol.fields.push_back(rho);
      if (square) sol.max_asymmetry = std::max(sol.max_asymmetry, swap_asymmetry(rho));
    }
  }
  return sol;
}

} // namespace mflab::spde
