#include "mflab/spde/fpk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mflab::spde {
namespace detail {
namespace {

// Index helpers for a line along `axis` starting at flat index `base`.
struct Line {
  std::size_t base;
  std::size_t stride;
  int n;
};

std::vector<Line> lines_along(const GridSpec& g, int axis) {
  std::vector<Line> out;
  if (g.dim == 1) {
    out.push_back({0, 1, g.n[0]});
    return out;
  }
  if (axis == 0) {
    for (int j = 0; j < g.n[1]; ++j) out.push_back({static_cast<std::size_t>(j), static_cast<std::size_t>(g.n[1]), g.n[0]});
  } else {
    for (int i = 0; i < g.n[0]; ++i) out.push_back({g.index(i, 0), 1, g.n[1]});
  }
  return out;
}

// Thomas algorithm; sub/sup are length n (first/last unused).
void thomas(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

} // namespace

Stepper::Stepper(Boundary boundary, double cfl, Diffusivity diffusivity)
    : boundary_(boundary), cfl_(cfl), diff_(std::move(diffusivity)) {}

double Stepper::courant(const GridSpec& g, const std::vector<double>& velocity, double dt) {
  const std::size_t size = g.size();
  double total = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    double m = 0.0;
    for (std::size_t c = 0; c < size; ++c) m = std::max(m, std::abs(velocity[a * size + c]));
    total += m * dt / g.h;
  }
  return total;
}

double Stepper::advect(DensityField& rho, const std::vector<double>& velocity, double dt) const {
  const GridSpec& g = rho.grid();
  const std::size_t size = g.size();
  if (velocity.size() != static_cast<std::size_t>(g.dim) * size)
    throw std::invalid_argument("advect: velocity has the wrong size");
  const double c = courant(g, velocity, dt);
  if (c > cfl_ * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "advective Courant number " << c << " exceeds " << cfl_ << "; reduce dt (or coarsen the grid)";
    throw StabilityError(os.str());
  }
  const double lam = dt / g.h;
  const std::vector<double> old = rho.values();
  std::vector<double>& u = rho.values();
  double leaked = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    const double* v = &velocity[a * size];
    for (const Line& ln : lines_along(g, a)) {
      for (int i = 0; i + 1 < ln.n; ++i) {
        const std::size_t p = ln.base + ln.stride * i;
        const std::size_t q = p + ln.stride;
        const double vf = 0.5 * (v[p] + v[q]);
        const double flux = vf > 0.0 ? vf * old[p] : vf * old[q];
        u[p] -= lam * flux;
        u[q] += lam * flux;
      }
      if (boundary_ == Boundary::outflow) {
        const std::size_t first = ln.base;
        const std::size_t last = ln.base + ln.stride * (ln.n - 1);
        if (v[first] < 0.0) {
          const double out = -lam * v[first] * old[first];
          u[first] -= out;
          leaked += out;
        }
        if (v[last] > 0.0) {
          const double out = lam * v[last] * old[last];
          u[last] -= out;
          leaked += out;
        }
      }
    }
  }
  return leaked * g.cell_volume();
}

double Stepper::diffuse(DensityField& rho, double t, double dt) const {
  const GridSpec& g = rho.grid();
  const double r = dt / (2.0 * g.h * g.h);
  std::vector<double>& u = rho.values();
  double leaked = 0.0;
  std::vector<double> sub, diag, sup, rhs, faces;
  for (int a = 0; a < g.dim; ++a) {
    if (diff_.constant && diff_.value[a] == 0.0) continue;
    for (const Line& ln : lines_along(g, a)) {
      const int n = ln.n;
      // faces[i] is the face between cells i-1 and i; faces[0], faces[n] are the box walls.
      faces.assign(static_cast<std::size_t>(n + 1), diff_.value[a]);
      if (!diff_.constant) {
        double z[2] = {0.0, 0.0};
        const int other = 1 - a;
        for (int i = 0; i <= n; ++i) {
          z[a] = g.lo[a] + i * g.h;
          if (g.dim == 2) {
            const std::size_t cell = ln.base;
            const int idx = other == 0 ? static_cast<int>(cell / static_cast<std::size_t>(g.n[1]))
                                       : static_cast<int>(cell % static_cast<std::size_t>(g.n[1]));
            z[other] = g.center(other, idx);
          }
          faces[static_cast<std::size_t>(i)] = diff_.at(a, t, z);
        }
      }
      if (boundary_ == Boundary::zero_flux) {
        faces.front() = 0.0;
        faces.back() = 0.0;
      }
      sub.assign(static_cast<std::size_t>(n), 0.0);
      sup.assign(static_cast<std::size_t>(n), 0.0);
      diag.assign(static_cast<std::size_t>(n), 1.0);
      rhs.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const double al = faces[static_cast<std::size_t>(i)];
        const double ar = faces[static_cast<std::size_t>(i + 1)];
        diag[static_cast<std::size_t>(i)] = 1.0 + r * (al + ar);
        if (i > 0) sub[static_cast<std::size_t>(i)] = -r * al;
        if (i + 1 < n) sup[static_cast<std::size_t>(i)] = -r * ar;
        rhs[static_cast<std::size_t>(i)] = u[ln.base + ln.stride * i];
      }
      thomas(sub, diag, sup, rhs);
      for (int i = 0; i < n; ++i) u[ln.base + ln.stride * i] = rhs[static_cast<std::size_t>(i)];
      leaked += r * (faces.front() * rhs.front() + faces.back() * rhs.back());
    }
  }
  return leaked * g.cell_volume();
}

Diffusivity diffusivity_for(const model::CoefficientSet& coeffs, bool include_nu) {
  const int d = coeffs.d();
  auto matrix = [coeffs, include_nu, d](double t, const double* z) {
    auto a = model::sigma_sigma_t(coeffs.sigma, t, z);
    if (include_nu) {
      const auto b = model::sigma_sigma_t(coeffs.nu, t, z);
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
    if (d == 2 && std::abs(a[1]) > 1e-12)
      throw std::invalid_argument("diffusion tensor has off-diagonal entries; only diagonal diffusion is supported");
    return a;
  };
  Diffusivity out;
  out.constant = coeffs.sigma.constant && (!include_nu || coeffs.nu.constant);
  if (out.constant) {
    const double z[2] = {0.0, 0.0};
    const auto a = matrix(0.0, z);
    for (int i = 0; i < d; ++i) out.value[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i * d + i)];
  } else {
    out.at = [matrix, d](int axis, double t, const double* z) { return matrix(t, z)[static_cast<std::size_t>(axis * d + axis)]; };
  }
  return out;
}

} // namespace detail

const DensityField& SpdeSolution::at_step(int j) const {
  if (j < 0 || j > time.steps || j % stride != 0)
    throw std::out_of_range("SpdeSolution: step " + std::to_string(j) + " was not recorded");
  return fields[static_cast<std::size_t>(j / stride)];
}

double padded_halfwidth(double rho0_radius, double diffusion_max, double T, double drift_bound) {
  return rho0_radius + 6.0 * std::sqrt(diffusion_max * T) + drift_bound * T;
}

namespace {

StepDiagnostics diagnose(const DensityField& rho, double t, double outflow) {
  return {t, rho.mass(), rho.l2_norm(), rho.second_moment(), rho.min_value(), outflow};
}

} // namespace

SpdeSolution solve_linear_fpk(const VelocityFn& velocity, const model::CoefficientSet& coeffs, const DensityField& rho0,
                              const sde::CommonPath& W, const FpkOptions& opts) {
  coeffs.check();
  const int d = coeffs.d();
  if (rho0.dim() != d) throw std::invalid_argument("solve_linear_fpk: rho0 dimension differs from coefficients");
  if (W.m_nu != coeffs.m_nu()) throw std::invalid_argument("solve_linear_fpk: W dimension differs from nu");
  const sde::TimeGrid& tg = W.grid;
  if (opts.record_stride < 1 || tg.steps % opts.record_stride != 0)
    throw std::invalid_argument("solve_linear_fpk: record_stride must divide the step count");

  const bool moving = coeffs.nu.constant;
  const detail::Stepper stepper(opts.boundary, opts.cfl, detail::diffusivity_for(coeffs, !moving));
  const double dt = tg.dt();
  std::vector<double> nu_const;
  if (moving) {
    const double z[2] = {0.0, 0.0};
    nu_const = coeffs.nu.at(0.0, z);
  }

  SpdeSolution sol;
  sol.time = tg;
  sol.stride = opts.record_stride;
  sol.w_fingerprint = W.fingerprint();
  DensityField rho = rho0;
  double outflow = 0.0;
  sol.fields.push_back(rho);
  sol.diagnostics.push_back(diagnose(rho, 0.0, 0.0));

  std::vector<double> v;
  const int m_nu = coeffs.m_nu();
  for (int j = 0; j < tg.steps; ++j) {
    const double t = tg.t(j);
    if (velocity) {
      v.clear();
      velocity(j, rho, v);
      if (!v.empty()) outflow += stepper.advect(rho, v, dt);
    }
    outflow += stepper.diffuse(rho, t, dt);

    if (moving) {
      std::array<double, 2> shift{0.0, 0.0};
      for (int a = 0; a < d; ++a)
        for (int l = 0; l < m_nu; ++l) shift[static_cast<std::size_t>(a)] += nu_const[static_cast<std::size_t>(a * m_nu + l)] * W.increment(j, l);
      rho.grid() = rho.grid().translated(shift);
    } else {
      const GridSpec& g = rho.grid();
      const std::size_t size = g.size();
      std::vector<double> vt(static_cast<std::size_t>(d) * size, 0.0);
      double z[2] = {0.0, 0.0};
      for (std::size_t c = 0; c < size; ++c) {
        const int i = d == 1 ? static_cast<int>(c) : static_cast<int>(c / static_cast<std::size_t>(g.n[1]));
        z[0] = g.center(0, i);
        if (d == 2) z[1] = g.center(1, static_cast<int>(c % static_cast<std::size_t>(g.n[1])));
        const auto nu = coeffs.nu.at(t, z);
        for (int a = 0; a < d; ++a) {
          double s = 0.0;
          for (int l = 0; l < m_nu; ++l) s += nu[static_cast<std::size_t>(a * m_nu + l)] * W.increment(j, l);
          vt[a * size + c] = s / dt;
        }
      }
      const double courant = detail::Stepper::courant(g, vt, dt);
      const int sub = std::max(1, static_cast<int>(std::ceil(courant / opts.cfl)));
      for (int s = 0; s < sub; ++s) outflow += stepper.advect(rho, vt, dt / sub);
    }

    const double mn = rho.min_value();
    if (mn < -opts.negativity_tol) {
      std::ostringstream os;
      os << "negative density " << mn << " at step " << j + 1 << "; positivity of the scheme was violated";
      throw std::runtime_error(os.str());
    }
    sol.diagnostics.push_back(diagnose(rho, tg.t(j + 1), outflow));
    if ((j + 1) % opts.record_stride == 0) sol.fields.push_back(rho);
  }
  return sol;
}

} // namespace mflab::spde
