#include "mflab/model/validate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace mflab::model {
namespace {

std::string describe(const double* z, int d, double t) {
  std::ostringstream os;
  os << "probe z=(" << z[0];
  if (d == 2) os << ", " << z[1];
  os << "), t=" << t;
  return os.str();
}

std::vector<double> eval_checked(const MatrixField& f, double t, const double* z, int d) {
  auto v = f.at(t, z);
  for (double x : v)
    if (!std::isfinite(x)) throw std::runtime_error(f.name + " is not finite at " + describe(z, d, t));
  return v;
}

void record(CheckResult& r, double violation, double observed, const double* z, int d, double t) {
  if (violation > r.worst || (r.worst == 0.0 && observed > r.observed && violation == 0.0)) {
    r.worst = std::max(r.worst, violation);
    r.observed = observed;
    r.where = {z[0], d == 2 ? z[1] : 0.0};
    r.time = t;
  }
}

// Partial derivative of every entry of f along axis `axis` by central differences.
std::vector<double> partial(const MatrixField& f, double t, const double* z, int d, int axis, double h) {
  double zp[2] = {z[0], d == 2 ? z[1] : 0.0};
  double zm[2] = {zp[0], zp[1]};
  zp[axis] += h;
  zm[axis] -= h;
  auto a = eval_checked(f, t, zp, d);
  const auto b = eval_checked(f, t, zm, d);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (a[i] - b[i]) / (2.0 * h);
  return a;
}

// Sum over beta of d/dz_beta (f f^T)_{alpha beta}, maximized over alpha.
double cancellation_residual(const MatrixField& f, double t, const double* z, int d, double h) {
  double worst = 0.0;
  for (int alpha = 0; alpha < d; ++alpha) {
    double s = 0.0;
    for (int beta = 0; beta < d; ++beta) {
      double zp[2] = {z[0], d == 2 ? z[1] : 0.0};
      double zm[2] = {zp[0], zp[1]};
      zp[beta] += h;
      zm[beta] -= h;
      const auto ap = sigma_sigma_t(f, t, zp);
      const auto am = sigma_sigma_t(f, t, zm);
      s += (ap[static_cast<std::size_t>(alpha * d + beta)] - am[static_cast<std::size_t>(alpha * d + beta)]) / (2.0 * h);
    }
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

double min_eigenvalue(const std::vector<double>& a, int d) {
  if (d == 1) return a[0];
  const double tr = a[0] + a[3];
  const double det = a[0] * a[3] - a[1] * a[2];
  return 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
}

// Quadrature of rho0 and |z|^2 rho0 with a composite Gauss rule on a box.
std::array<double, 2> density_moments(const InitialDensity& rho) {
  if (rho.kind() == InitialDensity::Kind::grid) return {rho.mass(), rho.second_moment()};
  using G = boost::math::quadrature::gauss<double, 10>;
  const double R = rho.effective_radius() + 1.0;
  const int d = rho.dim();
  const int panels = d == 1 ? 2048 : 256;
  const double w = 2.0 * R / panels;
  const auto& xs = G::abscissa();
  const auto& ws = G::weights();
  std::vector<double> nodes, weights;
  for (int p = 0; p < panels; ++p) {
    const double mid = -R + (p + 0.5) * w;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      nodes.push_back(mid + 0.5 * w * xs[i]);
      weights.push_back(0.5 * w * ws[i]);
      if (xs[i] != 0.0) {
        nodes.push_back(mid - 0.5 * w * xs[i]);
        weights.push_back(0.5 * w * ws[i]);
      }
    }
  }
  double mass = 0.0, m2 = 0.0;
  double z[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    z[0] = nodes[i];
    if (d == 1) {
      const double p = rho.pdf(z) * weights[i];
      mass += p;
      m2 += p * z[0] * z[0];
      continue;
    }
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      z[1] = nodes[j];
      const double p = rho.pdf(z) * weights[i] * weights[j];
      mass += p;
      m2 += p * (z[0] * z[0] + z[1] * z[1]);
    }
  }
  return {mass, m2};
}

} // namespace

std::vector<double> ProbePlan::points(int d) const {
  std::vector<double> pts;
  const int n = std::max(lattice_per_axis, 1);
  for (int i = 0; i < n; ++i) {
    const double x = n == 1 ? 0.0 : -extent + 2.0 * extent * i / (n - 1);
    if (d == 1) {
      pts.push_back(x);
      continue;
    }
    for (int j = 0; j < n; ++j) {
      pts.push_back(x);
      pts.push_back(n == 1 ? 0.0 : -extent + 2.0 * extent * j / (n - 1));
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  for (int p = 0; p < random_points; ++p)
    for (int a = 0; a < d; ++a) pts.push_back(u(rng));
  if (pts.empty()) throw std::invalid_argument("ProbePlan: no probes");
  return pts;
}

bool ValidationReport::pass() const {
  for (const auto& c : structural)
    if (!c.pass) return false;
  for (const auto& c : density)
    if (!c.pass) return false;
  return true;
}

const CheckResult& ValidationReport::find(const std::string& name) const {
  for (const auto& c : structural)
    if (c.name == name) return c;
  for (const auto& c : density)
    if (c.name == name) return c;
  throw std::out_of_range("no validation check named " + name);
}

ValidationReport validate(const CoefficientSet& coeffs, const InitialDensity& rho0, const ProbePlan& plan, double tol) {
  coeffs.check();
  if (!(plan.length_scale > 0.0)) throw std::invalid_argument("validate: finite-difference step must be positive");
  const int d = coeffs.d();
  if (rho0.dim() != d) throw std::invalid_argument("validate: rho0 dimension differs from coefficients");
  const auto pts = plan.points(d);
  const double h = plan.fd_step();

  CheckResult sigma_c1{"sigma_c1"}, nu_c1{"nu_c1"}, divfree{"nu_divergence_free"}, cancel{"cancellation"},
      ellip{"ellipticity"};
  ellip.observed = std::numeric_limits<double>::infinity();
  // Running sup |A| and sup |grad A| across all probes.
  double sup_sigma = 0.0, sup_dsigma = 0.0, sup_nu = 0.0, sup_dnu = 0.0;

  for (double t : plan.times()) {
    for (std::size_t p = 0; p < pts.size(); p += static_cast<std::size_t>(d)) {
      const double* z = &pts[p];
      const auto s = eval_checked(coeffs.sigma, t, z, d);
      const auto n = eval_checked(coeffs.nu, t, z, d);
      for (double v : s) sup_sigma = std::max(sup_sigma, std::abs(v));
      for (double v : n) sup_nu = std::max(sup_nu, std::abs(v));

      double div_worst = 0.0;
      std::vector<double> div(static_cast<std::size_t>(coeffs.m_nu()), 0.0);
      for (int axis = 0; axis < d; ++axis) {
        const auto ds = partial(coeffs.sigma, t, z, d, axis, h);
        const auto dn = partial(coeffs.nu, t, z, d, axis, h);
        for (double v : ds) sup_dsigma = std::max(sup_dsigma, std::abs(v));
        for (double v : dn) sup_dnu = std::max(sup_dnu, std::abs(v));
        for (int l = 0; l < coeffs.m_nu(); ++l) div[static_cast<std::size_t>(l)] += dn[static_cast<std::size_t>(axis * coeffs.m_nu() + l)];
      }
      for (double v : div) div_worst = std::max(div_worst, std::abs(v));
      record(divfree, div_worst, div_worst, z, d, t);

      const double canc = std::max(cancellation_residual(coeffs.sigma, t, z, d, h), cancellation_residual(coeffs.nu, t, z, d, h));
      record(cancel, canc, canc, z, d, t);

      const double lmin = min_eigenvalue(sigma_sigma_t(coeffs.sigma, t, z), d);
      if (lmin < ellip.observed) {
        ellip.observed = lmin;
        ellip.worst = std::max(0.0, coeffs.delta - lmin);
        ellip.where = {z[0], d == 2 ? z[1] : 0.0};
        ellip.time = t;
      }
    }
  }
  auto c1_check = [&](CheckResult& r, double observed) {
    r.observed = observed;
    r.worst = std::isfinite(coeffs.c1_bound) ? std::max(0.0, observed - coeffs.c1_bound)
                                             : std::numeric_limits<double>::infinity();
  };
  c1_check(sigma_c1, sup_sigma + sup_dsigma);
  c1_check(nu_c1, sup_nu + sup_dnu);

  ValidationReport rep;
  for (CheckResult* c : {&sigma_c1, &nu_c1, &divfree, &cancel, &ellip}) {
    c->pass = c->worst <= tol;
    rep.structural.push_back(*c);
  }

  const auto [mass, m2] = density_moments(rho0);
  CheckResult cm{"rho0_mass"};
  cm.observed = mass;
  cm.worst = std::abs(mass - 1.0);
  cm.pass = cm.worst <= tol;
  CheckResult cs{"rho0_second_moment"};
  cs.observed = m2;
  const double analytic = rho0.second_moment();
  cs.worst = std::isfinite(m2) && std::isfinite(analytic) ? std::abs(m2 - analytic) / std::max(1.0, analytic)
                                                          : std::numeric_limits<double>::infinity();
  cs.pass = std::isfinite(m2) && cs.worst <= std::max(tol, 1e-6);
  rep.density = {cm, cs};
  return rep;
}

} // namespace mflab::model
