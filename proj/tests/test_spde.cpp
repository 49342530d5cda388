#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mflab/model/initial_density.hpp"
#include "mflab/model/presets.hpp"
#include "mflab/spde/convolution.hpp"
#include "mflab/spde/diagnostics.hpp"
#include "mflab/spde/fpk.hpp"
#include "mflab/spde/liouville.hpp"
#include "mflab/spde/picard.hpp"

using namespace mflab;
using namespace mflab::spde;

namespace {

double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// exact cell averages of N(m, v) on g
DensityField gaussian_cells(const GridSpec& g, double m, double v) {
  DensityField f(g);
  const double s = std::sqrt(v);
  for (int i = 0; i < g.n[0]; ++i) {
    const double a = g.lo[0] + i * g.h;
    f[i] = (Phi((a + g.h - m) / s) - Phi((a - m) / s)) / g.h;
  }
  return f;
}

double l1(const DensityField& a, const DensityField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * a.grid().cell_volume();
}

const VelocityFn no_drift = [](int, const DensityField& r, std::vector<double>& v) {
  v.assign(r.size() * r.dim(), 0.0);
};

model::CoefficientSet iso(double sigma, double nu) {
  return model::coefficient_preset("const_iso(sigma=" + std::to_string(sigma) + ",nu=" + std::to_string(nu) + ")");
}

model::CoefficientSet nu_free(double sigma) {
  return model::make_coefficients(model::MatrixField::scaled_identity(1, sigma, "sigma"),
                                  model::MatrixField::scaled_identity(1, 0.0, "nu"), sigma * sigma);
}

// every step: mass + outflow stays at mass0, and the field stays nonnegative
void check_conservation(const SpdeSolution& sol, double mass0, double tol = 1e-12) {
  for (const auto& d : sol.diagnostics) {
    CHECK(std::abs(d.mass + d.outflow - mass0) <= tol);
    CHECK(d.min >= 0.0);
  }
}

} // namespace

TEST_CASE("grid and density field basics") {
  const auto g = GridSpec::line(-1, 1, 4);
  CHECK(g.h == 0.5);
  CHECK(g.center(0, 0) == -0.75);
  const auto t = g.translated({0.25, 0.0});
  CHECK(t.lo[0] == -0.75);
  CHECK_FALSE(t.same_as(g));
  CHECK(t.translated({-0.25, 0.0}).same_as(g));
  DensityField f(g, {0.0, 1.0, 1.0, 0.0});
  CHECK(f.mass() == 1.0);
  CHECK(f.l2_norm() == doctest::Approx(std::sqrt(1.0)));
  CHECK(f.second_moment() == doctest::Approx(0.5 * 0.0625 * 2));
  CHECK(f.mean()[0] == 0.0);
  const double x = -0.25;
  CHECK(f.interpolate(&x) == 1.0);
  const double mid = -0.5;
  CHECK(f.interpolate(&mid) == 0.5);
  CHECK_THROWS(DensityField(g, {1.0}));

  std::stringstream csv, bin;
  f.write_csv(csv);
  f.write_binary(bin);
  const auto a = DensityField::read_csv(csv);
  const auto b = DensityField::read_binary(bin);
  CHECK(a.values() == f.values());
  CHECK(b.values() == f.values());
  CHECK(a.grid().same_as(g));
  CHECK(b.grid().same_as(g));

  const auto g2 = GridSpec::square(0, 1, 3);
  DensityField f2(g2);
  f2[g2.index(1, 2)] = 9.0;
  std::stringstream b2;
  f2.write_binary(b2);
  CHECK(DensityField::read_binary(b2).at(1, 2) == 9.0);
}

TEST_CASE("heat flow matches the heat kernel") {
  const auto g = GridSpec::line(-8, 8, 512);
  const auto rho0 = model::InitialDensity::gaussian1(0, 0.01).discretize(g);
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 500), 1, 1);
  const auto sol = solve_linear_fpk(no_drift, nu_free(1.0), rho0, W);
  CHECK(sol.fields.size() == 501);
  CHECK(l1(sol.final(), gaussian_cells(sol.final().grid(), 0.0, 0.51)) <= 5e-3);
  check_conservation(sol, rho0.mass());
  // heat semigroup contracts L2
  for (std::size_t j = 1; j < sol.diagnostics.size(); ++j)
    CHECK(sol.diagnostics[j].l2 <= sol.diagnostics[j - 1].l2 * (1 + 1e-14));
}

TEST_CASE("constant common noise: conditional Gaussian N(W_T, 0.01 + T)") {
  const auto g = GridSpec::line(-8, 8, 1024);
  const auto rho0 = model::InitialDensity::gaussian1(0, 0.01).discretize(g);
  const auto c = iso(1.0, 1.0);
  std::vector<double> l2_first;
  for (int seed = 1; seed <= 3; ++seed) {
    const auto W = sde::make_common_path(sde::TimeGrid(0.5, 500), 1, seed);
    const auto sol = solve_linear_fpk(no_drift, c, rho0, W);
    const auto& fT = sol.final();
    CHECK(l1(fT, gaussian_cells(fT.grid(), W.W.back(), 0.51)) <= 1e-2);
    CHECK(std::abs(fT.mass() - 1.0) <= 1e-10);
    // L2 trajectory does not see the common noise
    if (seed == 1)
      for (const auto& d : sol.diagnostics) l2_first.push_back(d.l2);
    else
      for (std::size_t j = 0; j < l2_first.size(); ++j) CHECK(std::abs(sol.diagnostics[j].l2 - l2_first[j]) <= 1e-8);
    // factorization: nu = 1 solution is the nu = 0 solution moved by W_t
    const auto flat = solve_linear_fpk(no_drift, nu_free(1.0), rho0, W);
    for (int j : {100, 250, 500}) {
      const auto& a = sol.at_step(j);
      const auto& b = flat.at_step(j);
      CHECK(a.grid().lo[0] - b.grid().lo[0] == doctest::Approx(W.W[j]).epsilon(1e-12));
      CHECK(l1(a, b) <= 1e-12);
    }
  }
}

TEST_CASE("outflow boundary accounts for every unit of lost mass") {
  const auto g = GridSpec::line(-1.5, 1.5, 120);
  const auto rho0 = model::InitialDensity::gaussian1(0.5, 0.1).discretize(g);
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 100), 1, 4);
  FpkOptions o;
  o.boundary = Boundary::outflow;
  const VelocityFn push = [](int, const DensityField& r, std::vector<double>& v) { v.assign(r.size(), 1.5); };
  const auto sol = solve_linear_fpk(push, iso(1.0, 0.5), rho0, W, o);
  CHECK(sol.diagnostics.back().outflow > 0.05);
  check_conservation(sol, rho0.mass(), 1e-12);
  // zero-flux keeps everything
  FpkOptions z;
  const auto kept = solve_linear_fpk(push, iso(1.0, 0.5), rho0, W, z);
  check_conservation(kept, rho0.mass());
  CHECK(kept.diagnostics.back().outflow == 0.0);
}

TEST_CASE("CFL violation raises StabilityError") {
  const auto g = GridSpec::line(-4, 4, 64);
  const auto rho0 = model::InitialDensity::gaussian1(0, 1).discretize(g);
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 10), 1, 1);
  const VelocityFn fast = [](int, const DensityField& r, std::vector<double>& v) { v.assign(r.size(), 50.0); };
  CHECK_THROWS_AS(solve_linear_fpk(fast, iso(1, 1), rho0, W), StabilityError);
}

TEST_CASE("convolution: FFT and direct paths agree and match the closed form") {
  const auto g = GridSpec::line(-8, 8, 2048);
  const double s = 0.7, a = 1.0, r = 1.0;
  const auto rho = gaussian_cells(g, 0.0, s * s);
  const auto k = model::KernelSpec::step(a, r);
  Convolver fft(k, g, 0), direct(k, g, 1u << 30);
  CHECK(fft.uses_fft());
  CHECK_FALSE(direct.uses_fft());
  std::vector<double> u, v;
  fft.apply(rho, u);
  direct.apply(rho, v);
  double diff = 0.0, err = 0.0;
  for (int i = 0; i < g.n[0]; ++i) {
    diff = std::max(diff, std::abs(u[i] - v[i]));
    const double x = g.center(0, i);
    const double exact = a * (Phi(x / s) - Phi((x - r) / s)) - a * (Phi((x + r) / s) - Phi(x / s));
    err = std::max(err, std::abs(u[i] - exact));
  }
  CHECK(diff < 1e-12);
  CHECK(err < 5e-3);
  // unit mass: |k * rho| <= ||k||
  for (double w : u) CHECK(std::abs(w) <= a * (1 + 1e-12));

  // 2-d agreement
  const auto g2 = GridSpec::square(-3, 3, 40);
  const auto rho2 = model::InitialDensity::gaussian(2, {0.3, -0.2}, {0.5, 0.1, 0.1, 0.4}).discretize(g2);
  const auto k2 = model::kernel_preset("odd_bump(a=1,r=1.5,d=2)");
  Convolver f2(k2, g2, 0), d2(k2, g2, 1u << 30);
  f2.apply(rho2, u);
  d2.apply(rho2, v);
  REQUIRE(u.size() == 2 * g2.size());
  diff = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) diff = std::max(diff, std::abs(u[i] - v[i]));
  CHECK(diff < 1e-12);
  // a translated grid reuses the sampled kernel
  auto moved = rho2;
  moved.grid() = g2.translated({0.37, -1.1});
  f2.apply(moved, v);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(u[i] - v[i]) < 1e-12);
}

TEST_CASE("Picard: zero kernel converges after one iteration") {
  const auto g = GridSpec::line(-8, 8, 256);
  const auto rho0 = model::InitialDensity::gaussian1(0, 1).discretize(g);
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 50), 1, 2);
  const auto r = picard_solve(model::KernelSpec::zero(), iso(1, 1), rho0, W);
  REQUIRE(r.increments.size() == 2);
  CHECK(r.increments[0] > 0.0);
  CHECK(r.increments[1] == 0.0);
  CHECK(r.iterations == 1);
  CHECK(r.tol == doctest::Approx(1e-8 * rho0.l2_norm()));
  check_conservation(r.solution, rho0.mass());
}

TEST_CASE("Picard: odd-bump increments decay geometrically") {
  const auto g = GridSpec::line(-8, 8, 512);
  const auto rho0 = model::InitialDensity::gaussian1(0, 1).discretize(g);
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 100), 1, 3);
  const auto r = picard_solve(model::kernel_preset("odd_bump(a=0.5,r=1)"), iso(1, 1), rho0, W);
  REQUIRE(r.increments.size() >= 4);
  for (std::size_t n = 2; n < r.increments.size(); ++n)
    if (r.increments[n - 1] > 1e-13) CHECK(r.increments[n] / r.increments[n - 1] < 0.8);
  CHECK(r.increments.back() < r.tol);
  check_conservation(r.solution, rho0.mass());
  CHECK(r.solution.w_fingerprint == W.fingerprint());

  // not enough iterations
  spde::PicardOptions o;
  o.max_iter = 2;
  try {
    (void)picard_solve(model::kernel_preset("odd_bump(a=0.5,r=1)"), iso(1, 1), rho0, W, o);
    FAIL("expected PicardDivergence");
  } catch (const PicardDivergence& e) {
    CHECK(e.increments().size() == 2);
  }
}

TEST_CASE("Picard fixed point converges at least at first order in h") {
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 100), 1, 5);
  const auto k = model::kernel_preset("odd_bump(a=0.5,r=1)");
  const auto init = model::density_preset("two_bump(sep=2,var=0.25)");
  std::vector<DensityField> finals;
  for (int cells : {128, 256, 512}) {
    const auto g = GridSpec::line(-8, 8, cells);
    finals.push_back(picard_solve(k, iso(1, 1), init.discretize(g), W).solution.final());
  }
  // coarse-grain the finer solutions onto the coarser grid by pairing cells
  auto coarsen = [](const DensityField& f) {
    auto g = f.grid();
    g.h *= 2;
    g.n[0] /= 2;
    DensityField c(g);
    for (int i = 0; i < g.n[0]; ++i) c[i] = 0.5 * (f[2 * i] + f[2 * i + 1]);
    return c;
  };
  const double e1 = l1(finals[0], coarsen(finals[1]));
  const double e2 = l1(finals[1], coarsen(finals[2]));
  CAPTURE(e1);
  CAPTURE(e2);
  CHECK(std::log2(e1 / e2) >= 0.9);
}

TEST_CASE("tensorize and marginal") {
  const auto g = GridSpec::line(0, 1, 10);
  DensityField u(g, std::vector<double>(10, 1.0));
  const auto u2 = tensorize(u, 2);
  CHECK(u2.dim() == 2);
  CHECK(u2.mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(u2.min_value() == 1.0);
  CHECK(tensorize(u, 1).values() == u.values());
  const auto g2 = GridSpec::square(0, 1, 4);
  CHECK_THROWS(tensorize(DensityField(g2), 2));

  const auto gl = GridSpec::line(-6, 6, 240);
  const auto gauss = gaussian_cells(gl, 0.4, 0.8);
  const auto prod = tensorize(gauss, 2);
  // closed form: product of exact cell averages
  double err = 0.0;
  for (int i = 0; i < 240; ++i)
    for (int j = 0; j < 240; ++j) err += std::abs(prod.at(i, j) - gauss[i] * gauss[j]);
  CHECK(err * gl.h * gl.h <= 1e-6);
  // marginal of the product is gauss times its (truncated) mass
  DensityField scaled = gauss;
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= gauss.mass();
  CHECK(l1(marginal(prod, 1), scaled) < 1e-14);
  CHECK(l1(marginal(prod, 2), scaled) < 1e-14);

  // correlated Gaussian: marginal is N(0, 1)
  const auto sq = GridSpec::square(-7, 7, 280);
  const auto corr = model::InitialDensity::gaussian(2, {0.0, 0.0}, {1.0, 0.6, 0.6, 1.0}).discretize(sq);
  CHECK(l1(marginal(corr, 1), gaussian_cells(GridSpec::line(-7, 7, 280), 0.0, 1.0)) <= 1e-4);
  CHECK(l1(marginal(corr, 1), marginal(corr, 2)) <= 1e-12);
}

TEST_CASE("Liouville N=2 with zero kernel equals the tensorized one-particle solution") {
  const auto gl = GridSpec::line(-6, 6, 96);
  const auto rho0 = model::InitialDensity::gaussian1(0, 0.5).discretize(gl);
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 50), 1, 6);
  const auto c = iso(1, 1);
  const auto one = picard_solve(model::KernelSpec::zero(), c, rho0, W).solution;
  const auto two = solve_liouville_2(model::KernelSpec::zero(), c, tensorize(rho0, 2), W);
  CHECK(two.w_fingerprint == one.w_fingerprint);
  // 1-d scheme error against the exact Gaussian
  const double e1 = l1(one.final(), gaussian_cells(one.final().grid(), W.W.back(), 1.0));
  const auto prod = tensorize(one.final(), 2);
  CHECK(prod.grid().same_as(two.final().grid()));
  CHECK(l1(two.final(), prod) <= 2 * e1 + 1e-12);
  check_conservation(two, 1.0);
}

TEST_CASE("Liouville N=2 with an attractive kernel: symmetry and marginals") {
  const auto gl = GridSpec::line(-6, 6, 96);
  const auto rho0 = model::density_preset("two_bump(sep=2,var=0.3)").discretize(gl);
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 50), 1, 7);
  const auto sol = solve_liouville_2(model::kernel_preset("odd_bump(a=0.25,r=1)"), iso(1, 1), tensorize(rho0, 2), W);
  CHECK(sol.max_asymmetry <= 1e-10);
  for (int j : {0, 10, 50}) {
    const auto& f = sol.at_step(j);
    CHECK(swap_asymmetry(f) <= 1e-10);
    CHECK(std::abs(marginal(f, 1).mass() - marginal(f, 2).mass()) <= 1e-8);
  }
  check_conservation(sol, tensorize(rho0, 2).mass());
}

TEST_CASE("non-constant divergence-free common noise (shear) in 2-d") {
  const auto c = model::coefficient_preset("shear_nu(sigma=1,c=0.5)");
  const auto g = GridSpec::square(-5, 5, 48);
  const auto rho0 = model::density_preset("gauss_init(d=2)").discretize(g);
  const auto W = sde::make_common_path(sde::TimeGrid(0.25, 25), 1, 8);
  const auto sol = solve_linear_fpk(
      [](int, const DensityField& r, std::vector<double>& v) { v.assign(2 * r.size(), 0.0); }, c, rho0, W);
  check_conservation(sol, rho0.mass(), 1e-11);
  CHECK(sol.final().grid().same_as(g)); // no moving frame
  // k = 0 Picard in 2-d goes through the same path
  const auto pic = picard_solve(model::KernelSpec::zero(2), c, rho0, W);
  CHECK(pic.iterations == 1);
}

TEST_CASE("a-priori diagnostics: caps hold on solver output") {
  const auto g = GridSpec::line(-8, 8, 512);
  const auto init = model::density_preset("gauss_init(0,1)");
  const auto rho0 = init.discretize(g);
  const auto k = model::kernel_preset("odd_bump(a=0.5,r=1)");
  const auto c = iso(1, 1);
  for (int seed = 1; seed <= 3; ++seed) {
    const auto W = sde::make_common_path(sde::TimeGrid(0.5, 100), 1, seed);
    const auto sol = picard_solve(k, c, rho0, W).solution;
    DiagnosticBounds b;
    b.l2_cap = l2_cap(k, c, rho0.l2_norm(), 0.5);
    b.moment_cap = moment_cap(k, c, rho0.second_moment(), 0.5, W.sup_norm());
    CHECK(b.l2_cap == doctest::Approx(std::sqrt(std::exp(2 * 0.25 * 0.5)) * rho0.l2_norm()));
    const auto rep = diagnostics_check(sol, b);
    CHECK(rep.pass);
    CHECK(rep.first_violation_step == -1);
    CHECK(rep.sup_m2 <= b.moment_cap);
  }
  // a cap that is too small is reported with the first violating step
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 100), 1, 1);
  const auto sol = picard_solve(k, c, rho0, W).solution;
  DiagnosticBounds tight;
  tight.l2_cap = 1e6;
  tight.moment_cap = 1.01; // m2 starts at 1 + h^2/12 and grows
  const auto bad = diagnostics_check(sol, tight);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.moment_ok);
  CHECK(bad.first_violation_step > 0);
  std::stringstream os;
  write_diagnostics_csv(sol, os);
  std::string header;
  std::getline(os, header);
  CHECK(header == "t,mass,l2,m2,min,outflow");
}

TEST_CASE("solves are bit-identical for identical inputs") {
  const auto g = GridSpec::line(-8, 8, 1024);
  const auto rho0 = model::density_preset("gauss_init(0,1)").discretize(g);
  const auto W = sde::make_common_path(sde::TimeGrid(0.5, 32), 1, 10);
  const auto k = model::kernel_preset("odd_bump(a=0.5,r=1)");
  const auto a = picard_solve(k, iso(1, 1), rho0, W);
  const auto b = picard_solve(k, iso(1, 1), rho0, W);
  CHECK(a.solution.final().values() == b.solution.final().values());
  CHECK(a.increments == b.increments);
}
