#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mflab/model/coefficients.hpp"
#include "mflab/model/initial_density.hpp"
#include "mflab/model/kernel.hpp"
#include "mflab/model/mollify.hpp"
#include "mflab/model/presets.hpp"
#include "mflab/model/validate.hpp"

using namespace mflab;
using namespace mflab::model;

namespace {

// u exp(-1/(1-u^2)) peaks where 1 - u^2 = 2u^2 / (1 - u^2)... just scan.
double bump_max() {
  double m = 0.0;
  for (int i = 1; i < 200000; ++i) {
    const double u = i / 200000.0;
    m = std::max(m, u * std::exp(-1.0 / (1.0 - u * u)));
  }
  return m;
}

double simpson(auto f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

} // namespace

TEST_CASE("preset grammar") {
  auto c = parse_preset("odd_bump(a=1.5, r=2)");
  CHECK(c.name == "odd_bump");
  CHECK(c.named.at("a") == 1.5);
  CHECK(c.named.at("r") == 2.0);
  c = parse_preset("gauss_init(0.5, 2)");
  REQUIRE(c.positional.size() == 2);
  CHECK(c.positional[1] == 2.0);
  CHECK(parse_preset("const_iso").positional.empty());
  CHECK_THROWS_AS(parse_preset("odd_bump(a=1"), PresetError);
  CHECK_THROWS_AS(parse_preset("odd_bump(a=1, 2)"), PresetError);
  CHECK_THROWS_AS(parse_preset("odd_bump(a=x)"), PresetError);
  CHECK_THROWS_AS(kernel_preset("odd_bump(b=1)"), PresetError);
  CHECK_THROWS_AS(kernel_preset("odd_bump(a=-1)"), PresetError);
}

TEST_CASE("unknown preset lists the available names") {
  try {
    (void)kernel_preset("no_such_kernel");
    FAIL("expected PresetError");
  } catch (const PresetError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("odd_bump") != std::string::npos);
    CHECK(msg.find("zero") != std::string::npos);
  }
  CHECK_FALSE(preset_names(PresetKind::coefficients).empty());
}

TEST_CASE("odd bump kernel: oddness, sup and L2 norm") {
  const double a = 0.5, r = 1.3;
  const auto k = KernelSpec::odd_bump(a, r);
  const double M = bump_max();
  for (double z : {0.01, 0.3, 0.7, 1.0, 1.29}) {
    const double u = z / r;
    CHECK(k.eval1(z) == doctest::Approx(a * u * std::exp(-1.0 / (1.0 - u * u)) / M).epsilon(1e-6));
    CHECK(k.eval1(-z) == -k.eval1(z));
  }
  CHECK(k.eval1(r) == 0.0);
  CHECK(k.eval1(2 * r) == 0.0);
  CHECK(k.eval1(0.0) == 0.0);
  CHECK(k.sup_norm() == doctest::Approx(a));
  // independent L2 oracle
  const double l2 = std::sqrt(2.0 * simpson([&](double z) {
                                const double u = z / r;
                                const double v = u < 1 ? a * u * std::exp(-1.0 / (1.0 - u * u)) / M : 0.0;
                                return v * v;
                              }, 0.0, r));
  CHECK(k.l2_norm() == doctest::Approx(l2).epsilon(1e-6));
  CHECK(kernel_l2_quadrature(k) == doctest::Approx(l2).epsilon(1e-4));
  CHECK(kernel_sup_probe(k, 3.0, 500, 1) <= a);
}

TEST_CASE("step kernel values and 2-d radial direction") {
  const auto k = KernelSpec::step(2.0, 1.0);
  CHECK(k.eval1(0.5) == 2.0);
  CHECK(k.eval1(-0.5) == -2.0);
  CHECK(k.eval1(1.5) == 0.0);
  CHECK(k.l2_norm() == doctest::Approx(std::sqrt(8.0)));
  const auto k2 = KernelSpec::step(1.0, 1.0, 2);
  const double z[2] = {0.3, 0.4};
  double out[2];
  k2.eval(z, out);
  CHECK(out[0] == doctest::Approx(0.6));
  CHECK(out[1] == doctest::Approx(0.8));
  CHECK(KernelSpec::zero().is_zero());
}

TEST_CASE("mollified step kernel stays odd and bounded") {
  const auto k = kernel_preset("step_mollified(a=1,r=1,eps=0.1)");
  CHECK(k.sup_norm() <= 1.0 + 1e-12);
  for (double z : {0.05, 0.5, 0.95, 1.05})
    CHECK(k.eval1(-z) == doctest::Approx(-k.eval1(z)).epsilon(1e-9));
  // well inside the plateau the mollified kernel equals the step
  CHECK(k.eval1(0.5) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(k.eval1(1.2)) < 1e-12);
}

TEST_CASE("mollifier has unit mass") {
  const double m1 = simpson([](double u) { return mollifier(&u, 1); }, -1.0, 1.0);
  CHECK(m1 == doctest::Approx(1.0).epsilon(1e-6));
  const auto rule = MollifierRule::line();
  double s = 0.0, first = 0.0;
  for (std::size_t i = 0; i < rule.weights.size(); ++i) {
    s += rule.weights[i];
    first += rule.weights[i] * rule.nodes[i];
  }
  CHECK(s == doctest::Approx(1.0));
  CHECK(std::abs(first) < 1e-12);
}

TEST_CASE("constant coefficient presets") {
  const auto c = coefficient_preset("const_iso(sigma=2,nu=0.5,d=2)");
  CHECK(c.d() == 2);
  CHECK(c.delta == doctest::Approx(4.0));
  const double z[2] = {1.0, -3.0};
  const auto s = c.sigma.at(0.3, z);
  CHECK(s[0] == 2.0);
  CHECK(s[1] == 0.0);
  CHECK(c.nu.at(0.0, z)[3] == 0.5);
  CHECK(c.sigma.constant);
}

TEST_CASE("initial density discretization and moments") {
  const auto g = InitialDensity::gaussian1(0.5, 0.3);
  CHECK(g.second_moment() == doctest::Approx(0.3 + 0.25));
  const auto f = g.discretize(spde::GridSpec::line(-8, 8, 2048));
  CHECK(f.mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.second_moment() == doctest::Approx(0.55).epsilon(1e-4));
  CHECK(f.mean()[0] == doctest::Approx(0.5).epsilon(1e-6));

  const auto mix = InitialDensity::mixture(1, {{1.0, {-1.0, 0.0}, 0.25}, {3.0, {1.0, 0.0}, 0.25}});
  CHECK(mix.second_moment() == doctest::Approx(1.25));
  const double x = 1.0;
  CHECK(mix.pdf(&x) == doctest::Approx(0.25 * std::exp(-8.0) / std::sqrt(2 * M_PI * 0.25) +
                                       0.75 / std::sqrt(2 * M_PI * 0.25)));

  const auto b = InitialDensity::bump(2, {0.0, 0.0}, 1.5);
  const auto fb = b.discretize(spde::GridSpec::square(-2, 2, 128));
  CHECK(fb.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fb.second_moment() == doctest::Approx(b.second_moment()).epsilon(2e-3));
}

TEST_CASE("initial density sampling matches moments") {
  std::mt19937_64 rng(42);
  const auto g = InitialDensity::gaussian(2, {1.0, -1.0}, {2.0, 0.6, 0.6, 1.0});
  const int n = 40000;
  const auto x = g.sample(rng, n);
  double m0 = 0, m1 = 0, c01 = 0;
  for (int i = 0; i < n; ++i) {
    m0 += x[2 * i];
    m1 += x[2 * i + 1];
  }
  m0 /= n;
  m1 /= n;
  for (int i = 0; i < n; ++i) c01 += (x[2 * i] - m0) * (x[2 * i + 1] - m1);
  c01 /= n;
  CHECK(std::abs(m0 - 1.0) < 5 * std::sqrt(2.0 / n));
  CHECK(std::abs(m1 + 1.0) < 5 * std::sqrt(1.0 / n));
  CHECK(std::abs(c01 - 0.6) < 0.05);
}

TEST_CASE("validation of built-in coefficient presets") {
  ProbePlan plan;
  plan.random_points = 200;
  for (const char* name : {"const_iso", "const_iso(sigma=0.7,nu=2,d=2)", "const_nu(nu=0.3)", "shear_nu(sigma=1,c=0.5)"}) {
    CAPTURE(name);
    const auto c = coefficient_preset(name);
    const auto rho0 = density_preset(c.d() == 1 ? "gauss_init" : "gauss_init(d=2)");
    const auto rep = validate(c, rho0, plan, 1e-6);
    for (const auto& r : rep.structural) {
      CAPTURE(r.name);
      CHECK(r.pass);
    }
    CHECK(rep.pass());
  }
}

TEST_CASE("rotation preset is flagged: unbounded and fails the cancellation condition") {
  ProbePlan plan;
  plan.random_points = 100;
  const auto rep = validate(coefficient_preset("rotation_nu"), density_preset("gauss_init(d=2)"), plan, 1e-6);
  CHECK_FALSE(rep.pass());
  CHECK_FALSE(rep.find("nu_c1").pass);
  CHECK(rep.find("nu_divergence_free").pass);
}

TEST_CASE("validation reports a non-elliptic sigma and a bad density") {
  auto c = coefficient_preset("const_iso(sigma=1)");
  c.delta = 2.0; // claims more ellipticity than sigma sigma^T = 1 provides
  ProbePlan plan;
  plan.random_points = 10;
  const auto rep = validate(c, density_preset("gauss_init"), plan, 1e-6);
  CHECK_FALSE(rep.find("ellipticity").pass);
  CHECK(rep.find("ellipticity").worst == doctest::Approx(1.0));
}

TEST_CASE("non-finite coefficient values throw") {
  auto c = coefficient_preset("const_iso");
  c.sigma.constant = false;
  c.sigma.eval = [](double, const double* z, double* out) { out[0] = z[0] > 1.0 ? NAN : 1.0; };
  ProbePlan plan;
  CHECK_THROWS_AS(validate(c, density_preset("gauss_init"), plan, 1e-6), std::runtime_error);
}
