#include "mflab/model/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace mflab::model {
namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;

// Nodes/weights of the 20-point rule mapped to [a, b].
template <class F>
void for_each_gauss_node(double a, double b, F&& f) {
  const auto& x = Gauss::abscissa();
  const auto& w = Gauss::weights();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      f(mid, w[i] * half);
    } else {
      f(mid - half * x[i], w[i] * half);
      f(mid + half * x[i], w[i] * half);
    }
  }
}

double bump_unnormalized(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double compute_mass(int d) {
  double total = 0.0;
  const int panels = 32;
  for (int p = 0; p < panels; ++p) {
    const double a = static_cast<double>(p) / panels;
    for_each_gauss_node(a, a + 1.0 / panels, [&](double r, double w) {
      total += w * bump_unnormalized(r * r) * (d == 1 ? 2.0 : 2.0 * std::numbers::pi * r);
    });
  }
  return total;
}

void normalize(MollifierRule& rule) {
  double s = 0.0;
  for (double w : rule.weights) s += w;
  for (double& w : rule.weights) w /= s;
}

// Lower Cholesky factor of a symmetric positive definite d x d matrix.
std::vector<double> cholesky(const std::vector<double>& a, int d) {
  std::vector<double> l(a.size(), 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<std::size_t>(i * d + j)];
      for (int k = 0; k < j; ++k) s -= l[static_cast<std::size_t>(i * d + k)] * l[static_cast<std::size_t>(j * d + k)];
      if (i == j) {
        if (!(s > 0.0)) throw std::runtime_error("mollified sigma sigma^T is not positive definite");
        l[static_cast<std::size_t>(i * d + i)] = std::sqrt(s);
      } else {
        l[static_cast<std::size_t>(i * d + j)] = s / l[static_cast<std::size_t>(j * d + j)];
      }
    }
  }
  return l;
}

MollifierRule rule_for(int d) {
  if (d == 1) return MollifierRule::line();
  if (d == 2) return MollifierRule::disk();
  throw std::invalid_argument("mollification supports d = 1 or 2");
}

} // namespace

double mollifier_mass(int d) {
  static const double m1 = compute_mass(1);
  static const double m2 = compute_mass(2);
  if (d == 1) return m1;
  if (d == 2) return m2;
  throw std::invalid_argument("mollifier_mass supports d = 1 or 2");
}

double mollifier(const double* u, int d) {
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += u[i] * u[i];
  return bump_unnormalized(r2) / mollifier_mass(d);
}

MollifierRule MollifierRule::line(const std::vector<double>& splits, int panels) {
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(panels + 1) + splits.size());
  for (int p = 0; p <= panels; ++p) edges.push_back(-1.0 + 2.0 * p / panels);
  for (double s : splits)
    if (s > -1.0 && s < 1.0) edges.push_back(s);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  MollifierRule rule;
  rule.d = 1;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    for_each_gauss_node(edges[e], edges[e + 1], [&](double u, double w) {
      rule.nodes.push_back(u);
      rule.weights.push_back(w * bump_unnormalized(u * u));
    });
  }
  normalize(rule);
  return rule;
}

MollifierRule MollifierRule::disk(int radial_panels, int angles) {
  MollifierRule rule;
  rule.d = 2;
  const double dtheta = 2.0 * std::numbers::pi / angles;
  for (int p = 0; p < radial_panels; ++p) {
    const double a = static_cast<double>(p) / radial_panels;
    for_each_gauss_node(a, a + 1.0 / radial_panels, [&](double r, double w) {
      const double radial = w * r * bump_unnormalized(r * r) * dtheta;
      for (int q = 0; q < angles; ++q) {
        const double th = (q + 0.5) * dtheta;
        rule.nodes.push_back(r * std::cos(th));
        rule.nodes.push_back(r * std::sin(th));
        rule.weights.push_back(radial);
      }
    });
  }
  normalize(rule);
  return rule;
}

KernelSpec mollify_kernel(const KernelSpec& k, double epsilon, const MollifyOptions& opts) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("mollify_kernel: epsilon must be positive");
  const int d = k.dim();
  if (d != 1 && d != 2) throw std::invalid_argument("mollify_kernel supports d = 1 or 2");

  const double extent = k.support_radius().value_or(opts.extent_if_unbounded) + epsilon;
  int n = d == 1 ? opts.nodes_per_axis : std::min(opts.nodes_per_axis, 257);
  if (n % 2 == 0) ++n; // keep a node at the origin
  const double spacing = 2.0 * extent / (n - 1);

  std::vector<double> values;
  double sup = 0.0;
  if (d == 1) {
    values.resize(static_cast<std::size_t>(n));
    std::vector<double> splits;
    for (int i = 0; i < n; ++i) {
      const double x = -extent + i * spacing;
      splits.clear();
      for (double b : k.breakpoints()) splits.push_back((x - b) / epsilon);
      const MollifierRule rule = MollifierRule::line(splits);
      double acc = 0.0;
      for (std::size_t q = 0; q < rule.weights.size(); ++q) acc += rule.weights[q] * k.eval1(x - epsilon * rule.nodes[q]);
      if (!std::isfinite(acc)) throw std::runtime_error("mollify_kernel: non-finite quadrature value");
      values[static_cast<std::size_t>(i)] = acc;
      sup = std::max(sup, std::abs(acc));
    }
  } else {
    values.resize(static_cast<std::size_t>(n) * n * 2);
    const MollifierRule rule = MollifierRule::disk();
    double z[2], v[2];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double x = -extent + i * spacing;
        const double y = -extent + j * spacing;
        double ax = 0.0, ay = 0.0;
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
          z[0] = x - epsilon * rule.nodes[2 * q];
          z[1] = y - epsilon * rule.nodes[2 * q + 1];
          k.eval(z, v);
          ax += rule.weights[q] * v[0];
          ay += rule.weights[q] * v[1];
        }
        if (!std::isfinite(ax) || !std::isfinite(ay)) throw std::runtime_error("mollify_kernel: non-finite quadrature value");
        const std::size_t idx = (static_cast<std::size_t>(i) * n + j) * 2;
        values[idx] = ax;
        values[idx + 1] = ay;
        sup = std::max(sup, std::hypot(ax, ay));
      }
    }
  }
  KernelSpec out = KernelSpec::table(d, extent, n, std::move(values), std::min(sup, k.sup_norm()), k.l2_norm());
  out.set_name(k.name() + "*J");
  return out;
}

CoefficientSet mollify_coefficients(const CoefficientSet& coeffs, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("mollify_coefficients: epsilon must be positive");
  coeffs.check();
  const int d = coeffs.d();
  CoefficientSet out = coeffs;
  if (!coeffs.sigma.constant) {
    const MollifierRule rule = rule_for(d);
    MatrixField s;
    s.rows = d;
    s.cols = d;
    s.c1_norm = coeffs.sigma.c1_norm;
    s.name = coeffs.sigma.name + "*J";
    s.eval = [sigma = coeffs.sigma, rule, epsilon, d](double t, const double* z, double* o) {
      std::vector<double> acc(static_cast<std::size_t>(d * d), 0.0), pt(static_cast<std::size_t>(d));
      for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        for (int a = 0; a < d; ++a) pt[a] = z[a] - epsilon * rule.nodes[q * d + a];
        const auto a = sigma_sigma_t(sigma, t, pt.data());
        for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += rule.weights[q] * a[e];
      }
      const auto l = cholesky(acc, d);
      std::copy(l.begin(), l.end(), o);
    };
    out.sigma = std::move(s);
  }
  if (!coeffs.nu.constant) {
    const MollifierRule rule = rule_for(d);
    MatrixField n = coeffs.nu;
    n.name = coeffs.nu.name + "*J";
    n.eval = [nu = coeffs.nu, rule, epsilon, d](double t, const double* z, double* o) {
      const int size = nu.rows * nu.cols;
      std::vector<double> acc(static_cast<std::size_t>(size), 0.0), pt(static_cast<std::size_t>(d)),
          v(static_cast<std::size_t>(size));
      for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        for (int a = 0; a < d; ++a) pt[a] = z[a] - epsilon * rule.nodes[q * d + a];
        nu.eval(t, pt.data(), v.data());
        for (int e = 0; e < size; ++e) acc[e] += rule.weights[q] * v[e];
      }
      std::copy(acc.begin(), acc.end(), o);
    };
    out.nu = std::move(n);
  }
  return out;
}

} // namespace mflab::model
