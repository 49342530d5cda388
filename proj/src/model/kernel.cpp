#include "mflab/model/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace mflab::model {
namespace {

// Maximizer of u*exp(-1/(1-u^2)) on (0,1): root of (1-u^2)^2 = 2u^2.
const double kBumpArgMax = (std::sqrt(6.0) - std::sqrt(2.0)) / 2.0;
const double kBumpMax = kBumpArgMax * std::exp(-1.0 / (1.0 - kBumpArgMax * kBumpArgMax));

double unit_sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// Integral of f over [a,b] with composite 20-point Gauss-Legendre.
template <class F>
double composite_gauss(F&& f, double a, double b, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    total += Rule::integrate([&](double x) { return f(x); }, lo, lo + width);
  }
  return total;
}

void check_dim(int dim) {
  if (dim < 1) throw std::invalid_argument("kernel dimension must be >= 1");
}

} // namespace

double KernelSpec::bump_profile(double u) {
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  return u * std::exp(-1.0 / (1.0 - a * a)) / kBumpMax;
}

KernelSpec KernelSpec::zero(int dim) {
  check_dim(dim);
  KernelSpec k;
  k.dim_ = dim;
  k.shape_ = Shape::zero;
  k.support_radius_ = 0.0;
  k.name_ = "zero";
  return k;
}

KernelSpec KernelSpec::odd_bump(double amplitude, double radius, int dim) {
  check_dim(dim);
  if (!(amplitude >= 0.0) || !(radius > 0.0))
    throw std::invalid_argument("odd_bump requires a >= 0 and r > 0");
  KernelSpec k;
  k.dim_ = dim;
  k.shape_ = amplitude == 0.0 ? Shape::zero : Shape::odd_bump;
  k.amplitude_ = amplitude;
  k.radius_ = radius;
  k.sup_norm_ = amplitude;
  const double radial = composite_gauss(
      [dim](double s) { return std::pow(bump_profile(s), 2) * std::pow(s, dim - 1); }, 0.0, 1.0, 16);
  k.l2_norm_ = amplitude * std::sqrt(std::pow(radius, dim) * unit_sphere_area(dim) * radial);
  k.support_radius_ = radius;
  k.name_ = "odd_bump";
  return k;
}

KernelSpec KernelSpec::step(double amplitude, double radius, int dim) {
  check_dim(dim);
  if (!(amplitude >= 0.0) || !(radius > 0.0))
    throw std::invalid_argument("step requires a >= 0 and r > 0");
  KernelSpec k;
  k.dim_ = dim;
  k.shape_ = amplitude == 0.0 ? Shape::zero : Shape::step;
  k.amplitude_ = amplitude;
  k.radius_ = radius;
  k.sup_norm_ = amplitude;
  k.l2_norm_ = amplitude * std::sqrt(unit_ball_volume(dim) * std::pow(radius, dim));
  k.support_radius_ = radius;
  if (dim == 1) k.breakpoints_ = {-radius, 0.0, radius};
  k.name_ = "step";
  return k;
}

KernelSpec KernelSpec::custom(int dim, Callable f, double sup_norm, double l2_norm,
                              std::optional<double> support_radius, std::vector<double> breakpoints) {
  check_dim(dim);
  if (!f) throw std::invalid_argument("custom kernel requires a callable");
  KernelSpec k;
  k.dim_ = dim;
  k.shape_ = Shape::custom;
  k.sup_norm_ = sup_norm;
  k.l2_norm_ = l2_norm;
  k.odd_ = false;
  k.support_radius_ = support_radius;
  std::sort(breakpoints.begin(), breakpoints.end());
  k.breakpoints_ = std::move(breakpoints);
  k.callable_ = std::make_shared<const Callable>(std::move(f));
  k.name_ = "custom";
  return k;
}

KernelSpec KernelSpec::table(int dim, double extent, int nodes_per_axis, std::vector<double> values,
                             double sup_norm, double l2_norm) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("tabulated kernels support d = 1 or 2");
  if (nodes_per_axis < 2 || !(extent > 0.0)) throw std::invalid_argument("bad kernel table geometry");
  std::size_t expected = static_cast<std::size_t>(dim);
  for (int a = 0; a < dim; ++a) expected *= static_cast<std::size_t>(nodes_per_axis);
  if (values.size() != expected) throw std::invalid_argument("kernel table size mismatch");

  auto t = std::make_shared<Table>();
  t->dim = dim;
  t->extent = extent;
  t->nodes = nodes_per_axis;
  t->spacing = 2.0 * extent / (nodes_per_axis - 1);
  t->values = std::move(values);

  KernelSpec k;
  k.dim_ = dim;
  k.shape_ = Shape::table;
  k.sup_norm_ = sup_norm;
  k.l2_norm_ = l2_norm;
  k.support_radius_ = extent * std::sqrt(static_cast<double>(dim));
  if (dim == 1) {
    const auto& v = t->values;
    const int n = nodes_per_axis;
    bool odd = true;
    for (int i = 0; i < n && odd; ++i) odd = std::abs(v[i] + v[n - 1 - i]) <= 1e-14 * std::max(1.0, sup_norm);
    k.odd_ = odd;
  } else {
    k.odd_ = false;
  }
  k.table_ = std::move(t);
  k.name_ = "table";
  return k;
}

KernelSpec KernelSpec::sum(const KernelSpec& a, const KernelSpec& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("kernel sum: dimension mismatch");
  const int dim = a.dim();
  std::optional<double> support;
  if (a.support_radius() && b.support_radius()) support = std::max(*a.support_radius(), *b.support_radius());
  std::vector<double> bp = a.breakpoints();
  bp.insert(bp.end(), b.breakpoints().begin(), b.breakpoints().end());
  bp.erase(std::unique(bp.begin(), (std::sort(bp.begin(), bp.end()), bp.end())), bp.end());
  KernelSpec out = custom(
      dim,
      [a, b, dim](const double* z, double* o) {
        std::vector<double> tmp(static_cast<std::size_t>(dim));
        a.eval(z, o);
        b.eval(z, tmp.data());
        for (int i = 0; i < dim; ++i) o[i] += tmp[i];
      },
      a.sup_norm() + b.sup_norm(), a.l2_norm() + b.l2_norm(), support, std::move(bp));
  out.odd_ = a.is_odd() && b.is_odd();
  out.name_ = a.name() + "+" + b.name();
  return out;
}

void KernelSpec::eval(const double* z, double* out) const {
  switch (shape_) {
  case Shape::zero:
    for (int i = 0; i < dim_; ++i) out[i] = 0.0;
    return;
  case Shape::odd_bump:
  case Shape::step: {
    if (dim_ == 1) {
      out[0] = eval1(z[0]);
      return;
    }
    double r2 = 0.0;
    for (int i = 0; i < dim_; ++i) r2 += z[i] * z[i];
    const double r = std::sqrt(r2);
    double mag = 0.0;
    if (r > 0.0 && r < radius_) mag = shape_ == Shape::step ? amplitude_ : amplitude_ * bump_profile(r / radius_);
    for (int i = 0; i < dim_; ++i) out[i] = r > 0.0 ? mag * z[i] / r : 0.0;
    return;
  }
  case Shape::table:
    eval_table(z, out);
    return;
  case Shape::custom:
    (*callable_)(z, out);
    return;
  }
}

void KernelSpec::eval_table(const double* z, double* out) const {
  const Table& t = *table_;
  const int n = t.nodes;
  if (t.dim == 1) {
    const double s = (z[0] + t.extent) / t.spacing;
    if (!(s >= 0.0) || s > n - 1) {
      out[0] = 0.0;
      return;
    }
    const int i = std::min(static_cast<int>(s), n - 2);
    const double w = s - i;
    out[0] = (1.0 - w) * t.values[i] + w * t.values[i + 1];
    return;
  }
  const double sx = (z[0] + t.extent) / t.spacing;
  const double sy = (z[1] + t.extent) / t.spacing;
  if (!(sx >= 0.0) || !(sy >= 0.0) || sx > n - 1 || sy > n - 1) {
    out[0] = out[1] = 0.0;
    return;
  }
  const int i = std::min(static_cast<int>(sx), n - 2);
  const int j = std::min(static_cast<int>(sy), n - 2);
  const double wx = sx - i;
  const double wy = sy - j;
  auto at = [&](int a, int b, int c) { return t.values[(static_cast<std::size_t>(a) * n + b) * 2 + c]; };
  for (int c = 0; c < 2; ++c) {
    out[c] = (1 - wx) * (1 - wy) * at(i, j, c) + wx * (1 - wy) * at(i + 1, j, c) + (1 - wx) * wy * at(i, j + 1, c) +
             wx * wy * at(i + 1, j + 1, c);
  }
}

double kernel_l2_quadrature(const KernelSpec& k, double extent, int cells_per_axis) {
  const int d = k.dim();
  if (d > 2) throw std::invalid_argument("kernel_l2_quadrature supports d <= 2");
  const double R = k.support_radius().value_or(extent);
  if (R == 0.0) return 0.0;
  const int n = d == 1 ? cells_per_axis : std::min(cells_per_axis, 800);
  const double h = 2.0 * R / n;
  std::vector<double> z(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(d));
  double total = 0.0;
  if (d == 1) {
    for (int i = 0; i < n; ++i) {
      z[0] = -R + (i + 0.5) * h;
      k.eval(z.data(), v.data());
      total += v[0] * v[0];
    }
    return std::sqrt(total * h);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      z[0] = -R + (i + 0.5) * h;
      z[1] = -R + (j + 0.5) * h;
      k.eval(z.data(), v.data());
      total += v[0] * v[0] + v[1] * v[1];
    }
  }
  return std::sqrt(total * h * h);
}

double kernel_sup_probe(const KernelSpec& k, double extent, int probes, std::uint64_t seed) {
  const int d = k.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-extent, extent);
  std::vector<double> z(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(d));
  double worst = 0.0;
  auto probe = [&] {
    k.eval(z.data(), v.data());
    double s = 0.0;
    for (double c : v) s += c * c;
    worst = std::max(worst, std::sqrt(s));
  };
  for (int p = 0; p < probes; ++p) {
    for (int a = 0; a < d; ++a) z[a] = unif(rng);
    probe();
  }
  const int lattice = d == 1 ? probes : static_cast<int>(std::sqrt(static_cast<double>(probes)));
  for (int p = 0; p < lattice; ++p) {
    const double x = -extent + 2.0 * extent * (p + 0.5) / lattice;
    if (d == 1) {
      z[0] = x;
      probe();
    } else {
      for (int q = 0; q < lattice; ++q) {
        z[0] = x;
        z[1] = -extent + 2.0 * extent * (q + 0.5) / lattice;
        for (int a = 2; a < d; ++a) z[a] = 0.0;
        probe();
      }
    }
  }
  return worst;
}

} // namespace mflab::model
