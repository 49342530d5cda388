#include "mflab/model/initial_density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace mflab::model {
namespace {

using spde::DensityField;
using spde::GridSpec;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Probability that N(m, s^2) falls in [a, b].
double interval_mass(double a, double b, double m, double s) {
  const double za = (a - m) / s;
  const double zb = (b - m) / s;
  // Use the upper tail on the right to keep relative accuracy far from the mean.
  if (za > 0.0) return 0.5 * (std::erfc(za / std::numbers::sqrt2) - std::erfc(zb / std::numbers::sqrt2));
  return normal_cdf(zb) - normal_cdf(za);
}

double bump_raw(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

// Radial integral of r^p * bump(r) * r^(d-1) over [0, 1].
double bump_radial_moment(int d, int p) {
  using G = boost::math::quadrature::gauss<double, 20>;
  double total = 0.0;
  const int panels = 32;
  for (int q = 0; q < panels; ++q) {
    const double a = static_cast<double>(q) / panels;
    const double b = a + 1.0 / panels;
    total += G::integrate([&](double r) { return std::pow(r, p + d - 1) * bump_raw(r * r); }, a, b);
  }
  return total;
}

double bump_normalizer(int d) {
  const double surface = d == 1 ? 2.0 : 2.0 * std::numbers::pi;
  return surface * bump_radial_moment(d, 0);
}

// 4-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 4> kGx{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGw{0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};

} // namespace

InitialDensity InitialDensity::gaussian(int dim, std::array<double, 2> mean, std::array<double, 4> cov) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("InitialDensity: d must be 1 or 2");
  InitialDensity r;
  r.kind_ = Kind::gaussian;
  r.dim_ = dim;
  r.mean_ = mean;
  if (dim == 1) {
    cov = {cov[0], 0.0, 0.0, 1.0};
    r.mean_[1] = 0.0;
  }
  const double det = dim == 1 ? cov[0] : cov[0] * cov[3] - cov[1] * cov[2];
  if (!(cov[0] > 0.0) || !(det > 0.0) || (dim == 2 && cov[1] != cov[2]))
    throw std::invalid_argument("InitialDensity::gaussian: covariance must be symmetric positive definite");
  r.cov_ = cov;
  r.name_ = "gaussian";
  return r;
}

InitialDensity InitialDensity::gaussian1(double mean, double variance) {
  return gaussian(1, {mean, 0.0}, {variance, 0.0, 0.0, 1.0});
}

InitialDensity InitialDensity::mixture(int dim, std::vector<Component> components) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("InitialDensity: d must be 1 or 2");
  if (components.empty()) throw std::invalid_argument("InitialDensity::mixture: no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !(c.variance > 0.0))
      throw std::invalid_argument("InitialDensity::mixture: weights and variances must be positive");
    total += c.weight;
  }
  for (auto& c : components) {
    c.weight /= total;
    if (dim == 1) c.mean[1] = 0.0;
  }
  InitialDensity r;
  r.kind_ = Kind::mixture;
  r.dim_ = dim;
  r.components_ = std::move(components);
  r.name_ = "mixture";
  return r;
}

InitialDensity InitialDensity::bump(int dim, std::array<double, 2> center, double radius) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("InitialDensity: d must be 1 or 2");
  if (!(radius > 0.0)) throw std::invalid_argument("InitialDensity::bump: radius must be positive");
  InitialDensity r;
  r.kind_ = Kind::bump;
  r.dim_ = dim;
  r.mean_ = center;
  if (dim == 1) r.mean_[1] = 0.0;
  r.radius_ = radius;
  r.name_ = "bump";
  return r;
}

InitialDensity InitialDensity::from_grid(DensityField field) {
  if (field.min_value() < 0.0) throw std::invalid_argument("InitialDensity::from_grid: negative values");
  field.normalize();
  InitialDensity r;
  r.kind_ = Kind::grid;
  r.dim_ = field.dim();
  r.grid_ = std::move(field);
  r.name_ = "grid";
  return r;
}

double InitialDensity::pdf(const double* x) const {
  switch (kind_) {
  case Kind::gaussian: {
    if (dim_ == 1) {
      const double z = x[0] - mean_[0];
      return std::exp(-0.5 * z * z / cov_[0]) / std::sqrt(2.0 * std::numbers::pi * cov_[0]);
    }
    const double det = cov_[0] * cov_[3] - cov_[1] * cov_[2];
    const double a = x[0] - mean_[0];
    const double b = x[1] - mean_[1];
    const double q = (cov_[3] * a * a - 2.0 * cov_[1] * a * b + cov_[0] * b * b) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
  }
  case Kind::mixture: {
    double s = 0.0;
    for (const auto& c : components_) {
      double q = 0.0;
      for (int a = 0; a < dim_; ++a) q += (x[a] - c.mean[a]) * (x[a] - c.mean[a]);
      s += c.weight * std::exp(-0.5 * q / c.variance) / std::pow(2.0 * std::numbers::pi * c.variance, 0.5 * dim_);
    }
    return s;
  }
  case Kind::bump: {
    static const double z1 = bump_normalizer(1);
    static const double z2 = bump_normalizer(2);
    double r2 = 0.0;
    for (int a = 0; a < dim_; ++a) r2 += (x[a] - mean_[a]) * (x[a] - mean_[a]) / (radius_ * radius_);
    return bump_raw(r2) / ((dim_ == 1 ? z1 : z2) * std::pow(radius_, dim_));
  }
  case Kind::grid: {
    const GridSpec& g = grid_.grid();
    int idx[2] = {0, 0};
    for (int a = 0; a < dim_; ++a) {
      const double s = (x[a] - g.lo[a]) / g.h;
      if (s < 0.0 || s >= g.n[a]) return 0.0;
      idx[a] = static_cast<int>(s);
    }
    return dim_ == 1 ? grid_[static_cast<std::size_t>(idx[0])] : grid_.at(idx[0], idx[1]);
  }
  }
  return 0.0;
}

double InitialDensity::mass() const { return kind_ == Kind::grid ? grid_.mass() : 1.0; }

double InitialDensity::second_moment() const {
  switch (kind_) {
  case Kind::gaussian:
    return mean_[0] * mean_[0] + mean_[1] * mean_[1] + cov_[0] + (dim_ == 2 ? cov_[3] : 0.0);
  case Kind::mixture: {
    double s = 0.0;
    for (const auto& c : components_)
      s += c.weight * (c.mean[0] * c.mean[0] + c.mean[1] * c.mean[1] + dim_ * c.variance);
    return s;
  }
  case Kind::bump: {
    // Odd moments of the centred bump vanish, so |c|^2 + r^2 E|u|^2.
    const double eu2 = bump_radial_moment(dim_, 2) / bump_radial_moment(dim_, 0);
    return mean_[0] * mean_[0] + mean_[1] * mean_[1] + radius_ * radius_ * eu2;
  }
  case Kind::grid:
    return grid_.second_moment() / grid_.mass();
  }
  return 0.0;
}

double InitialDensity::effective_radius() const {
  switch (kind_) {
  case Kind::gaussian: {
    const double tr = cov_[0] + (dim_ == 2 ? cov_[3] : 0.0);
    return std::max(std::abs(mean_[0]), std::abs(mean_[1])) + 8.5 * std::sqrt(tr);
  }
  case Kind::mixture: {
    double r = 0.0;
    for (const auto& c : components_)
      r = std::max(r, std::max(std::abs(c.mean[0]), std::abs(c.mean[1])) + 8.5 * std::sqrt(c.variance));
    return r;
  }
  case Kind::bump:
    return std::max(std::abs(mean_[0]), std::abs(mean_[1])) + radius_;
  case Kind::grid: {
    const GridSpec& g = grid_.grid();
    double r = std::max(std::abs(g.lo[0]), std::abs(g.hi(0)));
    if (dim_ == 2) r = std::max(r, std::max(std::abs(g.lo[1]), std::abs(g.hi(1))));
    return r;
  }
  }
  return 0.0;
}

double InitialDensity::cell_average(const GridSpec& g, int i, int j) const {
  const double x0 = g.lo[0] + i * g.h;
  const double y0 = g.lo[1] + j * g.h;
  const bool separable_gauss = kind_ == Kind::gaussian && (dim_ == 1 || cov_[1] == 0.0);
  if (separable_gauss) {
    double p = interval_mass(x0, x0 + g.h, mean_[0], std::sqrt(cov_[0]));
    if (dim_ == 2) p *= interval_mass(y0, y0 + g.h, mean_[1], std::sqrt(cov_[3]));
    return p / g.cell_volume();
  }
  if (kind_ == Kind::mixture) {
    double p = 0.0;
    for (const auto& c : components_) {
      const double s = std::sqrt(c.variance);
      double q = interval_mass(x0, x0 + g.h, c.mean[0], s);
      if (dim_ == 2) q *= interval_mass(y0, y0 + g.h, c.mean[1], s);
      p += c.weight * q;
    }
    return p / g.cell_volume();
  }
  // Tensor Gauss rule inside the cell.
  double acc = 0.0;
  double x[2];
  for (std::size_t a = 0; a < kGx.size(); ++a) {
    x[0] = x0 + 0.5 * g.h * (1.0 + kGx[a]);
    if (dim_ == 1) {
      acc += 0.5 * kGw[a] * pdf(x);
      continue;
    }
    for (std::size_t b = 0; b < kGx.size(); ++b) {
      x[1] = y0 + 0.5 * g.h * (1.0 + kGx[b]);
      acc += 0.25 * kGw[a] * kGw[b] * pdf(x);
    }
  }
  return acc;
}

DensityField InitialDensity::discretize(const GridSpec& grid) const {
  if (grid.dim != dim_) throw std::invalid_argument("InitialDensity::discretize: dimension mismatch");
  if (kind_ == Kind::grid) {
    DensityField f = grid_.grid().same_as(grid) ? grid_ : grid_.resampled(grid);
    f.normalize();
    return f;
  }
  DensityField f(grid);
  for (int i = 0; i < grid.n[0]; ++i)
    for (int j = 0; j < (dim_ == 2 ? grid.n[1] : 1); ++j) f.values()[grid.index(i, j)] = cell_average(grid, i, j);
  f.normalize();
  return f;
}

std::vector<double> InitialDensity::sample(std::mt19937_64& rng, int n) const {
  if (n < 0) throw std::invalid_argument("InitialDensity::sample: negative count");
  std::vector<double> out(static_cast<std::size_t>(n) * dim_);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (kind_) {
  case Kind::gaussian: {
    const double l00 = std::sqrt(cov_[0]);
    const double l10 = dim_ == 2 ? cov_[2] / l00 : 0.0;
    const double l11 = dim_ == 2 ? std::sqrt(cov_[3] - l10 * l10) : 0.0;
    for (int p = 0; p < n; ++p) {
      const double z0 = normal(rng);
      out[static_cast<std::size_t>(p * dim_)] = mean_[0] + l00 * z0;
      if (dim_ == 2) out[static_cast<std::size_t>(p * dim_ + 1)] = mean_[1] + l10 * z0 + l11 * normal(rng);
    }
    break;
  }
  case Kind::mixture: {
    std::vector<double> cum;
    double acc = 0.0;
    for (const auto& c : components_) cum.push_back(acc += c.weight);
    for (int p = 0; p < n; ++p) {
      const double u = unif(rng) * acc;
      const auto it = std::upper_bound(cum.begin(), cum.end(), u);
      const auto& c = components_[std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), components_.size() - 1)];
      for (int a = 0; a < dim_; ++a) out[static_cast<std::size_t>(p * dim_ + a)] = c.mean[a] + std::sqrt(c.variance) * normal(rng);
    }
    break;
  }
  case Kind::bump: {
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    for (int p = 0; p < n; ++p) {
      for (;;) {
        double u[2] = {box(rng), dim_ == 2 ? box(rng) : 0.0};
        const double r2 = u[0] * u[0] + u[1] * u[1];
        if (r2 >= 1.0) continue;
        // Envelope e^{-1} is the bump's maximum.
        if (unif(rng) <= std::exp(1.0 - 1.0 / (1.0 - r2))) {
          for (int a = 0; a < dim_; ++a) out[static_cast<std::size_t>(p * dim_ + a)] = mean_[a] + radius_ * u[a];
          break;
        }
      }
    }
    break;
  }
  case Kind::grid: {
    const GridSpec& g = grid_.grid();
    std::vector<double> cum(grid_.size());
    double acc = 0.0;
    for (std::size_t c = 0; c < grid_.size(); ++c) cum[c] = acc += grid_[c];
    for (int p = 0; p < n; ++p) {
      const double u = unif(rng) * acc;
      std::size_t c = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
      c = std::min(c, grid_.size() - 1);
      const int i = dim_ == 1 ? static_cast<int>(c) : static_cast<int>(c / static_cast<std::size_t>(g.n[1]));
      const int j = dim_ == 1 ? 0 : static_cast<int>(c % static_cast<std::size_t>(g.n[1]));
      out[static_cast<std::size_t>(p * dim_)] = g.lo[0] + (i + unif(rng)) * g.h;
      if (dim_ == 2) out[static_cast<std::size_t>(p * dim_ + 1)] = g.lo[1] + (j + unif(rng)) * g.h;
    }
    break;
  }
  }
  return out;
}

} // namespace mflab::model
