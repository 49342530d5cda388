#include "mflab/sde/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mflab::sde {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Cell masses of N(x, bw^2) over the cells [first, last] along one axis,
// renormalized to sum to one. Returns the first cell index.
int axis_weights(double x, double bw, double trunc, double lo, double h, int n, std::vector<double>& w) {
  int first = static_cast<int>(std::floor((x - trunc * bw - lo) / h));
  int last = static_cast<int>(std::floor((x + trunc * bw - lo) / h));
  first = std::clamp(first, 0, n - 1);
  last = std::clamp(last, 0, n - 1);
  w.resize(static_cast<std::size_t>(last - first + 1));
  double prev = normal_cdf((lo + first * h - x) / bw);
  double total = 0.0;
  for (int c = first; c <= last; ++c) {
    const double next = normal_cdf((lo + (c + 1) * h - x) / bw);
    w[static_cast<std::size_t>(c - first)] = next - prev;
    total += next - prev;
    prev = next;
  }
  if (total > 0.0)
    for (double& v : w) v /= total;
  return first;
}

double stddev(std::span<const double> p, int d, int axis) {
  const std::size_t n = p.size() / static_cast<std::size_t>(d);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += p[i * d + axis];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (p[i * d + axis] - mean) * (p[i * d + axis] - mean);
  return std::sqrt(var / std::max<double>(1.0, static_cast<double>(n) - 1.0));
}

} // namespace

double silverman_bandwidth(std::span<const double> points, int d) {
  const std::size_t n = points.size() / static_cast<std::size_t>(d);
  if (n < 2) throw std::invalid_argument("silverman_bandwidth: need at least two points");
  if (d == 1) {
    std::vector<double> s(points.begin(), points.end());
    std::sort(s.begin(), s.end());
    auto q = [&](double f) {
      const double pos = f * static_cast<double>(n - 1);
      const auto i = static_cast<std::size_t>(pos);
      const double w = pos - static_cast<double>(i);
      return i + 1 < n ? (1 - w) * s[i] + w * s[i + 1] : s[i];
    };
    const double iqr = q(0.75) - q(0.25);
    const double sd = stddev(points, 1, 0);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  }
  const double sd = 0.5 * (stddev(points, d, 0) + stddev(points, d, 1));
  return sd * std::pow(static_cast<double>(n), -1.0 / 6.0);
}

EmpiricalDensity empirical_density(std::span<const double> points, int d, const spde::GridSpec& grid,
                                   const EmpiricalOptions& opts) {
  if (d != grid.dim) throw std::invalid_argument("empirical_density: dimension mismatch");
  if (points.empty() || points.size() % static_cast<std::size_t>(d) != 0)
    throw std::invalid_argument("empirical_density: empty or ragged point set");
  EmpiricalDensity out;
  out.field = spde::DensityField(grid);
  out.total = points.size() / static_cast<std::size_t>(d);
  auto& v = out.field.values();
  const double weight = 1.0 / (static_cast<double>(out.total) * grid.cell_volume());

  auto inside = [&](const double* p) {
    for (int a = 0; a < d; ++a)
      if (!(p[a] >= grid.lo[a] && p[a] < grid.hi(a))) return false;
    return true;
  };

  if (opts.method == DensityMethod::histogram) {
    for (std::size_t i = 0; i < out.total; ++i) {
      const double* p = &points[i * d];
      if (!inside(p)) {
        ++out.outside;
        continue;
      }
      int idx[2] = {0, 0};
      for (int a = 0; a < d; ++a) idx[a] = std::min(static_cast<int>((p[a] - grid.lo[a]) / grid.h), grid.n[a] - 1);
      v[d == 1 ? static_cast<std::size_t>(idx[0]) : grid.index(idx[0], idx[1])] += weight;
    }
    return out;
  }

  out.bandwidth = opts.bandwidth > 0.0 ? opts.bandwidth : silverman_bandwidth(points, d);
  std::vector<double> wx, wy;
  for (std::size_t i = 0; i < out.total; ++i) {
    const double* p = &points[i * d];
    if (!inside(p)) {
      ++out.outside;
      continue;
    }
    const int fx = axis_weights(p[0], out.bandwidth, opts.truncation, grid.lo[0], grid.h, grid.n[0], wx);
    if (d == 1) {
      for (std::size_t c = 0; c < wx.size(); ++c) v[static_cast<std::size_t>(fx) + c] += wx[c] * weight;
      continue;
    }
    const int fy = axis_weights(p[1], out.bandwidth, opts.truncation, grid.lo[1], grid.h, grid.n[1], wy);
    for (std::size_t a = 0; a < wx.size(); ++a)
      for (std::size_t b = 0; b < wy.size(); ++b)
        v[grid.index(fx + static_cast<int>(a), fy + static_cast<int>(b))] += wx[a] * wy[b] * weight;
  }
  return out;
}

} // namespace mflab::sde
