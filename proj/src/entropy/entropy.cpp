#include "mflab/entropy/entropy.hpp"

#include <cmath>
#include <limits>

namespace mflab::entropy {
namespace {

// (1 + r) log(1 + r) - r, by its alternating series near r = 0.
double entropy_density(double r) {
  if (std::abs(r) >= 0.1) return (1.0 + r) * std::log1p(r) - r;
  double term = r * r;
  double s = 0.0;
  for (int n = 2; n < 24; ++n) {
    s += term / (n * (n - 1.0));
    term *= -r;
  }
  return s;
}

} // namespace

EntropyValue relative_entropy(const spde::DensityField& f, const spde::DensityField& g, double floor, double tol) {
  spde::require_same_grid(f, g, "relative_entropy");
  const double vol = f.grid().cell_volume();
  EntropyValue out;
  double acc = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) {
    const double fc = std::max(f[c], 0.0);
    const double gc = std::max(g[c], 0.0);
    if (gc <= floor) out.mass_on_small_g += fc * vol;
    const double gl = std::max(gc, floor);
    if (fc == 0.0) acc += gc;
    else if (gc > floor && std::abs(fc - gc) < 0.1 * gc) acc += gc * entropy_density((fc - gc) / gc);
    else acc += fc * (std::log(fc) - std::log(gl)) - fc + gc;
  }
  if (out.mass_on_small_g > tol) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = std::max(0.0, acc * vol);
  return out;
}

double l1_distance(const spde::DensityField& f, const spde::DensityField& g) {
  spde::require_same_grid(f, g, "l1_distance");
  double acc = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) acc += std::abs(f[c] - g[c]);
  return acc * f.grid().cell_volume();
}

} // namespace mflab::entropy
