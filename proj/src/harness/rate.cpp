#include "mflab/harness/rate.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/students_t.hpp>

namespace mflab::harness {
namespace {

struct Line {
  double slope;
  double intercept;
};

Line ols(const std::vector<double>& x, const std::vector<double>& y, std::size_t skip) {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i == skip) continue;
    sx += x[i];
    sy += y[i];
    ++n;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i == skip) continue;
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_rate: N values must not all coincide");
  const double b = sxy / sxx;
  return {b, my - b * mx};
}

} // namespace

RateFit fit_rate(const std::vector<RatePoint>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  std::vector<double> x, y;
  for (const auto& p : points) {
    if (!(p.N > 0.0) || !std::isfinite(p.N)) throw std::invalid_argument("fit_rate: N must be positive");
    if (!(p.value > 0.0) || !std::isfinite(p.value))
      throw std::invalid_argument("fit_rate: nonpositive value " + std::to_string(p.value));
    x.push_back(std::log(p.N));
    y.push_back(std::log(p.value));
  }
  const std::size_t n = x.size();
  const Line full = ols(x, y, n);
  RateFit fit;
  fit.slope = full.slope;
  fit.intercept = full.intercept;
  fit.points = static_cast<int>(n);

  // leave-one-out; with 3 points each subfit still has 2
  std::vector<double> loo(n);
  double mean = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    try {
      loo[i] = ols(x, y, i).slope;
    } catch (const std::invalid_argument&) {
      ok = false;
      break;
    }
    mean += loo[i] / n;
  }
  double var = 0.0;
  if (ok)
    for (double s : loo) var += (s - mean) * (s - mean);
  fit.slope_se = ok ? std::sqrt((n - 1.0) / n * var) : INFINITY;
  const double df = n > 2 ? n - 2.0 : 1.0;
  const double q = boost::math::quantile(boost::math::students_t(df), 0.975);
  fit.band_lo = fit.slope - q * fit.slope_se;
  fit.band_hi = fit.slope + q * fit.slope_se;
  return fit;
}

} // namespace mflab::harness
