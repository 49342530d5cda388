#pragma once

#include <stdexcept>
#include <vector>

namespace mflab::harness {

struct RatePoint {
  double N = 0.0;
  double value = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Jackknife standard error of the slope.
  double slope_se = 0.0;
  /// slope +- t_{n-2, 0.975} * slope_se.
  double band_lo = 0.0;
  double band_hi = 0.0;
  int points = 0;
};

/// OLS of log(value) on log(N). Needs >= 3 points with N > 0 and value > 0.
RateFit fit_rate(const std::vector<RatePoint>& points);

} // namespace mflab::harness
