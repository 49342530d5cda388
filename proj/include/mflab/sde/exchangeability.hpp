#pragma once

#include <cstdint>
#include <span>

#include "mflab/sde/particles.hpp"

namespace mflab::sde {

struct ExchangeabilityReport {
  /// Two-sample KS distance between {X^1_T} and {X^{j_r}_T} across replicates.
  double statistic = 0.0;
  double p_value = 1.0;
  double level = 0.01;
  int replicates = 0;
  int permutations = 0;
  bool pass = true;
};

/// Paired swap-permutation test of exchangeability at the final snapshot.
/// Replicate r contributes the pair (X^1_T, X^{j_r}_T) with j_r != 1 drawn
/// from `seed`; under exchangeability each pair may be swapped freely.
ExchangeabilityReport exchangeability_test(std::span<const ParticleTrajectory> replicates, int permutations,
                                           double level, std::uint64_t seed);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

} // namespace mflab::sde
