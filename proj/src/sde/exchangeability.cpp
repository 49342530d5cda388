#include "mflab/sde/exchangeability.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace mflab::sde {

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

ExchangeabilityReport exchangeability_test(std::span<const ParticleTrajectory> replicates, int permutations,
                                           double level, std::uint64_t seed) {
  if (replicates.size() < 2) throw std::invalid_argument("exchangeability_test: need at least two replicates");
  if (permutations < 1) throw std::invalid_argument("exchangeability_test: permutations must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> first, other;
  for (const auto& tr : replicates) {
    if (tr.N < 2) throw std::invalid_argument("exchangeability_test: need N >= 2");
    std::uniform_int_distribution<int> pick(1, tr.N - 1);
    const int s = tr.snapshots() - 1;
    first.push_back(tr.x(s, 0));
    other.push_back(tr.x(s, pick(rng)));
  }
  ExchangeabilityReport rep;
  rep.level = level;
  rep.replicates = static_cast<int>(replicates.size());
  rep.permutations = permutations;
  rep.statistic = ks_distance(first, other);
  int exceed = 0;
  std::bernoulli_distribution coin(0.5);
  std::vector<double> a(first.size()), b(first.size());
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t r = 0; r < first.size(); ++r) {
      const bool swap = coin(rng);
      a[r] = swap ? other[r] : first[r];
      b[r] = swap ? first[r] : other[r];
    }
    if (ks_distance(a, b) >= rep.statistic - 1e-15) ++exceed;
  }
  rep.p_value = (1.0 + exceed) / (1.0 + permutations);
  rep.pass = rep.p_value >= level;
  return rep;
}

} // namespace mflab::sde
