#include "mflab/sde/brownian.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <string_view>

#include "mflab/sde/seeds.hpp"

namespace mflab::sde {
namespace {

void fill_path(double* out, int steps, int dim, double dt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = std::sqrt(dt);
  for (int l = 0; l < dim; ++l) out[l] = 0.0;
  for (int j = 1; j <= steps; ++j)
    for (int l = 0; l < dim; ++l)
      out[static_cast<std::size_t>(j) * dim + l] = out[static_cast<std::size_t>(j - 1) * dim + l] + s * normal(rng);
}

} // namespace

TimeGrid::TimeGrid(double horizon, int n) : T(horizon), steps(n) {
  if (n < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: T must be positive");
}

std::uint64_t CommonPath::fingerprint() const {
  std::uint64_t h = fnv1a(std::string_view(reinterpret_cast<const char*>(&grid.T), sizeof(double)));
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(&grid.steps), sizeof(int)), h);
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(&m_nu), sizeof(int)), h);
  return fnv1a(std::string_view(reinterpret_cast<const char*>(W.data()), W.size() * sizeof(double)), h);
}

double CommonPath::sup_norm() const {
  double best = 0.0;
  for (int j = 0; j <= grid.steps; ++j) {
    double s = 0.0;
    for (int l = 0; l < m_nu; ++l) s += at(j)[l] * at(j)[l];
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

CommonPath make_common_path(const TimeGrid& grid, int m_nu, std::uint64_t master_seed) {
  if (grid.steps < 1) throw std::invalid_argument("make_common_path: steps must be >= 1");
  if (m_nu < 1) throw std::invalid_argument("make_common_path: m_nu must be >= 1");
  CommonPath w;
  w.grid = grid;
  w.m_nu = m_nu;
  w.seed = derive_seed(master_seed, "W");
  w.W.assign(static_cast<std::size_t>(grid.steps + 1) * m_nu, 0.0);
  fill_path(w.W.data(), grid.steps, m_nu, grid.dt(), w.seed);
  return w;
}

BrownianBundle make_bundle(const TimeGrid& grid, int N, int m, int m_nu, std::uint64_t master_seed) {
  if (N < 1) throw std::invalid_argument("make_bundle: N must be >= 1");
  if (m < 1) throw std::invalid_argument("make_bundle: m must be >= 1");
  BrownianBundle b;
  b.grid = grid;
  b.N = N;
  b.m = m;
  b.master_seed = master_seed;
  b.common = make_common_path(grid, m_nu, master_seed);
  b.stream_seeds.push_back(b.common.seed);
  b.B.assign(static_cast<std::size_t>(N) * (grid.steps + 1) * m, 0.0);
  for (int i = 0; i < N; ++i) {
    const std::uint64_t s = derive_seed(master_seed, "B", static_cast<std::uint64_t>(i));
    b.stream_seeds.push_back(s);
    fill_path(&b.B[static_cast<std::size_t>(i) * (grid.steps + 1) * m], grid.steps, m, grid.dt(), s);
  }
  return b;
}

} // namespace mflab::sde
