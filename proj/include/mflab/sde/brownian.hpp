#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mflab::sde {

/// Uniform time grid t_j = j * dt on [0, T].
struct TimeGrid {
  double T = 1.0;
  int steps = 1;

  TimeGrid() = default;
  /// Throws when steps < 1 or T <= 0.
  TimeGrid(double horizon, int n);

  double dt() const { return T / steps; }
  double t(int j) const { return j * dt(); }
};

/// Common Brownian path W on a time grid, m_nu components per node.
struct CommonPath {
  TimeGrid grid;
  int m_nu = 1;
  std::uint64_t seed = 0;
  std::vector<double> W; // (steps + 1) * m_nu

  const double* at(int j) const { return &W[static_cast<std::size_t>(j) * m_nu]; }
  double increment(int j, int l) const { return W[static_cast<std::size_t>(j + 1) * m_nu + l] - W[static_cast<std::size_t>(j) * m_nu + l]; }
  /// Hash of the grid and the raw path bytes; identifies the conditioning path.
  std::uint64_t fingerprint() const;
  /// max_j |W_j| (Euclidean).
  double sup_norm() const;
};

/// One common path plus N idiosyncratic paths sharing a time grid.
struct BrownianBundle {
  TimeGrid grid;
  int N = 0;
  int m = 1;
  std::uint64_t master_seed = 0;
  CommonPath common;
  std::vector<double> B; // [i][j][l], N * (steps + 1) * m
  /// Seed of stream 0 (W) followed by the N idiosyncratic streams.
  std::vector<std::uint64_t> stream_seeds;

  const double* B_at(int i, int j) const {
    return &B[(static_cast<std::size_t>(i) * (grid.steps + 1) + j) * m];
  }
  double dB(int i, int j, int l) const { return B_at(i, j + 1)[l] - B_at(i, j)[l]; }
};

/// Stream seeds: W uses derive_seed(master, "W"), B^i uses derive_seed(master, "B", i).
BrownianBundle make_bundle(const TimeGrid& grid, int N, int m, int m_nu, std::uint64_t master_seed);
/// The W stream of make_bundle alone.
CommonPath make_common_path(const TimeGrid& grid, int m_nu, std::uint64_t master_seed);

} // namespace mflab::sde
