#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mflab/model/coefficients.hpp"
#include "mflab/model/initial_density.hpp"
#include "mflab/model/kernel.hpp"
#include "mflab/sde/brownian.hpp"

namespace mflab::spde {
struct SpdeSolution;
}

namespace mflab::sde {

/// Positions of N particles in R^d at every `stride`-th time step.
struct ParticleTrajectory {
  int N = 0;
  int d = 1;
  int steps = 0;
  int stride = 1;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t w_fingerprint = 0;
  std::vector<double> X; // snapshots * N * d

  int snapshots() const { return steps / stride + 1; }
  int step_of(int s) const { return s * stride; }
  double time(int s) const { return step_of(s) * dt; }
  std::span<const double> positions(int s) const {
    return {X.data() + static_cast<std::size_t>(s) * N * d, static_cast<std::size_t>(N) * d};
  }
  double x(int s, int i, int a = 0) const { return X[(static_cast<std::size_t>(s) * N + i) * d + a]; }
};

struct SimulationOptions {
  /// Keep every `stride`-th step; must divide the step count.
  int stride = 1;
  /// Verify |drift| <= sup_norm at every step.
  bool check_drift = false;
};

/// Initial positions drawn from rho0 with the bundle's "X0" stream.
std::vector<double> sample_initial(const model::InitialDensity& rho0, const BrownianBundle& bundle);

/// out[i*d + a] = (1/N) sum_l k(x_i - x_l)_a, self term included.
void pairwise_drift(const model::KernelSpec& k, std::span<const double> x, int d, std::vector<double>& out);

/// Euler-Maruyama for the interacting particle system.
ParticleTrajectory simulate_particles(const model::KernelSpec& k, const model::CoefficientSet& coeffs,
                                      std::span<const double> x0, const BrownianBundle& bundle,
                                      const SimulationOptions& opts = {});
ParticleTrajectory simulate_particles(const model::KernelSpec& k, const model::CoefficientSet& coeffs,
                                      const model::InitialDensity& rho0, const BrownianBundle& bundle,
                                      const SimulationOptions& opts = {});

/// Conditional McKean-Vlasov particles driven by k * rho_t from `rho_path`,
/// which must have been solved on the bundle's common path.
ParticleTrajectory simulate_mckean(const model::KernelSpec& k, const model::CoefficientSet& coeffs,
                                   const spde::SpdeSolution& rho_path, std::span<const double> x0,
                                   const BrownianBundle& bundle, const SimulationOptions& opts = {});

} // namespace mflab::sde
