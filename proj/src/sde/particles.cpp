#include "mflab/sde/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "mflab/sde/seeds.hpp"
#include "mflab/spde/convolution.hpp"
#include "mflab/spde/fpk.hpp"

namespace mflab::sde {
namespace {

void check_inputs(const model::CoefficientSet& coeffs, std::span<const double> x0, const BrownianBundle& bundle,
                  const SimulationOptions& opts) {
  coeffs.check();
  if (coeffs.m() != bundle.m || coeffs.m_nu() != bundle.common.m_nu)
    throw std::invalid_argument("simulation: bundle dimensions do not match the coefficients");
  if (x0.size() != static_cast<std::size_t>(bundle.N) * coeffs.d())
    throw std::invalid_argument("simulation: initial positions do not match N * d");
  if (opts.stride < 1 || bundle.grid.steps % opts.stride != 0)
    throw std::invalid_argument("simulation: stride must divide the step count");
  if (bundle.common.m_nu > 8) throw std::invalid_argument("simulation: at most 8 common-noise components");
}

ParticleTrajectory make_trajectory(const model::CoefficientSet& coeffs, std::span<const double> x0,
                                   const BrownianBundle& bundle, const SimulationOptions& opts) {
  ParticleTrajectory tr;
  tr.N = bundle.N;
  tr.d = coeffs.d();
  tr.steps = bundle.grid.steps;
  tr.stride = opts.stride;
  tr.dt = bundle.grid.dt();
  tr.seed = bundle.master_seed;
  tr.w_fingerprint = bundle.common.fingerprint();
  tr.X.reserve(static_cast<std::size_t>(tr.snapshots()) * tr.N * tr.d);
  tr.X.assign(x0.begin(), x0.end());
  return tr;
}

// Shared Euler-Maruyama loop; `drift(j, x, out)` fills (1/N) sum or k*rho values.
template <class Drift>
void euler_maruyama(ParticleTrajectory& tr, const model::CoefficientSet& coeffs, const BrownianBundle& bundle,
                    const SimulationOptions& opts, double drift_bound, Drift&& drift) {
  const int N = tr.N;
  const int d = tr.d;
  const int m = coeffs.m();
  const int mn = coeffs.m_nu();
  const double dt = tr.dt;
  std::vector<double> x(tr.X.begin(), tr.X.end());
  std::vector<double> b;
  std::vector<double> s_buf(static_cast<std::size_t>(d * m)), n_buf(static_cast<std::size_t>(d * mn));
  const double zero[2] = {0.0, 0.0};
  if (coeffs.sigma.constant) coeffs.sigma.eval(0.0, zero, s_buf.data());
  if (coeffs.nu.constant) coeffs.nu.eval(0.0, zero, n_buf.data());

  for (int j = 0; j < tr.steps; ++j) {
    const double t = j * dt;
    const bool has_drift = drift(j, x, b);
    if (has_drift && opts.check_drift) {
      for (int i = 0; i < N; ++i) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += b[static_cast<std::size_t>(i * d + a)] * b[static_cast<std::size_t>(i * d + a)];
        if (std::sqrt(s) > drift_bound * (1.0 + 1e-12) + 1e-300) {
          std::ostringstream os;
          os << "drift bound violated at step " << j << ", particle " << i;
          throw std::logic_error(os.str());
        }
      }
    }
    const double* dW = nullptr;
    double dw_buf[8];
    for (int l = 0; l < mn; ++l) dw_buf[l] = bundle.common.increment(j, l);
    dW = dw_buf;
    for (int i = 0; i < N; ++i) {
      double* xi = &x[static_cast<std::size_t>(i * d)];
      if (!coeffs.sigma.constant) coeffs.sigma.eval(t, xi, s_buf.data());
      if (!coeffs.nu.constant) coeffs.nu.eval(t, xi, n_buf.data());
      double inc[2] = {0.0, 0.0};
      for (int a = 0; a < d; ++a) {
        double s = 0.0;
        for (int l = 0; l < m; ++l) s += s_buf[static_cast<std::size_t>(a * m + l)] * bundle.dB(i, j, l);
        for (int l = 0; l < mn; ++l) s += n_buf[static_cast<std::size_t>(a * mn + l)] * dW[l];
        inc[a] = s;
      }
      for (int a = 0; a < d; ++a) {
        double next = xi[a];
        if (has_drift) next -= b[static_cast<std::size_t>(i * d + a)] * dt;
        next += inc[a];
        if (!std::isfinite(next)) {
          std::ostringstream os;
          os << "non-finite state at step " << j + 1 << ", particle " << i;
          throw std::runtime_error(os.str());
        }
        xi[a] = next;
      }
    }
    if ((j + 1) % tr.stride == 0) tr.X.insert(tr.X.end(), x.begin(), x.end());
  }
}

} // namespace

std::vector<double> sample_initial(const model::InitialDensity& rho0, const BrownianBundle& bundle) {
  std::mt19937_64 rng(derive_seed(bundle.master_seed, "X0"));
  return rho0.sample(rng, bundle.N);
}

void pairwise_drift(const model::KernelSpec& k, std::span<const double> x, int d, std::vector<double>& out) {
  const std::size_t N = x.size() / static_cast<std::size_t>(d);
  out.assign(x.size(), 0.0);
  if (k.is_zero() || N == 0) return;
  const double inv = 1.0 / static_cast<double>(N);

  if (d == 1) {
    const double k0 = k.eval1(0.0);
    if (k.is_odd()) {
      // Antisymmetry halves the work; a finite support lets a sorted sweep stop early.
      std::vector<std::size_t> order(N);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b] || (x[a] == x[b] && a < b); });
      std::vector<double> xs(N), acc(N, 0.0);
      for (std::size_t p = 0; p < N; ++p) xs[p] = x[order[p]];
      const double R = k.support_radius().value_or(std::numeric_limits<double>::infinity());
      for (std::size_t p = 0; p < N; ++p) {
        const double xp = xs[p];
        double sp = 0.0;
        for (std::size_t q = p + 1; q < N; ++q) {
          const double z = xp - xs[q];
          if (-z >= R) break;
          const double f = k.eval1(z);
          sp += f;
          acc[q] -= f;
        }
        acc[p] += sp;
      }
      for (std::size_t p = 0; p < N; ++p) out[order[p]] = (acc[p] + k0) * inv;
      return;
    }
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (std::size_t l = 0; l < N; ++l) s += k.eval1(x[i] - x[l]);
      out[i] = s * inv;
    }
    return;
  }

  double z[2], v[2];
  for (std::size_t i = 0; i < N; ++i) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t l = 0; l < N; ++l) {
      z[0] = x[2 * i] - x[2 * l];
      z[1] = x[2 * i + 1] - x[2 * l + 1];
      k.eval(z, v);
      s0 += v[0];
      s1 += v[1];
    }
    out[2 * i] = s0 * inv;
    out[2 * i + 1] = s1 * inv;
  }
}

ParticleTrajectory simulate_particles(const model::KernelSpec& k, const model::CoefficientSet& coeffs,
                                      std::span<const double> x0, const BrownianBundle& bundle,
                                      const SimulationOptions& opts) {
  check_inputs(coeffs, x0, bundle, opts);
  if (k.dim() != coeffs.d()) throw std::invalid_argument("simulate_particles: kernel dimension differs from d");
  ParticleTrajectory tr = make_trajectory(coeffs, x0, bundle, opts);
  euler_maruyama(tr, coeffs, bundle, opts, k.sup_norm(), [&](int, const std::vector<double>& x, std::vector<double>& b) {
    if (k.is_zero()) return false;
    pairwise_drift(k, x, tr.d, b);
    return true;
  });
  return tr;
}

ParticleTrajectory simulate_particles(const model::KernelSpec& k, const model::CoefficientSet& coeffs,
                                      const model::InitialDensity& rho0, const BrownianBundle& bundle,
                                      const SimulationOptions& opts) {
  const auto x0 = sample_initial(rho0, bundle);
  return simulate_particles(k, coeffs, x0, bundle, opts);
}

ParticleTrajectory simulate_mckean(const model::KernelSpec& k, const model::CoefficientSet& coeffs,
                                   const spde::SpdeSolution& rho_path, std::span<const double> x0,
                                   const BrownianBundle& bundle, const SimulationOptions& opts) {
  check_inputs(coeffs, x0, bundle, opts);
  if (rho_path.w_fingerprint != bundle.common.fingerprint())
    throw std::invalid_argument("simulate_mckean: the density path was solved on a different common-noise path");
  if (rho_path.stride != 1 || static_cast<int>(rho_path.fields.size()) != bundle.grid.steps + 1)
    throw std::invalid_argument("simulate_mckean: the density path must record every step");
  ParticleTrajectory tr = make_trajectory(coeffs, x0, bundle, opts);
  if (k.is_zero()) {
    euler_maruyama(tr, coeffs, bundle, opts, 0.0, [](int, const std::vector<double>&, std::vector<double>&) { return false; });
    return tr;
  }
  const spde::Convolver conv(k, rho_path.fields.front().grid());
  std::vector<double> kr;
  const int d = tr.d;
  euler_maruyama(tr, coeffs, bundle, opts, k.sup_norm(), [&](int j, const std::vector<double>& x, std::vector<double>& b) {
    const spde::DensityField& rho = rho_path.fields[static_cast<std::size_t>(j)];
    conv.apply(rho, kr);
    const std::size_t size = rho.size();
    b.assign(x.size(), 0.0);
    for (int a = 0; a < d; ++a) {
      const spde::DensityField comp(rho.grid(), std::vector<double>(kr.begin() + static_cast<std::ptrdiff_t>(a * size),
                                                                    kr.begin() + static_cast<std::ptrdiff_t>((a + 1) * size)));
      for (std::size_t i = 0; i < x.size() / static_cast<std::size_t>(d); ++i)
        b[i * d + a] = comp.interpolate(&x[i * d]);
    }
    return true;
  });
  return tr;
}

} // namespace mflab::sde
