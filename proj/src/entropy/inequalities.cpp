#include "mflab/entropy/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "mflab/spde/liouville.hpp"

namespace mflab::entropy {

CkpReport ckp_check(const spde::DensityField& f, const spde::DensityField& g) {
  CkpReport rep;
  const EntropyValue h = relative_entropy(f, g);
  rep.l1 = l1_distance(f, g);
  rep.entropy = h.value;
  if (h.infinite) {
    rep.vacuous = true;
    rep.margin = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.margin = 2.0 * h.value - rep.l1 * rep.l1;
  return rep;
}

SubadditivityReport subadditivity_check(const spde::DensityField& fN, const spde::DensityField& g, int r, double sym_tol) {
  if (r != 1) throw std::invalid_argument("subadditivity_check: only r = 1 with N = 2 is supported");
  if (fN.dim() != 2 || g.dim() != 1) throw std::invalid_argument("subadditivity_check: need a 2-D fN and a 1-D g");
  SubadditivityReport rep;
  rep.asymmetry = spde::swap_asymmetry(fN);
  if (rep.asymmetry > sym_tol * std::max(1.0, fN.max_value()))
    throw std::invalid_argument("subadditivity_check: fN is not exchangeable (swap asymmetry " + std::to_string(rep.asymmetry) + ")");
  const spde::DensityField gg = spde::tensorize(g, 2);
  if (!gg.grid().same_as(fN.grid())) throw std::invalid_argument("subadditivity_check: grids differ");
  const spde::DensityField m1 = spde::marginal(fN, 1);
  const EntropyValue full = relative_entropy(fN, gg);
  const EntropyValue marg = relative_entropy(m1, g);
  rep.full_entropy = full.value;
  rep.marginal_entropy = marg.value;
  if (full.infinite) {
    rep.margin = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.margin = 0.5 * full.value - marg.value;
  return rep;
}

namespace {

// (k * rho)(z) by quadrature over cell centres of rho.
void convolve_at(const model::KernelSpec& k, const spde::DensityField& rho, const double* z, double* out) {
  const spde::GridSpec& g = rho.grid();
  const int d = g.dim;
  double acc[2] = {0.0, 0.0};
  double y[2], dz[2], v[2];
  for (int i = 0; i < g.n[0]; ++i) {
    y[0] = g.center(0, i);
    for (int j = 0; j < (d == 2 ? g.n[1] : 1); ++j) {
      const double w = d == 1 ? rho[static_cast<std::size_t>(i)] : rho.at(i, j);
      if (w == 0.0) continue;
      if (d == 2) y[1] = g.center(1, j);
      for (int a = 0; a < d; ++a) dz[a] = z[a] - y[a];
      k.eval(dz, v);
      for (int a = 0; a < d; ++a) acc[a] += v[a] * w;
    }
  }
  for (int a = 0; a < d; ++a) out[a] = acc[a] * g.cell_volume();
}

} // namespace

FluctuationEstimate fluctuation_term(std::span<const double> particles, int d, const model::KernelSpec& k,
                                     const spde::DensityField& rho, double delta, int batches) {
  if (!(delta > 0.0)) throw std::invalid_argument("fluctuation_term: delta must be positive");
  if (particles.empty() || particles.size() % static_cast<std::size_t>(d) != 0)
    throw std::invalid_argument("fluctuation_term: empty or ragged particle set");
  if (rho.dim() != d || k.dim() != d) throw std::invalid_argument("fluctuation_term: dimension mismatch");
  const std::size_t N = particles.size() / static_cast<std::size_t>(d);
  FluctuationEstimate est;
  est.batches = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 1)), N));
  if (k.is_zero()) return est;

  std::vector<double> q(N, 0.0);
  double z[2], v[2], kr[2];
  for (std::size_t i = 0; i < N; ++i) {
    double s[2] = {0.0, 0.0};
    for (std::size_t j = 0; j < N; ++j) {
      for (int a = 0; a < d; ++a) z[a] = particles[i * d + a] - particles[j * d + a];
      k.eval(z, v);
      for (int a = 0; a < d; ++a) s[a] += v[a];
    }
    convolve_at(k, rho, &particles[i * d], kr);
    double sq = 0.0;
    for (int a = 0; a < d; ++a) {
      const double diff = s[a] / static_cast<double>(N) - kr[a];
      sq += diff * diff;
    }
    q[i] = sq;
  }
  double mean = 0.0;
  for (double x : q) mean += x;
  mean /= static_cast<double>(N);
  const double scale = static_cast<double>(N) / delta;
  est.per_particle_mean = mean;
  est.estimate = scale * mean;

  // Batch means over contiguous particle blocks.
  const int B = est.batches;
  if (B >= 2) {
    std::vector<double> bm(static_cast<std::size_t>(B), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(B), 0);
    for (std::size_t i = 0; i < N; ++i) {
      const auto b = static_cast<std::size_t>(i * static_cast<std::size_t>(B) / N);
      bm[b] += q[i];
      ++cnt[b];
    }
    double var = 0.0;
    for (int b = 0; b < B; ++b) {
      bm[static_cast<std::size_t>(b)] /= cnt[static_cast<std::size_t>(b)];
      var += (bm[static_cast<std::size_t>(b)] - mean) * (bm[static_cast<std::size_t>(b)] - mean);
    }
    var /= (B - 1);
    est.stderr_ = scale * std::sqrt(var / B);
  }
  return est;
}

CancellationReport cancellation_check(const model::KernelSpec& k, const spde::DensityField& rho,
                                      std::span<const double> probes) {
  if (k.is_zero()) throw std::invalid_argument("cancellation_check: psi is undefined for k = 0");
  const int d = rho.dim();
  if (k.dim() != d) throw std::invalid_argument("cancellation_check: dimension mismatch");
  if (std::abs(rho.mass() - 1.0) > 1e-12) throw std::invalid_argument("cancellation_check: rho must have unit mass");
  if (probes.empty() || probes.size() % static_cast<std::size_t>(d) != 0)
    throw std::invalid_argument("cancellation_check: empty or ragged probes");
  CancellationReport rep;
  rep.psi_bound = 1.0 / (2.0 * std::numbers::e);
  const double scale = 1.0 / (16.0 * std::numbers::e * k.sup_norm());
  const spde::GridSpec& g = rho.grid();
  const double vol = g.cell_volume();
  double kr[2], y[2], dz[2], v[2];
  for (std::size_t p = 0; p < probes.size(); p += static_cast<std::size_t>(d)) {
    const double* z = &probes[p];
    convolve_at(k, rho, z, kr);
    double integral[2] = {0.0, 0.0};
    for (int i = 0; i < g.n[0]; ++i) {
      y[0] = g.center(0, i);
      for (int j = 0; j < (d == 2 ? g.n[1] : 1); ++j) {
        if (d == 2) y[1] = g.center(1, j);
        const double w = d == 1 ? rho[static_cast<std::size_t>(i)] : rho.at(i, j);
        for (int a = 0; a < d; ++a) dz[a] = z[a] - y[a];
        k.eval(dz, v);
        double psi2 = 0.0;
        for (int a = 0; a < d; ++a) {
          const double psi = (v[a] - kr[a]) * scale;
          integral[a] += psi * w * vol;
          psi2 += psi * psi;
        }
        rep.psi_sup = std::max(rep.psi_sup, std::sqrt(psi2));
      }
    }
    double mag = 0.0;
    for (int a = 0; a < d; ++a) mag += integral[a] * integral[a];
    rep.max_integral = std::max(rep.max_integral, std::sqrt(mag));
  }
  return rep;
}

double gaussian_kl(double m1, double v1, double m2, double v2) {
  if (!(v1 > 0.0) || !(v2 > 0.0)) throw std::invalid_argument("gaussian_kl: variances must be positive");
  return 0.5 * (std::log(v2 / v1) + (v1 + (m1 - m2) * (m1 - m2)) / v2 - 1.0);
}

DominanceReport conditional_dominance_check(const GaussianToy& toy) {
  if (toy.b == 0.0 || toy.e == 0.0) throw std::invalid_argument("conditional_dominance_check: b and e must be nonzero");
  DominanceReport rep;
  rep.unconditional = gaussian_kl(toy.mx, toy.a * toy.a + toy.b * toy.b, toy.my, toy.c * toy.c + toy.e * toy.e);
  using G = boost::math::quadrature::gauss<double, 30>;
  const double L = 12.0;
  const int panels = 48;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = -L + 2.0 * L * p / panels;
    const double hi = lo + 2.0 * L / panels;
    acc += G::integrate(
        [&](double g) {
          const double phi = std::exp(-0.5 * g * g) / std::sqrt(2.0 * std::numbers::pi);
          return phi * gaussian_kl(toy.mx + toy.a * g, toy.b * toy.b, toy.my + toy.c * g, toy.e * toy.e);
        },
        lo, hi);
  }
  rep.conditional = acc;
  rep.margin = rep.conditional - rep.unconditional;
  return rep;
}

} // namespace mflab::entropy
