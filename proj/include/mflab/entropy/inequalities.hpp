#pragma once

#include <span>

#include "mflab/entropy/entropy.hpp"
#include "mflab/model/kernel.hpp"
#include "mflab/spde/density_field.hpp"

namespace mflab::entropy {

struct CkpReport {
  /// 2 H(f|g) - ||f - g||_1^2.
  double margin = 0.0;
  double entropy = 0.0;
  double l1 = 0.0;
  /// H was infinite, so the inequality holds trivially.
  bool vacuous = false;
};

CkpReport ckp_check(const spde::DensityField& f, const spde::DensityField& g);

struct SubadditivityReport {
  /// (r/N) H(fN | g (x) g) - H(marginal_r fN | g^{(x) r}), here N = 2, r = 1.
  double margin = 0.0;
  double full_entropy = 0.0;
  double marginal_entropy = 0.0;
  double asymmetry = 0.0;
};

/// Throws std::invalid_argument when fN is not swap symmetric within sym_tol
/// (relative to max fN).
SubadditivityReport subadditivity_check(const spde::DensityField& fN, const spde::DensityField& g, int r = 1,
                                        double sym_tol = 1e-8);

struct FluctuationEstimate {
  /// (N / delta) * mean_i |N^{-1} sum_j k(x_i - x_j) - (k*rho)(x_i)|^2.
  double estimate = 0.0;
  /// mean_i |...|^2 without the N / delta factor.
  double per_particle_mean = 0.0;
  /// Batch-means standard error of `estimate`.
  double stderr_ = 0.0;
  int batches = 0;
};

/// k * rho is evaluated at the particle positions by quadrature over the
/// cells of rho (no interpolation).
FluctuationEstimate fluctuation_term(std::span<const double> particles, int d, const model::KernelSpec& k,
                                     const spde::DensityField& rho, double delta, int batches = 16);

struct CancellationReport {
  /// max_z |sum_y psi(z, y) rho(y) h^d|.
  double max_integral = 0.0;
  /// max over probes and cells of |psi|.
  double psi_sup = 0.0;
  /// 1 / (2e).
  double psi_bound = 0.0;
};

/// psi(z, y) = (k(z - y) - (k*rho)(z)) / (16 e ||k||_inf). Throws when
/// ||k||_inf = 0 or rho is not unit mass within 1e-12.
CancellationReport cancellation_check(const model::KernelSpec& k, const spde::DensityField& rho,
                                      std::span<const double> probes);

/// X = a G + b xi_1 + mx, Y = c G + e xi_2 + my, G, xi_1, xi_2 iid N(0,1).
struct GaussianToy {
  double a = 1.0, b = 1.0, c = 1.0, e = 1.0;
  double mx = 0.0, my = 0.0;
};

struct DominanceReport {
  /// H(L_X | L_Y).
  double unconditional = 0.0;
  /// E_G H(L_{X|G} | L_{Y|G}).
  double conditional = 0.0;
  /// conditional - unconditional.
  double margin = 0.0;
};

/// KL(N(m1, v1) | N(m2, v2)).
double gaussian_kl(double m1, double v1, double m2, double v2);

/// Closed-form Gaussian KL, conditional part integrated over G by
/// composite Gauss-Legendre quadrature against the normal density.
DominanceReport conditional_dominance_check(const GaussianToy& toy);

} // namespace mflab::entropy
