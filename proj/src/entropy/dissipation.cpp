#include "mflab/entropy/dissipation.hpp"

#include <cmath>
#include <stdexcept>

#include "mflab/spde/convolution.hpp"

namespace mflab::entropy {

DissipationReport dissipation_terms(const spde::DensityField& rhoN, const spde::DensityField& rho,
                                    const model::KernelSpec& k, double delta, double floor) {
  if (rhoN.dim() != 2 || rho.dim() != 1 || k.dim() != 1)
    throw std::invalid_argument("dissipation_terms: need a 2-D rhoN, 1-D rho and a 1-D kernel");
  if (!(delta > 0.0)) throw std::invalid_argument("dissipation_terms: delta must be positive");
  const spde::GridSpec& g = rhoN.grid();
  const spde::GridSpec& g1 = rho.grid();
  if (g.n[0] != g1.n[0] || g.n[1] != g1.n[0] || std::abs(g.h - g1.h) > 1e-12 * g.h ||
      std::abs(g.lo[0] - g1.lo[0]) > 1e-9 || std::abs(g.lo[1] - g1.lo[0]) > 1e-9)
    throw std::invalid_argument("dissipation_terms: rhoN must live on the square of rho's grid");
  const int n = g.n[0];
  const double h = g.h;
  const double vol = g.cell_volume();

  auto logratio = [&](int i, int j) {
    const double f = rhoN.at(i, j);
    const double p = rho[static_cast<std::size_t>(i)] * rho[static_cast<std::size_t>(j)];
    if (f <= floor || p <= floor) return std::nan("");
    return std::log(f / p);
  };

  DissipationReport rep;
  double fisher = 0.0;
  for (int i = 1; i + 1 < n; ++i)
    for (int j = 1; j + 1 < n; ++j) {
      const double f = rhoN.at(i, j);
      if (f <= floor) continue;
      const double dx = (logratio(i + 1, j) - logratio(i - 1, j)) / (2.0 * h);
      const double dy = (logratio(i, j + 1) - logratio(i, j - 1)) / (2.0 * h);
      if (std::isfinite(dx)) fisher += f * dx * dx * vol;
      if (std::isfinite(dy)) fisher += f * dy * dy * vol;
    }
  rep.fisher_term = 0.25 * delta * fisher;

  if (!k.is_zero()) {
    std::vector<double> kr;
    spde::Convolver(k, g1).apply(rho, kr);
    const double k0 = k.eval1(0.0);
    double fl = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double f = rhoN.at(i, j);
        if (f == 0.0) continue;
        const double z = g1.center(0, i) - g1.center(0, j);
        const double d1 = 0.5 * (k0 + k.eval1(z)) - kr[static_cast<std::size_t>(i)];
        const double d2 = 0.5 * (k0 + k.eval1(-z)) - kr[static_cast<std::size_t>(j)];
        fl += f * (d1 * d1 + d2 * d2) * vol;
      }
    rep.fluctuation_term = fl / delta;
  }
  return rep;
}

} // namespace mflab::entropy
