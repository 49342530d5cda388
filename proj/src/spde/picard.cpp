#include "mflab/spde/picard.hpp"

#include <cmath>
#include <sstream>

#include "mflab/spde/convolution.hpp"

namespace mflab::spde {
namespace {

double sup_l2_difference(const SpdeSolution& a, const SpdeSolution& b) {
  double worst = 0.0;
  for (std::size_t s = 0; s < a.fields.size(); ++s) {
    const auto& fa = a.fields[s].values();
    const auto& fb = b.fields[s].values();
    double acc = 0.0;
    for (std::size_t c = 0; c < fa.size(); ++c) acc += (fa[c] - fb[c]) * (fa[c] - fb[c]);
    worst = std::max(worst, std::sqrt(acc * a.fields[s].grid().cell_volume()));
  }
  return worst;
}

} // namespace

PicardResult picard_solve(const model::KernelSpec& k, const model::CoefficientSet& coeffs, const DensityField& rho0,
                          const sde::CommonPath& W, const PicardOptions& opts) {
  if (k.dim() != rho0.dim()) throw std::invalid_argument("picard_solve: kernel and density dimensions differ");
  if (opts.max_iter < 1) throw std::invalid_argument("picard_solve: max_iter must be >= 1");
  FpkOptions fpk = opts.fpk;
  fpk.record_stride = 1;

  PicardResult res;
  res.tol = opts.tol < 0.0 ? 1e-8 * rho0.l2_norm() : opts.tol;
  const Convolver conv(k, rho0.grid());

  // rho^0: rho_0 carried along the same moving frame so grids line up.
  SpdeSolution prev;
  prev.time = W.grid;
  prev.w_fingerprint = W.fingerprint();
  {
    SpdeSolution frames = solve_linear_fpk(nullptr, coeffs, rho0, W, fpk);
    for (const auto& f : frames.fields) prev.fields.emplace_back(f.grid(), rho0.values());
  }

  std::vector<double> kr;
  for (int n = 1; n <= opts.max_iter; ++n) {
    const SpdeSolution* source = &prev;
    auto velocity = [&](int step, const DensityField& rho, std::vector<double>& v) {
      if (k.is_zero()) return;
      const DensityField& src = source->fields[static_cast<std::size_t>(step)];
      if (!src.grid().same_as(rho.grid(), 1e-9))
        throw std::logic_error("picard_solve: iterates are not on a common grid");
      conv.apply(src, kr);
      v.resize(kr.size());
      for (std::size_t c = 0; c < kr.size(); ++c) v[c] = -kr[c];
    };
    SpdeSolution next = solve_linear_fpk(velocity, coeffs, rho0, W, fpk);
    res.increments.push_back(sup_l2_difference(next, prev));
    prev = std::move(next);
    if (res.increments.back() < res.tol) {
      res.iterations = n - 1 > 0 ? n - 1 : 1;
      res.solution = std::move(prev);
      return res;
    }
  }
  std::ostringstream os;
  os << "Picard iteration did not reach tol " << res.tol << " in " << opts.max_iter << " iterations; increments:";
  for (double x : res.increments) os << ' ' << x;
  throw PicardDivergence(os.str(), res.increments);
}

} // namespace mflab::spde
