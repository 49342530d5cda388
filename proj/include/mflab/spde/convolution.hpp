#pragma once

#include <memory>
#include <vector>

#include "mflab/model/kernel.hpp"
#include "mflab/spde/density_field.hpp"

namespace mflab::spde {

/// Discrete (k * rho)(x_c) = sum_c' k(x_c - x_c') rho_c' h^d at cell centres.
///
/// The kernel is sampled once on cell-centre offsets, so a Convolver built for
/// one grid serves every translate of it. Grids with at least
/// `fft_threshold` cells use FFTW; smaller grids use direct summation.
class Convolver {
public:
  Convolver(const model::KernelSpec& k, const GridSpec& grid, std::size_t fft_threshold = 1024);
  ~Convolver();
  Convolver(Convolver&&) noexcept;
  Convolver& operator=(Convolver&&) noexcept;

  /// out has dim * size entries, component-major: out[a * size + c].
  void apply(const DensityField& rho, std::vector<double>& out) const;
  bool uses_fft() const;
  int dim() const { return dim_; }

private:
  struct Fft;
  int dim_ = 1;
  GridSpec grid_;
  bool zero_ = false;
  // Direct path: kernel at offsets, component-major over (2n0-1) x (2n1-1).
  std::vector<double> offsets_;
  std::unique_ptr<Fft> fft_;
};

/// One-shot convenience wrapper.
std::vector<double> convolve(const model::KernelSpec& k, const DensityField& rho);

} // namespace mflab::spde
