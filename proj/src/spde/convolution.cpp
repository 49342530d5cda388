#include "mflab/spde/convolution.hpp"

#include <complex>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace mflab::spde {
namespace {

// FFTW's planner is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

} // namespace

struct Convolver::Fft {
  int m0 = 0, m1 = 1;
  std::size_t real_size = 0, spec_size = 0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<std::vector<std::complex<double>>> kernel_hat; // per component

  ~Fft() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

Convolver::Convolver(const model::KernelSpec& k, const GridSpec& grid, std::size_t fft_threshold)
    : dim_(grid.dim), grid_(grid), zero_(k.is_zero()) {
  if (k.dim() != grid.dim) throw std::invalid_argument("Convolver: kernel and grid dimensions differ");
  if (zero_) return;
  const int n0 = grid.n[0];
  const int n1 = grid.dim == 2 ? grid.n[1] : 1;
  const double h = grid.h;
  const double vol = grid.cell_volume();
  const int w0 = 2 * n0 - 1;
  const int w1 = grid.dim == 2 ? 2 * n1 - 1 : 1;

  // Kernel at offsets (p, q) in [-(n0-1), n0-1] x [-(n1-1), n1-1], pre-scaled by h^d.
  offsets_.assign(static_cast<std::size_t>(dim_) * w0 * w1, 0.0);
  const std::size_t plane = static_cast<std::size_t>(w0) * w1;
  double z[2] = {0.0, 0.0};
  double v[2] = {0.0, 0.0};
  for (int p = 0; p < w0; ++p) {
    z[0] = (p - (n0 - 1)) * h;
    for (int q = 0; q < w1; ++q) {
      z[1] = (q - (n1 - 1)) * h;
      k.eval(z, v);
      for (int a = 0; a < dim_; ++a) offsets_[a * plane + static_cast<std::size_t>(p) * w1 + q] = v[a] * vol;
    }
  }
  if (grid.size() < fft_threshold) return;

  fft_ = std::make_unique<Fft>();
  Fft& f = *fft_;
  f.m0 = 2 * n0;
  f.m1 = grid.dim == 2 ? 2 * n1 : 1;
  f.real_size = static_cast<std::size_t>(f.m0) * f.m1;
  f.spec_size = grid.dim == 2 ? static_cast<std::size_t>(f.m0) * (f.m1 / 2 + 1) : static_cast<std::size_t>(f.m0 / 2 + 1);
  std::vector<double> in(f.real_size, 0.0);
  std::vector<std::complex<double>> out(f.spec_size);
  {
    std::lock_guard lock(planner_mutex());
    auto* cin = reinterpret_cast<fftw_complex*>(out.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (grid.dim == 1) {
      f.forward = fftw_plan_dft_r2c_1d(f.m0, in.data(), cin, flags);
      f.backward = fftw_plan_dft_c2r_1d(f.m0, cin, in.data(), flags);
    } else {
      f.forward = fftw_plan_dft_r2c_2d(f.m0, f.m1, in.data(), cin, flags);
      f.backward = fftw_plan_dft_c2r_2d(f.m0, f.m1, cin, in.data(), flags);
    }
  }
  if (!f.forward || !f.backward) throw std::runtime_error("Convolver: FFTW planning failed");

  // Circular layout: offset p sits at index p mod m.
  for (int a = 0; a < dim_; ++a) {
    std::fill(in.begin(), in.end(), 0.0);
    for (int p = 0; p < w0; ++p) {
      const int pp = (p - (n0 - 1) + f.m0) % f.m0;
      for (int q = 0; q < w1; ++q) {
        const int qq = grid.dim == 2 ? (q - (n1 - 1) + f.m1) % f.m1 : 0;
        in[static_cast<std::size_t>(pp) * f.m1 + qq] = offsets_[a * plane + static_cast<std::size_t>(p) * w1 + q];
      }
    }
    fftw_execute_dft_r2c(f.forward, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    f.kernel_hat.push_back(out);
  }
}

Convolver::~Convolver() = default;
Convolver::Convolver(Convolver&&) noexcept = default;
Convolver& Convolver::operator=(Convolver&&) noexcept = default;

bool Convolver::uses_fft() const { return static_cast<bool>(fft_); }

void Convolver::apply(const DensityField& rho, std::vector<double>& out) const {
  const GridSpec& g = rho.grid();
  if (g.dim != grid_.dim || g.n != grid_.n || std::abs(g.h - grid_.h) > 1e-12 * grid_.h)
    throw std::invalid_argument("Convolver::apply: grid shape differs from the one the kernel was sampled on");
  const std::size_t size = g.size();
  out.assign(static_cast<std::size_t>(dim_) * size, 0.0);
  if (zero_) return;
  const int n0 = g.n[0];
  const int n1 = g.dim == 2 ? g.n[1] : 1;

  if (!fft_) {
    const int w1 = g.dim == 2 ? 2 * n1 - 1 : 1;
    const std::size_t plane = static_cast<std::size_t>(2 * n0 - 1) * w1;
    for (int a = 0; a < dim_; ++a) {
      const double* K = &offsets_[a * plane];
      for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
          double s = 0.0;
          for (int l = 0; l < n0; ++l) {
            const double* row = K + static_cast<std::size_t>(i - l + n0 - 1) * w1 + (j + n1 - 1);
            const double* r = rho.values().data() + static_cast<std::size_t>(l) * n1;
            for (int mm = 0; mm < n1; ++mm) s += row[-mm] * r[mm];
          }
          out[a * size + static_cast<std::size_t>(i) * n1 + j] = s;
        }
    }
    return;
  }

  const Fft& f = *fft_;
  std::vector<double> buf(f.real_size, 0.0);
  std::vector<std::complex<double>> spec(f.spec_size);
  std::vector<std::complex<double>> prod(f.spec_size);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) buf[static_cast<std::size_t>(i) * f.m1 + j] = rho.values()[static_cast<std::size_t>(i) * n1 + j];
  fftw_execute_dft_r2c(f.forward, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
  const double scale = 1.0 / static_cast<double>(f.real_size);
  for (int a = 0; a < dim_; ++a) {
    for (std::size_t s = 0; s < f.spec_size; ++s) prod[s] = spec[s] * f.kernel_hat[static_cast<std::size_t>(a)][s];
    fftw_execute_dft_c2r(f.backward, reinterpret_cast<fftw_complex*>(prod.data()), buf.data());
    for (int i = 0; i < n0; ++i)
      for (int j = 0; j < n1; ++j)
        out[a * size + static_cast<std::size_t>(i) * n1 + j] = buf[static_cast<std::size_t>(i) * f.m1 + j] * scale;
  }
}

std::vector<double> convolve(const model::KernelSpec& k, const DensityField& rho) {
  Convolver c(k, rho.grid());
  std::vector<double> out;
  c.apply(rho, out);
  return out;
}

} // namespace mflab::spde
