#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mflab/model/coefficients.hpp"
#include "mflab/sde/brownian.hpp"
#include "mflab/spde/density_field.hpp"

namespace mflab::spde {

enum class Boundary {
  /// No mass crosses the box boundary.
  zero_flux,
  /// Outgoing advective flux and diffusion into an empty ghost layer leave the box.
  outflow,
};

struct FpkOptions {
  Boundary boundary = Boundary::zero_flux;
  /// Limit on sum over axes of sup|v| dt / h.
  double cfl = 0.5;
  double negativity_tol = 1e-12;
  /// Store every `record_stride`-th field (diagnostics are kept at every step).
  int record_stride = 1;
};

struct StepDiagnostics {
  double t = 0.0;
  double mass = 0.0;
  double l2 = 0.0;
  double m2 = 0.0;
  double min = 0.0;
  /// Cumulative mass that left the box.
  double outflow = 0.0;
};

/// Pathwise solution along one common path.
struct SpdeSolution {
  sde::TimeGrid time;
  int stride = 1;
  std::vector<DensityField> fields;
  std::uint64_t w_fingerprint = 0;
  std::vector<StepDiagnostics> diagnostics;

  const DensityField& at_step(int j) const;
  const DensityField& final() const { return fields.back(); }
};

class StabilityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Fills `velocity` (dim * size, component-major) with the advective
/// velocity at step j for the current field on its current grid.
using VelocityFn = std::function<void(int step, const DensityField& rho, std::vector<double>& velocity)>;

/// Linear conditional Fokker-Planck equation
///   d rho = -div(v rho) dt - div(nu rho dW) + 1/2 sum d_a d_b((sigma sigma^T + nu nu^T) rho) dt.
///
/// Splitting per step: upwind advection with v, backward-Euler diffusion
/// with sigma sigma^T, then common-noise transport. Constant nu moves the
/// grid origin by nu dW (a moving frame, no interpolation); a non-constant
/// divergence-free nu is transported by sub-stepped upwind with velocity
/// nu dW/dt and its Ito correction joins the implicit diffusion.
SpdeSolution solve_linear_fpk(const VelocityFn& velocity, const model::CoefficientSet& coeffs, const DensityField& rho0,
                              const sde::CommonPath& W, const FpkOptions& opts = {});

/// Half-width of a box centred at the origin that holds rho_0 of the given
/// radius plus six diffusive standard deviations and the drift excursion.
double padded_halfwidth(double rho0_radius, double diffusion_max, double T, double drift_bound);

namespace detail {

/// Diagonal diffusivity a_aa at faces; off-diagonal entries must vanish.
struct Diffusivity {
  bool constant = true;
  std::array<double, 2> value{0.0, 0.0};
  std::function<double(int axis, double t, const double* z)> at;
};

/// Building blocks shared by the 1-D/2-D solvers.
class Stepper {
public:
  Stepper(Boundary boundary, double cfl, Diffusivity diffusivity);

  /// Conservative upwind step; cell-centred velocity, component-major.
  /// Returns the mass that left the box.
  double advect(DensityField& rho, const std::vector<double>& velocity, double dt) const;
  /// Backward Euler for 1/2 d_a(a_aa d_a rho), one implicit sweep per axis.
  double diffuse(DensityField& rho, double t, double dt) const;
  /// sum over axes of sup|v| dt / h.
  static double courant(const GridSpec& g, const std::vector<double>& velocity, double dt);

private:
  Boundary boundary_;
  double cfl_;
  Diffusivity diff_;
};

Diffusivity diffusivity_for(const model::CoefficientSet& coeffs, bool include_nu);

} // namespace detail

} // namespace mflab::spde
