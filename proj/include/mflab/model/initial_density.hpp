#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mflab/spde/density_field.hpp"

namespace mflab::model {

/// Initial law rho_0 on R^d (d = 1, 2), analytic or tabulated.
class InitialDensity {
public:
  enum class Kind { gaussian, mixture, bump, grid };

  struct Component {
    double weight = 1.0;
    std::array<double, 2> mean{0.0, 0.0};
    /// Isotropic variance.
    double variance = 1.0;
  };

  /// Gaussian with mean and row-major 2x2 (or 1x1) covariance.
  static InitialDensity gaussian(int dim, std::array<double, 2> mean, std::array<double, 4> cov);
  static InitialDensity gaussian1(double mean, double variance);
  /// Weights are normalized to sum to one.
  static InitialDensity mixture(int dim, std::vector<Component> components);
  /// Standard bump exp(-1/(1-|u|^2)) with u = (x - center)/radius, unit mass.
  static InitialDensity bump(int dim, std::array<double, 2> center, double radius);
  /// Tabulated density; piecewise constant on cells, normalized to unit mass.
  static InitialDensity from_grid(spde::DensityField field);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  double pdf(const double* x) const;
  double mass() const;
  /// Integral of |z|^2 rho_0.
  double second_moment() const;
  /// Smallest box half-width that holds all but ~1e-15 of the mass around the origin.
  double effective_radius() const;

  /// Cell averages on `grid`, renormalized once to unit mass.
  spde::DensityField discretize(const spde::GridSpec& grid) const;
  /// n points, d coordinates each.
  std::vector<double> sample(std::mt19937_64& rng, int n) const;

  const std::vector<Component>& components() const { return components_; }
  const std::array<double, 4>& covariance() const { return cov_; }

private:
  double cell_average(const spde::GridSpec& grid, int i, int j) const;

  Kind kind_ = Kind::gaussian;
  int dim_ = 1;
  std::vector<Component> components_;
  std::array<double, 2> mean_{0.0, 0.0};
  std::array<double, 4> cov_{1.0, 0.0, 0.0, 1.0};
  double radius_ = 1.0;
  spde::DensityField grid_;
  std::string name_;
};

} // namespace mflab::model
