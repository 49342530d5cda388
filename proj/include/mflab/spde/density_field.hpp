#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mflab::spde {

/// Uniform cell-centred grid in d = 1 or 2 with equal spacing on every axis.
/// The origin `lo` is per axis so that a grid can be translated rigidly.
struct GridSpec {
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  double h = 1.0;
  std::array<int, 2> n{1, 1};

  static GridSpec line(double lo, double hi, int cells);
  /// Square box [lo, hi]^2 with `cells` per axis.
  static GridSpec square(double lo, double hi, int cells);

  std::size_t size() const { return dim == 1 ? static_cast<std::size_t>(n[0]) : static_cast<std::size_t>(n[0]) * n[1]; }
  double cell_volume() const { return dim == 1 ? h : h * h; }
  double center(int axis, int i) const { return lo[axis] + (i + 0.5) * h; }
  double hi(int axis) const { return lo[axis] + n[axis] * h; }
  /// Row-major index, axis 0 slow.
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n[1] + j; }

  GridSpec translated(const std::array<double, 2>& shift) const;
  /// Same shape, spacing and origin within `tol`.
  bool same_as(const GridSpec& other, double tol = 1e-9) const;
};

/// Nonnegative grid function; values are cell averages of a density.
class DensityField {
public:
  DensityField() = default;
  explicit DensityField(GridSpec grid);
  DensityField(GridSpec grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  GridSpec& grid() { return grid_; }
  int dim() const { return grid_.dim; }
  std::size_t size() const { return values_.size(); }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(int i, int j) const { return values_[grid_.index(i, j)]; }

  double mass() const;
  double l1_norm() const;
  double l2_norm() const;
  /// Integral of |x|^2 rho(x) dx using cell centres.
  double second_moment() const;
  std::array<double, 2> mean() const;
  double min_value() const;
  double max_value() const;
  void scale(double factor);
  /// Rescale to unit mass; throws on zero mass.
  void normalize();

  /// Linear interpolation of cell-centre values at an arbitrary point; zero
  /// outside the box.
  double interpolate(const double* x) const;
  /// Values resampled onto `target` by (bi)linear interpolation.
  DensityField resampled(const GridSpec& target) const;

  void write_csv(std::ostream& os) const;
  /// Little-endian binary: magic "MFDF", u32 dim, u32 cells per axis (x2),
  /// f64 lo (x2), f64 h, then values.
  void write_binary(std::ostream& os) const;
  static DensityField read_csv(std::istream& is);
  static DensityField read_binary(std::istream& is);

private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Throws std::invalid_argument when the grids differ.
void require_same_grid(const DensityField& a, const DensityField& b, const char* what);

} // namespace mflab::spde
