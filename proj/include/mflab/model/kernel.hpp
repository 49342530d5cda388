#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mflab::model {

/// Interaction force k: R^d -> R^d, bounded and square integrable.
///
/// Built-in shapes are evaluated in closed form; mollified kernels are
/// stored as tables with (bi)linear interpolation. The declared norms are
/// upper bounds used by stability checks and by the entropy bounds.
class KernelSpec {
public:
  enum class Shape { zero, odd_bump, step, table, custom };

  using Callable = std::function<void(const double* z, double* out)>;

  static KernelSpec zero(int dim = 1);
  /// a * g(|z|/r) * z/|z| with g the smooth odd bump profile, max |k| = a.
  static KernelSpec odd_bump(double amplitude, double radius, int dim = 1);
  /// a * z/|z| on 0 < |z| < r, zero elsewhere.
  static KernelSpec step(double amplitude, double radius, int dim = 1);
  static KernelSpec custom(int dim, Callable f, double sup_norm, double l2_norm,
                           std::optional<double> support_radius = std::nullopt,
                           std::vector<double> breakpoints = {});
  /// Tabulated kernel on a uniform grid over [-extent, extent]^dim.
  /// `values` holds dim components per node, node-major.
  static KernelSpec table(int dim, double extent, int nodes_per_axis, std::vector<double> values,
                          double sup_norm, double l2_norm);
  /// Pointwise sum k1 + k2.
  static KernelSpec sum(const KernelSpec& a, const KernelSpec& b);

  int dim() const { return dim_; }
  Shape shape() const { return shape_; }
  double sup_norm() const { return sup_norm_; }
  double l2_norm() const { return l2_norm_; }
  double amplitude() const { return amplitude_; }
  double radius() const { return radius_; }
  /// nullopt means unbounded support.
  std::optional<double> support_radius() const { return support_radius_; }
  bool is_zero() const { return sup_norm_ == 0.0; }
  /// k(-z) = -k(z) holds for this kernel.
  bool is_odd() const { return odd_; }
  /// Points of discontinuity (d = 1 only); used to split quadrature panels.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  void eval(const double* z, double* out) const;
  /// Scalar fast path, valid only for dim() == 1.
  double eval1(double z) const {
    switch (shape_) {
    case Shape::zero:
      return 0.0;
    case Shape::odd_bump:
      return amplitude_ * bump_profile(z / radius_);
    case Shape::step:
      return (z > 0.0 && z < radius_) ? amplitude_ : ((z < 0.0 && z > -radius_) ? -amplitude_ : 0.0);
    default: {
      double out = 0.0;
      eval(&z, &out);
      return out;
    }
    }
  }

  /// Normalized odd profile u * exp(-1/(1-u^2)) / max, zero for |u| >= 1.
  static double bump_profile(double u);

private:
  struct Table {
    int dim = 1;
    double extent = 0.0;
    int nodes = 0;
    double spacing = 0.0;
    std::vector<double> values;
  };

  void eval_table(const double* z, double* out) const;

  int dim_ = 1;
  Shape shape_ = Shape::zero;
  double amplitude_ = 0.0;
  double radius_ = 1.0;
  double sup_norm_ = 0.0;
  double l2_norm_ = 0.0;
  bool odd_ = true;
  std::optional<double> support_radius_;
  std::vector<double> breakpoints_;
  std::shared_ptr<const Callable> callable_;
  std::shared_ptr<const Table> table_;
  std::string name_;
};

/// Quadrature of |k|^2 over its support (or [-extent, extent]^d when
/// the support is unbounded). Independent of the declared l2_norm.
double kernel_l2_quadrature(const KernelSpec& k, double extent = 10.0, int cells_per_axis = 4000);

/// max |k(z)| over a uniform lattice plus the given random probes.
double kernel_sup_probe(const KernelSpec& k, double extent, int probes, std::uint64_t seed);

} // namespace mflab::model
