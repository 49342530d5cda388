#pragma once

#include <functional>
#include <string>
#include <vector>

namespace mflab::model {

/// A time- and space-dependent matrix field z -> A(t, z) in R^{rows x cols},
/// written row-major into `out`.
struct MatrixField {
  using Callable = std::function<void(double t, const double* z, double* out)>;

  int rows = 1;
  int cols = 1;
  Callable eval;
  /// Field does not depend on (t, z); solvers evaluate it once.
  bool constant = false;
  /// Declared sup|A| + sup|grad A| over all entries.
  double c1_norm = 0.0;
  std::string name;

  std::vector<double> at(double t, const double* z) const {
    std::vector<double> out(static_cast<std::size_t>(rows * cols));
    eval(t, z, out.data());
    return out;
  }

  static MatrixField constant_matrix(int rows, int cols, std::vector<double> values, std::string name);
  /// s * I_d.
  static MatrixField scaled_identity(int d, double s, std::string name);
};

/// Diffusion maps sigma (idiosyncratic, d x m) and nu (common, d x m_nu).
struct CoefficientSet {
  MatrixField sigma;
  MatrixField nu;
  /// Ellipticity constant: lambda^T sigma sigma^T lambda >= delta |lambda|^2.
  double delta = 1.0;
  /// Uniform C^1 bound for both sigma and nu.
  double c1_bound = 1.0;

  int d() const { return sigma.rows; }
  int m() const { return sigma.cols; }
  int m_nu() const { return nu.cols; }

  /// Throws if sigma and nu disagree on d or are not callable.
  void check() const;
};

CoefficientSet make_coefficients(MatrixField sigma, MatrixField nu, double delta);

/// (sigma sigma^T)(t,z), d x d row-major.
std::vector<double> sigma_sigma_t(const MatrixField& f, double t, const double* z);

} // namespace mflab::model
