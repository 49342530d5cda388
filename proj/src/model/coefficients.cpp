#include "mflab/model/coefficients.hpp"

#include <cmath>
#include <stdexcept>

namespace mflab::model {

MatrixField MatrixField::constant_matrix(int rows, int cols, std::vector<double> values, std::string name) {
  if (static_cast<int>(values.size()) != rows * cols) throw std::invalid_argument("constant matrix size mismatch");
  MatrixField f;
  f.rows = rows;
  f.cols = cols;
  f.constant = true;
  double mx = 0.0;
  for (double v : values) mx = std::max(mx, std::abs(v));
  f.c1_norm = mx;
  f.name = std::move(name);
  f.eval = [values = std::move(values)](double, const double*, double* out) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i];
  };
  return f;
}

MatrixField MatrixField::scaled_identity(int d, double s, std::string name) {
  std::vector<double> v(static_cast<std::size_t>(d * d), 0.0);
  for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i * d + i)] = s;
  return constant_matrix(d, d, std::move(v), std::move(name));
}

void CoefficientSet::check() const {
  if (!sigma.eval || !nu.eval) throw std::invalid_argument("coefficient set: sigma and nu must be callable");
  if (sigma.rows != nu.rows) throw std::invalid_argument("coefficient set: sigma and nu disagree on d");
  if (sigma.rows < 1 || sigma.cols < 1 || nu.cols < 1) throw std::invalid_argument("coefficient set: bad dimensions");
  if (!(delta > 0.0)) throw std::invalid_argument("coefficient set: delta must be positive");
}

CoefficientSet make_coefficients(MatrixField sigma, MatrixField nu, double delta) {
  CoefficientSet c;
  c.c1_bound = std::max(sigma.c1_norm, nu.c1_norm);
  c.sigma = std::move(sigma);
  c.nu = std::move(nu);
  c.delta = delta;
  c.check();
  return c;
}

std::vector<double> sigma_sigma_t(const MatrixField& f, double t, const double* z) {
  const auto s = f.at(t, z);
  const int d = f.rows;
  const int m = f.cols;
  std::vector<double> a(static_cast<std::size_t>(d * d), 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int l = 0; l < m; ++l) acc += s[static_cast<std::size_t>(i * m + l)] * s[static_cast<std::size_t>(j * m + l)];
      a[static_cast<std::size_t>(i * d + j)] = acc;
    }
  return a;
}

} // namespace mflab::model
