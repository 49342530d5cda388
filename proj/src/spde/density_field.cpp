#include "mflab/spde/density_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mflab::spde {
namespace {

static_assert(std::endian::native == std::endian::little, "binary exports assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("density binary: truncated input");
  return v;
}

constexpr char kMagic[4] = {'M', 'F', 'D', 'F'};

} // namespace

GridSpec GridSpec::line(double lo, double hi, int cells) {
  if (!(hi > lo) || cells < 1) throw std::invalid_argument("GridSpec::line: need hi > lo and cells >= 1");
  GridSpec g;
  g.dim = 1;
  g.lo = {lo, 0.0};
  g.h = (hi - lo) / cells;
  g.n = {cells, 1};
  return g;
}

GridSpec GridSpec::square(double lo, double hi, int cells) {
  GridSpec g = line(lo, hi, cells);
  g.dim = 2;
  g.lo = {lo, lo};
  g.n = {cells, cells};
  return g;
}

GridSpec GridSpec::translated(const std::array<double, 2>& shift) const {
  GridSpec g = *this;
  g.lo[0] += shift[0];
  if (dim == 2) g.lo[1] += shift[1];
  return g;
}

bool GridSpec::same_as(const GridSpec& o, double tol) const {
  if (dim != o.dim || n[0] != o.n[0] || (dim == 2 && n[1] != o.n[1])) return false;
  if (std::abs(h - o.h) > tol * std::max(1.0, h)) return false;
  for (int a = 0; a < dim; ++a)
    if (std::abs(lo[a] - o.lo[a]) > tol * std::max(1.0, std::abs(lo[a]))) return false;
  return true;
}

DensityField::DensityField(GridSpec grid) : grid_(grid), values_(grid.size(), 0.0) {}

DensityField::DensityField(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw std::invalid_argument("DensityField: value count does not match grid");
}

double DensityField::mass() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * grid_.cell_volume();
}

double DensityField::l1_norm() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s * grid_.cell_volume();
}

double DensityField::l2_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s * grid_.cell_volume());
}

double DensityField::second_moment() const {
  double s = 0.0;
  if (grid_.dim == 1) {
    for (int i = 0; i < grid_.n[0]; ++i) {
      const double x = grid_.center(0, i);
      s += x * x * values_[static_cast<std::size_t>(i)];
    }
  } else {
    for (int i = 0; i < grid_.n[0]; ++i) {
      const double x = grid_.center(0, i);
      for (int j = 0; j < grid_.n[1]; ++j) {
        const double y = grid_.center(1, j);
        s += (x * x + y * y) * values_[grid_.index(i, j)];
      }
    }
  }
  return s * grid_.cell_volume();
}

std::array<double, 2> DensityField::mean() const {
  std::array<double, 2> m{0.0, 0.0};
  const double total = mass();
  if (total == 0.0) return m;
  if (grid_.dim == 1) {
    for (int i = 0; i < grid_.n[0]; ++i) m[0] += grid_.center(0, i) * values_[static_cast<std::size_t>(i)];
  } else {
    for (int i = 0; i < grid_.n[0]; ++i)
      for (int j = 0; j < grid_.n[1]; ++j) {
        m[0] += grid_.center(0, i) * values_[grid_.index(i, j)];
        m[1] += grid_.center(1, j) * values_[grid_.index(i, j)];
      }
  }
  m[0] *= grid_.cell_volume() / total;
  m[1] *= grid_.cell_volume() / total;
  return m;
}

double DensityField::min_value() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double DensityField::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

void DensityField::scale(double factor) {
  for (double& v : values_) v *= factor;
}

void DensityField::normalize() {
  const double m = mass();
  if (!(m > 0.0)) throw std::runtime_error("DensityField::normalize: zero mass");
  scale(1.0 / m);
}

double DensityField::interpolate(const double* x) const {
  const GridSpec& g = grid_;
  auto locate = [&](int axis, double xv, int& i0, double& w) {
    const double s = (xv - g.lo[axis]) / g.h - 0.5;
    if (s < -0.5 || s > g.n[axis] - 0.5) return false;
    // Half-cell margins at the boundary use the boundary value.
    if (s <= 0.0) {
      i0 = 0;
      w = 0.0;
    } else if (s >= g.n[axis] - 1) {
      i0 = g.n[axis] - 1;
      w = 0.0;
    } else {
      i0 = static_cast<int>(s);
      w = s - i0;
    }
    return true;
  };
  int i = 0, j = 0;
  double wx = 0.0, wy = 0.0;
  if (!locate(0, x[0], i, wx)) return 0.0;
  if (g.dim == 1) {
    const double a = values_[static_cast<std::size_t>(i)];
    const double b = i + 1 < g.n[0] ? values_[static_cast<std::size_t>(i + 1)] : a;
    return (1.0 - wx) * a + wx * b;
  }
  if (!locate(1, x[1], j, wy)) return 0.0;
  const int i1 = std::min(i + 1, g.n[0] - 1);
  const int j1 = std::min(j + 1, g.n[1] - 1);
  return (1 - wx) * (1 - wy) * at(i, j) + wx * (1 - wy) * at(i1, j) + (1 - wx) * wy * at(i, j1) + wx * wy * at(i1, j1);
}

DensityField DensityField::resampled(const GridSpec& target) const {
  if (target.dim != grid_.dim) throw std::invalid_argument("resampled: dimension mismatch");
  DensityField out(target);
  double x[2];
  for (int i = 0; i < target.n[0]; ++i) {
    x[0] = target.center(0, i);
    if (target.dim == 1) {
      out.values_[static_cast<std::size_t>(i)] = interpolate(x);
      continue;
    }
    for (int j = 0; j < target.n[1]; ++j) {
      x[1] = target.center(1, j);
      out.values_[target.index(i, j)] = interpolate(x);
    }
  }
  return out;
}

void DensityField::write_csv(std::ostream& os) const {
  os << (grid_.dim == 1 ? "x,value\n" : "x,y,value\n");
  os << std::setprecision(17);
  for (int i = 0; i < grid_.n[0]; ++i) {
    if (grid_.dim == 1) {
      os << grid_.center(0, i) << ',' << values_[static_cast<std::size_t>(i)] << '\n';
      continue;
    }
    for (int j = 0; j < grid_.n[1]; ++j)
      os << grid_.center(0, i) << ',' << grid_.center(1, j) << ',' << values_[grid_.index(i, j)] << '\n';
  }
}

void DensityField::write_binary(std::ostream& os) const {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid_.dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid_.n[0]));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid_.dim == 2 ? grid_.n[1] : 1));
  put<double>(os, grid_.lo[0]);
  put<double>(os, grid_.lo[1]);
  put<double>(os, grid_.h);
  os.write(reinterpret_cast<const char*>(values_.data()), static_cast<std::streamsize>(values_.size() * sizeof(double)));
}

DensityField DensityField::read_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("density binary: bad magic");
  GridSpec g;
  g.dim = static_cast<int>(get<std::uint32_t>(is));
  g.n[0] = static_cast<int>(get<std::uint32_t>(is));
  g.n[1] = static_cast<int>(get<std::uint32_t>(is));
  g.lo[0] = get<double>(is);
  g.lo[1] = get<double>(is);
  g.h = get<double>(is);
  if (g.dim != 1 && g.dim != 2) throw std::runtime_error("density binary: bad dimension");
  std::vector<double> v(g.size());
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw std::runtime_error("density binary: truncated values");
  return DensityField(g, std::move(v));
}

DensityField DensityField::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("density csv: empty input");
  const int dim = line.rfind("x,y,", 0) == 0 ? 2 : 1;
  std::vector<std::array<double, 3>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::array<double, 3> r{0, 0, 0};
    char c;
    if (dim == 1) {
      ss >> r[0] >> c >> r[2];
    } else {
      ss >> r[0] >> c >> r[1] >> c >> r[2];
    }
    if (!ss) throw std::runtime_error("density csv: malformed row '" + line + "'");
    rows.push_back(r);
  }
  if (rows.size() < 2) throw std::runtime_error("density csv: need at least two cells");
  std::set<double> xs, ys;
  for (const auto& r : rows) {
    xs.insert(r[0]);
    ys.insert(r[1]);
  }
  GridSpec g;
  g.dim = dim;
  g.n = {static_cast<int>(xs.size()), dim == 2 ? static_cast<int>(ys.size()) : 1};
  g.h = (*xs.rbegin() - *xs.begin()) / (g.n[0] - 1);
  g.lo = {*xs.begin() - 0.5 * g.h, dim == 2 ? *ys.begin() - 0.5 * g.h : 0.0};
  if (g.size() != rows.size()) throw std::runtime_error("density csv: rows do not form a full grid");
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r[2]);
  return DensityField(g, std::move(v));
}

void require_same_grid(const DensityField& a, const DensityField& b, const char* what) {
  if (!a.grid().same_as(b.grid())) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

} // namespace mflab::spde
