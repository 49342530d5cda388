#include "mflab/sde/trajectory_io.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mflab::sde {
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
  if (!is) throw std::runtime_error("trajectory binary: truncated header");
  return v;
}

} // namespace

void write_trajectory_csv(const ParticleTrajectory& tr, std::ostream& os) {
  os << (tr.d == 1 ? "t,i,x\n" : "t,i,x,y\n") << std::setprecision(17);
  for (int s = 0; s < tr.snapshots(); ++s)
    for (int i = 0; i < tr.N; ++i) {
      os << tr.time(s) << ',' << i;
      for (int a = 0; a < tr.d; ++a) os << ',' << tr.x(s, i, a);
      os << '\n';
    }
}

void write_trajectory_binary(const ParticleTrajectory& tr, std::ostream& os) {
  os.write("MFTR", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tr.N));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tr.d));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tr.steps));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tr.stride));
  put<std::uint64_t>(os, tr.seed);
  put<double>(os, tr.dt);
  os.write(reinterpret_cast<const char*>(tr.X.data()), static_cast<std::streamsize>(tr.X.size() * sizeof(double)));
}

ParticleTrajectory read_trajectory_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MFTR", 4) != 0) throw std::runtime_error("trajectory binary: bad magic");
  ParticleTrajectory tr;
  tr.N = static_cast<int>(get<std::uint32_t>(is));
  tr.d = static_cast<int>(get<std::uint32_t>(is));
  tr.steps = static_cast<int>(get<std::uint32_t>(is));
  tr.stride = static_cast<int>(get<std::uint32_t>(is));
  tr.seed = get<std::uint64_t>(is);
  tr.dt = get<double>(is);
  if (tr.stride < 1 || tr.d < 1 || tr.d > 2) throw std::runtime_error("trajectory binary: bad header");
  tr.X.resize(static_cast<std::size_t>(tr.snapshots()) * tr.N * tr.d);
  is.read(reinterpret_cast<char*>(tr.X.data()), static_cast<std::streamsize>(tr.X.size() * sizeof(double)));
  if (!is) throw std::runtime_error("trajectory binary: truncated positions");
  return tr;
}

} // namespace mflab::sde
