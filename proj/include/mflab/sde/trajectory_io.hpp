#pragma once

#include <iosfwd>

#include "mflab/sde/particles.hpp"

namespace mflab::sde {

/// One row per (snapshot, particle): t,i,x[,y].
void write_trajectory_csv(const ParticleTrajectory& tr, std::ostream& os);

/// Little-endian: magic "MFTR", u32 N, u32 d, u32 steps, u32 stride,
/// u64 seed, f64 dt, then snapshots * N * d f64 positions.
void write_trajectory_binary(const ParticleTrajectory& tr, std::ostream& os);
ParticleTrajectory read_trajectory_binary(std::istream& is);

} // namespace mflab::sde
