#pragma once

#include "mflab/spde/density_field.hpp"

namespace mflab::entropy {

struct EntropyValue {
  double value = 0.0;
  bool infinite = false;
  /// Mass of f on cells where g <= floor.
  double mass_on_small_g = 0.0;
};

/// H(f|g) = sum (f log(f/g) - f + g) h^d, which equals sum f log(f/g) h^d
/// for equal masses and stays nonnegative otherwise. 0 log 0 = 0; g is
/// clipped at `floor` inside the logarithm only, and the value is +inf when f
/// puts more than `tol` mass on {g <= floor}.
EntropyValue relative_entropy(const spde::DensityField& f, const spde::DensityField& g, double floor = 1e-300,
                              double tol = 1e-8);

double l1_distance(const spde::DensityField& f, const spde::DensityField& g);

} // namespace mflab::entropy
