#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflab/model/coefficients.hpp"
#include "mflab/model/initial_density.hpp"
#include "mflab/model/kernel.hpp"
#include "mflab/sde/brownian.hpp"
#include "mflab/sde/empirical.hpp"
#include "mflab/spde/density_field.hpp"

namespace mflab::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "mflab 0.1.0";

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct LiouvilleSection {
  double lo = -6.0;
  double hi = 6.0;
  int cells = 256;
  int steps = 200;
  int checkpoints = 41;
};

/// Declarative study description; see configs/*.json for the schema.
struct StudyConfig {
  std::string kernel = "odd_bump(a=0.5,r=1)";
  std::string coefficients = "const_iso(sigma=1,nu=1)";
  std::string initial = "gauss_init(0,1)";
  double T = 0.5;
  int steps = 64;
  double lo = -8.0;
  double hi = 8.0;
  int cells = 1024;
  std::vector<int> Ns{256, 512, 1024, 2048, 4096};
  int replicates = 16;
  int checkpoints = 17;
  std::uint64_t master_seed = 1;
  sde::DensityMethod method = sde::DensityMethod::kde;
  double bandwidth = 0.1;
  double picard_tol = -1.0;
  int picard_max_iter = 30;
  bool nu_zero = false;
  bool fluctuation = false;
  std::string output = "out";
  LiouvilleSection liouville;

  /// Canonical JSON (all keys, sorted) used for hashing and manifests.
  nlohmann::json to_json() const;
  /// 16 hex digits of the FNV-1a hash of the canonical JSON dump.
  std::string hash() const;
};

/// Strict parse: unknown keys, wrong types and schema mismatches throw ConfigError.
StudyConfig parse_config(const nlohmann::json& j);
StudyConfig load_config(const std::filesystem::path& path);
/// Checks invariants (increasing N, M >= 2, presets resolvable, checkpoint
/// spacing divides the step count). Throws ConfigError.
void check_config(const StudyConfig& cfg);

/// Resolved model objects for a configuration.
struct ModelSetup {
  model::KernelSpec kernel;
  model::CoefficientSet coeffs;
  model::InitialDensity rho0;
  spde::GridSpec grid;
  sde::TimeGrid time;
};

ModelSetup build_model(const StudyConfig& cfg);

/// The coefficient set with nu replaced by zeros of the same shape.
model::CoefficientSet without_common_noise(const model::CoefficientSet& coeffs);

} // namespace mflab::harness
