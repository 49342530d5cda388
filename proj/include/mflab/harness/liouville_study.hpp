#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflab/harness/config.hpp"

namespace mflab::harness {

struct LiouvillePoint {
  double t = 0.0;
  /// H(rho^2_t | rho_t (x) rho_t).
  double entropy = 0.0;
  bool infinite = false;
  double ckp_margin = 0.0;
  double subadditivity_margin = 0.0;
  double fisher = 0.0;
  double fluctuation = 0.0;
  /// H(t) - H(0) + int_0^t fisher - int_0^t fluctuation (trapezoid); <= 0 up to scheme error.
  double residual = 0.0;
  double asymmetry = 0.0;
  double mass2 = 0.0;
  double mass1 = 0.0;
};

struct LiouvilleReport {
  std::vector<LiouvillePoint> points;
  double sup_entropy = 0.0;
  /// 16 e ||k|| T^2 e^{CT} / delta with C = 16 e ||k|| / delta.
  double bound = 0.0;
  double gronwall_c = 0.0;
  double max_asymmetry = 0.0;
  double max_residual = 0.0;
  int picard_iterations = 0;
  std::uint64_t w_seed = 0;
  std::uint64_t w_fingerprint = 0;
  double runtime_s = 0.0;
};

double entropy_bound(double k_sup, double T, double delta);

/// Needs d = 1. Uses cfg.liouville for the grid and time steps and
/// derive_seed(master, "liouville") for the common path.
LiouvilleReport liouville_study(const StudyConfig& cfg);

std::string liouville_csv(const LiouvilleReport& r);
nlohmann::json liouville_json(const LiouvilleReport& r, const StudyConfig& cfg);
/// liouville.csv, liouville.json and manifest.json under `dir`.
void write_liouville(const LiouvilleReport& r, const StudyConfig& cfg, const std::filesystem::path& dir);

} // namespace mflab::harness
