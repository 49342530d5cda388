#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflab/harness/config.hpp"
#include "mflab/harness/rate.hpp"

namespace mflab::harness {

/// One (N, replicate) row.
struct StudyRow {
  int N = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::uint64_t w_fingerprint = 0;
  /// "ok" or a failure code (picard_divergence, stability, fingerprint_mismatch, error).
  std::string status = "ok";
  std::string message;
  /// max over checkpoints of ||rho^{1,N}_t - rho_t||_1^2.
  double sup_l1_sq = 0.0;
  /// Checkpoint time where the sup is attained.
  double t_sup = 0.0;
  double l1_final = 0.0;
  /// H(rho^{1,N}_T | rho_T); inf when the estimate leaves the support of rho_T.
  double h_final = 0.0;
  /// min over checkpoints of 2H - L1^2.
  double ckp_min_margin = 0.0;
  /// sum over test functions of (<mu^N_T, phi> - <rho_T, phi>)^2.
  double pairing_sq = 0.0;
  /// N/delta times the mean squared drift fluctuation at T; nan unless enabled.
  double fluctuation = 0.0;
  double fluctuation_se = 0.0;
  int picard_iterations = 0;
  /// Fraction of particles that fell outside the box across checkpoints.
  double outside_fraction = 0.0;
  /// Wall time, kept out of rows.csv.
  double runtime_ms = 0.0;

  bool ok() const { return status == "ok"; }
};

struct NSummary {
  int N = 0;
  int count = 0;
  int failed = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  /// Standard error from the first half of the replicates alone.
  double stderr_half = 0.0;
  double pairing_mean = 0.0;
  double pairing_stderr = 0.0;
  double h_mean = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<NSummary> per_n;
  std::optional<RateFit> fit;
  std::optional<RateFit> pairing_fit;
  int failed_rows = 0;
  bool valid = true;
  std::string invalid_reason;
  double runtime_s = 0.0;
};

/// Seed chain master -> "study" -> N -> replicate.
std::uint64_t replicate_seed(std::uint64_t master, int N, int rep);

/// Full pipeline for one row; stage errors are captured into the status.
StudyRow run_replicate(const StudyConfig& cfg, const ModelSetup& setup, int N, int rep);
StudyRow run_replicate(const StudyConfig& cfg, int N, int rep);

using Progress = std::function<void(const StudyRow&)>;

/// Every (N, replicate) row, then per-N aggregation and the rate fit.
StudyResult run_study(const StudyConfig& cfg, const Progress& progress = {});

/// Aggregation only; invariant under reordering of rows.
void aggregate(StudyResult& result, const StudyConfig& cfg);

std::string rows_csv(const std::vector<StudyRow>& rows, const std::string& config_hash);
nlohmann::json summary_json(const StudyResult& result, const StudyConfig& cfg);
nlohmann::json manifest_json(const StudyResult& result, const StudyConfig& cfg);

/// rows.csv, summary.json, timings.csv and manifest.json under `dir`.
void write_study(const StudyResult& result, const StudyConfig& cfg, const std::filesystem::path& dir);

} // namespace mflab::harness
