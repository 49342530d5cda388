#include "mflab/harness/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mflab/entropy/entropy.hpp"
#include "mflab/entropy/inequalities.hpp"
#include "mflab/harness/output.hpp"
#include "mflab/sde/empirical.hpp"
#include "mflab/sde/particles.hpp"
#include "mflab/sde/seeds.hpp"
#include "mflab/spde/picard.hpp"

namespace mflab::harness {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// test functions for the weak (pairing) distance
double phi(int which, const double* x, int d) {
  const double s = d == 1 ? x[0] : x[0] + 0.5 * x[1];
  const double r2 = d == 1 ? x[0] * x[0] : x[0] * x[0] + x[1] * x[1];
  switch (which) {
  case 0:
    return std::cos(s);
  case 1:
    return std::sin(s);
  default:
    return std::exp(-0.5 * r2);
  }
}

double pairing_distance(std::span<const double> pts, int d, const spde::DensityField& rho) {
  const auto& g = rho.grid();
  const int N = static_cast<int>(pts.size()) / d;
  double total = 0.0;
  for (int f = 0; f < 3; ++f) {
    double emp = 0.0;
    for (int i = 0; i < N; ++i) emp += phi(f, &pts[static_cast<std::size_t>(i) * d], d);
    emp /= N;
    double ref = 0.0;
    const int n1 = d == 1 ? 1 : g.n[1];
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < n1; ++j) {
        const double x[2] = {g.center(0, i), d == 1 ? 0.0 : g.center(1, j)};
        ref += phi(f, x, d) * rho[g.index(i, d == 1 ? 0 : j)];
      }
    ref *= g.cell_volume();
    total += (emp - ref) * (emp - ref);
  }
  return total;
}

void fail(StudyRow& row, const char* code, const std::string& msg) {
  row.status = code;
  row.message = msg;
  row.sup_l1_sq = row.t_sup = row.l1_final = row.h_final = row.ckp_min_margin = kNaN;
  row.pairing_sq = row.fluctuation = row.fluctuation_se = row.outside_fraction = kNaN;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1) / v.size());
}

// csv fields may not contain commas or newlines
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

nlohmann::json fit_json(const std::optional<RateFit>& f) {
  if (!f) return nullptr;
  return {{"slope", f->slope},
          {"intercept", f->intercept},
          {"slope_se", f->slope_se},
          {"band", {f->band_lo, f->band_hi}},
          {"points", f->points}};
}

} // namespace

std::uint64_t replicate_seed(std::uint64_t master, int N, int rep) {
  const auto study = sde::derive_seed(master, "study");
  const auto n = sde::derive_seed(study, "N", static_cast<std::uint64_t>(N));
  return sde::derive_seed(n, "replicate", static_cast<std::uint64_t>(rep));
}

StudyRow run_replicate(const StudyConfig& cfg, int N, int rep) { return run_replicate(cfg, build_model(cfg), N, rep); }

StudyRow run_replicate(const StudyConfig& cfg, const ModelSetup& s, int N, int rep) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyRow row;
  row.N = N;
  row.rep = rep;
  row.seed = replicate_seed(cfg.master_seed, N, rep);
  if (!cfg.fluctuation) row.fluctuation = row.fluctuation_se = kNaN;
  try {
    const int d = s.coeffs.d();
    const auto bundle = sde::make_bundle(s.time, N, s.coeffs.m(), s.coeffs.m_nu(), row.seed);
    row.w_fingerprint = bundle.common.fingerprint();

    spde::PicardOptions popts;
    popts.tol = cfg.picard_tol;
    popts.max_iter = cfg.picard_max_iter;
    const auto pic = spde::picard_solve(s.kernel, s.coeffs, s.rho0.discretize(s.grid), bundle.common, popts);
    row.picard_iterations = pic.iterations;

    sde::SimulationOptions sopts;
    sopts.stride = cfg.steps / (cfg.checkpoints - 1);
    const auto tr = sde::simulate_particles(s.kernel, s.coeffs, s.rho0, bundle, sopts);
    if (tr.w_fingerprint != pic.solution.w_fingerprint) {
      fail(row, "fingerprint_mismatch", "particle and SPDE stages saw different common paths");
      return row;
    }

    sde::EmpiricalOptions eopts;
    eopts.method = cfg.method;
    eopts.bandwidth = cfg.bandwidth;
    row.sup_l1_sq = -1.0;
    row.ckp_min_margin = std::numeric_limits<double>::infinity();
    std::size_t outside = 0, seen = 0;
    for (int c = 0; c < tr.snapshots(); ++c) {
      const auto& rho = pic.solution.at_step(tr.step_of(c));
      const auto pts = tr.positions(c);
      const auto emp = sde::empirical_density(pts, d, rho.grid(), eopts);
      outside += emp.outside;
      seen += emp.total;
      const auto ckp = entropy::ckp_check(emp.field, rho);
      const double l1sq = ckp.l1 * ckp.l1;
      if (l1sq > row.sup_l1_sq) {
        row.sup_l1_sq = l1sq;
        row.t_sup = tr.time(c);
      }
      row.ckp_min_margin = std::min(row.ckp_min_margin, ckp.margin);
      if (c + 1 == tr.snapshots()) {
        row.l1_final = ckp.l1;
        row.h_final = ckp.vacuous ? std::numeric_limits<double>::infinity() : ckp.entropy;
        row.pairing_sq = pairing_distance(pts, d, rho);
        if (cfg.fluctuation) {
          const auto fl = entropy::fluctuation_term(pts, d, s.kernel, rho, s.coeffs.delta);
          row.fluctuation = fl.estimate;
          row.fluctuation_se = fl.stderr_;
        }
      }
    }
    row.outside_fraction = seen ? static_cast<double>(outside) / seen : 0.0;
  } catch (const spde::PicardDivergence& e) {
    fail(row, "picard_divergence", e.what());
  } catch (const spde::StabilityError& e) {
    fail(row, "stability", e.what());
  } catch (const std::exception& e) {
    fail(row, "error", e.what());
  }
  row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

StudyResult run_study(const StudyConfig& cfg, const Progress& progress) {
  check_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto setup = build_model(cfg);
  StudyResult result;
  struct Task {
    int N, rep;
  };
  std::vector<Task> tasks;
  for (int N : cfg.Ns)
    for (int r = 0; r < cfg.replicates; ++r) tasks.push_back({N, r});
  result.rows.resize(tasks.size());
  // biggest first keeps the pool busy at the end
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return tasks[a].N > tasks[b].N; });

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t q = 0; q < order.size(); ++q) {
    const auto idx = order[q];
    result.rows[idx] = run_replicate(cfg, setup, tasks[idx].N, tasks[idx].rep);
    if (progress) {
#pragma omp critical(mflab_progress)
      progress(result.rows[idx]);
    }
  }
  aggregate(result, cfg);
  result.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void aggregate(StudyResult& result, const StudyConfig& cfg) {
  auto& rows = result.rows;
  std::sort(rows.begin(), rows.end(), [](const StudyRow& a, const StudyRow& b) {
    return a.N != b.N ? a.N < b.N : a.rep < b.rep;
  });
  result.per_n.clear();
  result.failed_rows = 0;
  std::vector<RatePoint> pts, ppts;
  for (int N : cfg.Ns) {
    NSummary s;
    s.N = N;
    std::vector<double> v, half, p, h;
    for (const auto& r : rows) {
      if (r.N != N) continue;
      if (!r.ok()) {
        ++s.failed;
        continue;
      }
      v.push_back(r.sup_l1_sq);
      if (r.rep < cfg.replicates / 2) half.push_back(r.sup_l1_sq);
      p.push_back(r.pairing_sq);
      h.push_back(r.h_final);
    }
    s.count = static_cast<int>(v.size());
    s.mean = mean_of(v);
    s.stderr_ = stderr_of(v);
    s.stderr_half = stderr_of(half);
    s.pairing_mean = mean_of(p);
    s.pairing_stderr = stderr_of(p);
    s.h_mean = mean_of(h);
    result.failed_rows += s.failed;
    if (s.count > 0 && s.mean > 0.0) pts.push_back({double(N), s.mean});
    if (s.count > 0 && s.pairing_mean > 0.0) ppts.push_back({double(N), s.pairing_mean});
    result.per_n.push_back(s);
  }
  result.fit.reset();
  result.pairing_fit.reset();
  if (pts.size() >= 3) result.fit = fit_rate(pts);
  if (ppts.size() >= 3) result.pairing_fit = fit_rate(ppts);
  result.valid = true;
  result.invalid_reason.clear();
  if (rows.empty() || result.failed_rows > 0.2 * rows.size()) {
    result.valid = false;
    result.invalid_reason = std::to_string(result.failed_rows) + " of " + std::to_string(rows.size()) + " rows failed";
  } else if (!result.fit) {
    result.valid = false;
    result.invalid_reason = "fewer than 3 N values with a positive mean";
  }
}

std::string rows_csv(const std::vector<StudyRow>& rows, const std::string& config_hash) {
  std::ostringstream os;
  os << "N,rep,seed,w_fingerprint,config_hash,status,sup_l1_sq,t_sup,l1_final,h_final,ckp_min_margin,pairing_sq,"
        "fluctuation,fluctuation_se,picard_iterations,outside_fraction,message\n";
  for (const auto& r : rows) {
    os << r.N << ',' << r.rep << ',' << hex64(r.seed) << ',' << hex64(r.w_fingerprint) << ',' << config_hash << ','
       << r.status << ',' << fmt(r.sup_l1_sq) << ',' << fmt(r.t_sup) << ',' << fmt(r.l1_final) << ','
       << fmt(r.h_final) << ',' << fmt(r.ckp_min_margin) << ',' << fmt(r.pairing_sq) << ',' << fmt(r.fluctuation)
       << ',' << fmt(r.fluctuation_se) << ',' << r.picard_iterations << ',' << fmt(r.outside_fraction) << ','
       << sanitize(r.message) << '\n';
  }
  return os.str();
}

nlohmann::json summary_json(const StudyResult& res, const StudyConfig& cfg) {
  nlohmann::json j;
  j["config_hash"] = cfg.hash();
  j["valid"] = res.valid;
  if (!res.valid) j["invalid_reason"] = res.invalid_reason;
  j["rows"] = res.rows.size();
  j["failed_rows"] = res.failed_rows;
  auto& per = j["per_N"] = nlohmann::json::array();
  for (const auto& s : res.per_n)
    per.push_back({{"N", s.N},
                   {"count", s.count},
                   {"failed", s.failed},
                   {"mean_sup_l1_sq", s.mean},
                   {"stderr", s.stderr_},
                   {"stderr_first_half", s.stderr_half},
                   {"mean_pairing_sq", s.pairing_mean},
                   {"pairing_stderr", s.pairing_stderr},
                   {"mean_h_final", s.h_mean}});
  j["fit"] = fit_json(res.fit);
  j["slope"] = res.fit ? nlohmann::json(res.fit->slope) : nlohmann::json(nullptr);
  j["pairing_fit"] = fit_json(res.pairing_fit);
  j["caveat"] = "sup over time is taken over " + std::to_string(cfg.checkpoints) +
                " checkpoints, not the full time grid; the gap to the continuous sup is not quantified";
  return j;
}

nlohmann::json manifest_json(const StudyResult& res, const StudyConfig& cfg) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["schema_version"] = kSchemaVersion;
  j["config_hash"] = cfg.hash();
  j["config"] = cfg.to_json();
  j["master_seed"] = cfg.master_seed;
  j["seed_chain"] = "replicate seed = derive(derive(derive(master, \"study\"), \"N\", N), \"replicate\", rep); "
                    "streams: W = derive(seed, \"W\"), B^i = derive(seed, \"B\", i), X0 = derive(seed, \"X0\"); "
                    "derive(p, tag, i) = splitmix64 mixing of p, fnv1a(tag), i";
  auto& seeds = j["replicate_seeds"] = nlohmann::json::array();
  for (const auto& r : res.rows) seeds.push_back({{"N", r.N}, {"rep", r.rep}, {"seed", hex64(r.seed)}});
  j["runtime_s"] = res.runtime_s;
  double work = 0.0;
  for (int N : cfg.Ns) work += double(N) * N * cfg.steps * cfg.replicates;
  j["workload_pairs"] = work;
  j["timestamp"] = utc_timestamp();
  return j;
}

void write_study(const StudyResult& res, const StudyConfig& cfg, const std::filesystem::path& dir) {
  ensure_directory(dir);
  write_text(dir / "rows.csv", rows_csv(res.rows, cfg.hash()));
  write_json(dir / "summary.json", summary_json(res, cfg));
  std::ostringstream t;
  t << "N,rep,runtime_ms\n";
  for (const auto& r : res.rows) t << r.N << ',' << r.rep << ',' << fmt(r.runtime_ms) << '\n';
  write_text(dir / "timings.csv", t.str());
  write_json(dir / "manifest.json", manifest_json(res, cfg));
}

} // namespace mflab::harness
