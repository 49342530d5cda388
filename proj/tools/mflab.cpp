// mflab command line: validate, simulate, solve, entropy, study, liouville, rate.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mflab/entropy/entropy.hpp"
#include "mflab/entropy/inequalities.hpp"
#include "mflab/harness/config.hpp"
#include "mflab/harness/liouville_study.hpp"
#include "mflab/harness/output.hpp"
#include "mflab/harness/rate.hpp"
#include "mflab/harness/study.hpp"
#include "mflab/model/presets.hpp"
#include "mflab/model/validate.hpp"
#include "mflab/sde/particles.hpp"
#include "mflab/sde/seeds.hpp"
#include "mflab/sde/trajectory_io.hpp"
#include "mflab/spde/diagnostics.hpp"
#include "mflab/spde/picard.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace mflab;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kInvalid = 1, kRuntime = 2, kUsage = 64;

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

harness::StudyConfig config_or_default(const std::string& path) {
  return path.empty() ? harness::StudyConfig{} : harness::load_config(path);
}

const model::PresetEntry* find_preset(const std::string& text) {
  const auto name = model::parse_preset(text).name;
  for (const auto& e : model::builtin_library())
    if (e.name == name) return &e;
  return nullptr;
}

void print_check(const model::CheckResult& c) {
  std::printf("  %-22s %s  worst=%.3e observed=%.6g at (%.3g, %.3g) t=%.3g\n", c.name.c_str(), c.pass ? "PASS" : "FAIL",
              c.worst, c.observed, c.where[0], c.where[1], c.time);
}

int cmd_validate(const std::string& cfg_path, const std::string& preset, std::string kernel, std::string coeffs,
                 std::string initial, double tol) {
  if (!cfg_path.empty()) {
    const auto c = harness::load_config(cfg_path);
    kernel = kernel.empty() ? c.kernel : kernel;
    coeffs = coeffs.empty() ? c.coefficients : coeffs;
    initial = initial.empty() ? c.initial : initial;
  }
  if (!preset.empty()) {
    const auto* e = find_preset(preset);
    if (!e) {
      // produces the "available: ..." message
      (void)model::coefficient_preset(preset);
    }
    if (e->kind == model::PresetKind::kernel) kernel = preset;
    else if (e->kind == model::PresetKind::coefficients) coeffs = preset;
    else initial = preset;
  }
  if (coeffs.empty()) coeffs = "const_iso";
  const auto cs = model::coefficient_preset(coeffs);
  const int d = cs.d();
  const auto rho0 = model::density_preset(initial.empty() ? "gauss_init(d=" + std::to_string(d) + ")" : initial);
  bool ok = true;

  model::ProbePlan plan;
  const auto rep = model::validate(cs, rho0, plan, tol);
  std::printf("coefficients %s (d=%d, delta=%g, C1 bound=%g)\n", coeffs.c_str(), d, cs.delta, cs.c1_bound);
  for (const auto& c : rep.structural) print_check(c);
  std::printf("initial density %s\n", rho0.name().c_str());
  for (const auto& c : rep.density) print_check(c);
  ok = ok && rep.pass();

  if (!kernel.empty()) {
    const auto k = model::kernel_preset(kernel);
    if (k.dim() != d) throw Usage("kernel and coefficients disagree on d");
    const double sup = model::kernel_sup_probe(k, 4.0, 1000, plan.seed);
    const bool sup_ok = sup <= k.sup_norm() * (1.0 + 1e-12);
    const double l2 = d == 1 ? model::kernel_l2_quadrature(k) : model::kernel_l2_quadrature(k, 10.0, 800);
    const bool l2_ok = l2 <= k.l2_norm() * (1.0 + 1e-3) + 1e-12;
    std::printf("kernel %s\n  %-22s %s  probe=%.6g declared=%.6g\n  %-22s %s  quadrature=%.6g declared=%.6g\n",
                k.name().c_str(), "sup_norm", sup_ok ? "PASS" : "FAIL", sup, k.sup_norm(), "l2_norm",
                l2_ok ? "PASS" : "FAIL", l2, k.l2_norm());
    ok = ok && sup_ok && l2_ok;
    if (!k.is_zero()) {
      const double R = std::max(6.0, rho0.effective_radius());
      const auto grid = d == 1 ? spde::GridSpec::line(-R, R, 512) : spde::GridSpec::square(-R, R, 64);
      const auto field = rho0.discretize(grid);
      std::vector<double> probes;
      for (int i = 0; i <= 20; ++i)
        for (int j = 0; j <= (d == 1 ? 0 : 20); ++j) {
          probes.push_back(-4.0 + 0.4 * i);
          if (d == 2) probes.push_back(-4.0 + 0.4 * j);
        }
      const auto cr = entropy::cancellation_check(k, field, probes);
      const bool c_ok = cr.max_integral <= 1e-10 && cr.psi_sup <= cr.psi_bound;
      std::printf("  %-22s %s  max|int psi rho|=%.3e sup|psi|=%.4g bound=%.4g\n", "kernel_cancellation",
                  c_ok ? "PASS" : "FAIL", cr.max_integral, cr.psi_sup, cr.psi_bound);
      ok = ok && c_ok;
    }
  }
  std::printf("%s\n", ok ? "valid" : "INVALID");
  return ok ? kOk : kInvalid;
}

int cmd_simulate(const harness::StudyConfig& cfg, int N, int rep, int stride, const std::string& format,
                 const fs::path& out) {
  const auto s = harness::build_model(cfg);
  if (N < 1) throw Usage("--N must be positive");
  const auto seed = harness::replicate_seed(cfg.master_seed, N, rep);
  const auto bundle = sde::make_bundle(s.time, N, s.coeffs.m(), s.coeffs.m_nu(), seed);
  sde::SimulationOptions o;
  o.stride = stride;
  const auto tr = sde::simulate_particles(s.kernel, s.coeffs, s.rho0, bundle, o);
  harness::ensure_directory(out);
  if (format == "csv") {
    std::ofstream os(out / "trajectory.csv");
    sde::write_trajectory_csv(tr, os);
  } else {
    std::ofstream os(out / "trajectory.bin", std::ios::binary);
    sde::write_trajectory_binary(tr, os);
  }
  harness::write_json(out / "manifest.json", {{"tool_version", harness::kToolVersion},
                                              {"config_hash", cfg.hash()},
                                              {"N", N},
                                              {"rep", rep},
                                              {"seed", harness::hex64(seed)},
                                              {"w_fingerprint", harness::hex64(tr.w_fingerprint)},
                                              {"timestamp", harness::utc_timestamp()}});
  std::printf("simulated N=%d, %d snapshots, seed %s -> %s\n", N, tr.snapshots(), harness::hex64(seed).c_str(),
              out.string().c_str());
  return kOk;
}

int cmd_solve(const harness::StudyConfig& cfg, int rep, const fs::path& out) {
  const auto s = harness::build_model(cfg);
  const auto seed = sde::derive_seed(cfg.master_seed, "solve", static_cast<std::uint64_t>(rep));
  const auto W = sde::make_common_path(s.time, s.coeffs.m_nu(), seed);
  spde::PicardOptions o;
  o.tol = cfg.picard_tol;
  o.max_iter = cfg.picard_max_iter;
  const auto rho0 = s.rho0.discretize(s.grid);
  const auto res = spde::picard_solve(s.kernel, s.coeffs, rho0, W, o);
  spde::DiagnosticBounds b;
  b.l2_cap = spde::l2_cap(s.kernel, s.coeffs, rho0.l2_norm(), cfg.T);
  b.moment_cap = spde::moment_cap(s.kernel, s.coeffs, rho0.second_moment(), cfg.T, W.sup_norm());
  const auto diag = spde::diagnostics_check(res.solution, b);
  harness::ensure_directory(out);
  {
    std::ofstream os(out / "final.csv");
    res.solution.final().write_csv(os);
  }
  {
    std::ofstream os(out / "diagnostics.csv");
    spde::write_diagnostics_csv(res.solution, os);
  }
  harness::write_json(out / "solve.json", {{"config_hash", cfg.hash()},
                                           {"w_seed", harness::hex64(seed)},
                                           {"w_fingerprint", harness::hex64(W.fingerprint())},
                                           {"picard_increments", res.increments},
                                           {"picard_iterations", res.iterations},
                                           {"picard_tol", res.tol},
                                           {"diagnostics_pass", diag.pass},
                                           {"sup_l2", diag.sup_l2},
                                           {"l2_cap", b.l2_cap},
                                           {"sup_m2", diag.sup_m2},
                                           {"moment_cap", b.moment_cap},
                                           {"min_value", diag.min_value},
                                           {"mass_defect", diag.mass_defect},
                                           {"message", diag.message}});
  std::printf("picard: %d iterations, last increment %.3e; diagnostics %s%s%s\n", res.iterations,
              res.increments.back(), diag.pass ? "pass" : "FAIL", diag.message.empty() ? "" : ": ",
              diag.message.c_str());
  return diag.pass ? kOk : kInvalid;
}

spde::DensityField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Usage("cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  in.seekg(0);
  if (std::string(magic, 4) == "MFDF") return spde::DensityField::read_binary(in);
  return spde::DensityField::read_csv(in);
}

int cmd_entropy(const std::string& f_path, const std::string& g_path) {
  const auto f = read_field(f_path);
  const auto g = read_field(g_path);
  const auto h = entropy::relative_entropy(f, g);
  const auto ckp = entropy::ckp_check(f, g);
  nlohmann::json j{{"relative_entropy", h.infinite ? nlohmann::json("inf") : nlohmann::json(h.value)},
                   {"mass_on_small_g", h.mass_on_small_g},
                   {"l1", ckp.l1},
                   {"ckp_margin", ckp.margin}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_study(harness::StudyConfig cfg, const fs::path& out, bool quiet) {
  const auto res = harness::run_study(cfg, [&](const harness::StudyRow& r) {
    if (!quiet)
      std::fprintf(stderr, "N=%d rep=%d %s sup_l1_sq=%.4e (%.0f ms)\n", r.N, r.rep, r.status.c_str(), r.sup_l1_sq,
                   r.runtime_ms);
  });
  harness::write_study(res, cfg, out);
  std::printf("%8s %6s %14s %12s\n", "N", "count", "mean_sup_l1^2", "stderr");
  for (const auto& s : res.per_n) std::printf("%8d %6d %14.6e %12.4e\n", s.N, s.count, s.mean, s.stderr_);
  if (res.fit)
    std::printf("slope %.4f  intercept %.4f  band [%.4f, %.4f]\n", res.fit->slope, res.fit->intercept,
                res.fit->band_lo, res.fit->band_hi);
  std::printf("study %s, %d failed rows, %.1f s -> %s\n", res.valid ? "valid" : "INVALID", res.failed_rows,
              res.runtime_s, out.string().c_str());
  return res.valid ? kOk : kRuntime;
}

int cmd_liouville(const harness::StudyConfig& cfg, const fs::path& out) {
  const auto r = harness::liouville_study(cfg);
  harness::write_liouville(r, cfg, out);
  const auto j = harness::liouville_json(r, cfg);
  std::printf("H(0)=%.3e  sup H=%.6e  bound=%.6g  min CKP margin=%.3e  min subadditivity margin=%.3e\n",
              j["entropy_t0"].get<double>(), r.sup_entropy, r.bound, j["min_ckp_margin"].get<double>(),
              j["min_subadditivity_margin"].get<double>());
  return kOk;
}

int cmd_rate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Usage("cannot open " + path);
  std::vector<harness::RatePoint> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ls(line);
    harness::RatePoint p;
    if (!(ls >> p.N >> p.value)) {
      if (pts.empty()) continue; // header
      throw Usage("rate: cannot parse line '" + line + "'");
    }
    pts.push_back(p);
  }
  const auto f = harness::fit_rate(pts);
  std::printf("slope %.2f\nintercept %.6g\nslope_se %.4g\nband [%.4f, %.4f]\npoints %d\n", f.slope, f.intercept,
              f.slope_se, f.band_lo, f.band_hi, f.points);
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"mflab: conditional propagation of chaos with common noise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", harness::kToolVersion);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = OpenMP default)");

  std::string cfg_path, out_dir, preset, kernel, coeffs, initial, f_path, g_path, input, format = "csv";
  double tol = 1e-6;
  int N = 256, rep = 0, stride = 1;
  long long seed = -1;
  bool quiet = false;

  auto* validate = app.add_subcommand("validate", "check presets against their declared bounds");
  validate->add_option("--config", cfg_path, "config file")->check(CLI::ExistingFile);
  validate->add_option("--preset", preset, "any preset, e.g. const_iso or odd_bump(a=1)");
  validate->add_option("--kernel", kernel);
  validate->add_option("--coefficients", coeffs);
  validate->add_option("--initial", initial);
  validate->add_option("--tol", tol, "tolerance for structural checks");

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* o = sub->add_option("--config", cfg_path, "config file")->check(CLI::ExistingFile);
    if (need_config) o->required();
    sub->add_option("--out", out_dir, "output directory (default: config output)");
    sub->add_option("--seed", seed, "override master_seed");
  };
  auto* simulate = app.add_subcommand("simulate", "particle system for one (N, replicate)");
  add_common(simulate, false);
  simulate->add_option("--N", N);
  simulate->add_option("--rep", rep);
  simulate->add_option("--stride", stride);
  simulate->add_option("--format", format)->check(CLI::IsMember({"csv", "bin"}));

  auto* solve = app.add_subcommand("solve", "nonlinear SPDE along one common path");
  add_common(solve, false);
  solve->add_option("--rep", rep, "common path index");

  auto* ent = app.add_subcommand("entropy", "relative entropy and L1 between two density files");
  ent->add_option("--f", f_path)->required()->check(CLI::ExistingFile);
  ent->add_option("--g", g_path)->required()->check(CLI::ExistingFile);

  auto* study = app.add_subcommand("study", "convergence-rate study over N and replicates");
  add_common(study, true);
  study->add_flag("--quiet", quiet);

  auto* liou = app.add_subcommand("liouville", "N = 2 Liouville entropy time series");
  add_common(liou, false);

  auto* rate = app.add_subcommand("rate", "fit log-log slope to N,value points");
  rate->add_option("--input", input)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    auto load = [&] {
      auto c = config_or_default(cfg_path);
      if (seed >= 0) c.master_seed = static_cast<std::uint64_t>(seed);
      if (!out_dir.empty()) c.output = out_dir;
      harness::check_config(c);
      return c;
    };
    if (*validate) return cmd_validate(cfg_path, preset, kernel, coeffs, initial, tol);
    if (*simulate) {
      auto c = load();
      return cmd_simulate(c, N, rep, stride, format, c.output);
    }
    if (*solve) {
      auto c = load();
      return cmd_solve(c, rep, c.output);
    }
    if (*ent) return cmd_entropy(f_path, g_path);
    if (*study) {
      auto c = load();
      return cmd_study(c, c.output, quiet);
    }
    if (*liou) {
      auto c = load();
      return cmd_liouville(c, c.output);
    }
    if (*rate) return cmd_rate(input);
  } catch (const model::PresetError& e) {
    std::fprintf(stderr, "error: %s\n%s", e.what(), app.help().c_str());
    return kUsage;
  } catch (const harness::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const Usage& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
