#include "mflab/harness/liouville_study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mflab/entropy/dissipation.hpp"
#include "mflab/entropy/entropy.hpp"
#include "mflab/entropy/inequalities.hpp"
#include "mflab/harness/output.hpp"
#include "mflab/sde/seeds.hpp"
#include "mflab/spde/liouville.hpp"
#include "mflab/spde/picard.hpp"

namespace mflab::harness {

double entropy_bound(double k_sup, double T, double delta) {
  const double c = 16.0 * std::numbers::e * k_sup / delta;
  return c * T * T * std::exp(c * T);
}

LiouvilleReport liouville_study(const StudyConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = build_model(cfg);
  if (s.coeffs.d() != 1) throw ConfigError("liouville: needs d = 1");
  const auto& L = cfg.liouville;
  LiouvilleReport rep;
  const sde::TimeGrid time(cfg.T, L.steps);
  rep.w_seed = sde::derive_seed(cfg.master_seed, "liouville");
  const auto W = sde::make_common_path(time, s.coeffs.m_nu(), rep.w_seed);
  rep.w_fingerprint = W.fingerprint();

  const auto grid = spde::GridSpec::line(L.lo, L.hi, L.cells);
  const auto rho0 = s.rho0.discretize(grid);
  spde::PicardOptions popts;
  popts.tol = cfg.picard_tol;
  popts.max_iter = cfg.picard_max_iter;
  const auto pic = spde::picard_solve(s.kernel, s.coeffs, rho0, W, popts);
  rep.picard_iterations = pic.iterations;
  const auto sol2 = spde::solve_liouville_2(s.kernel, s.coeffs, spde::tensorize(rho0, 2), W);
  if (sol2.w_fingerprint != pic.solution.w_fingerprint) throw std::runtime_error("liouville: common path mismatch");
  rep.max_asymmetry = sol2.max_asymmetry;

  const int stride = L.steps / (L.checkpoints - 1);
  const double delta = s.coeffs.delta;
  double int_fisher = 0.0, int_fluct = 0.0, h0 = 0.0;
  for (int c = 0; c < L.checkpoints; ++c) {
    const int j = c * stride;
    const auto& rho2 = sol2.at_step(j);
    const auto& rho1 = pic.solution.at_step(j);
    const auto g2 = spde::tensorize(rho1, 2);
    LiouvillePoint p;
    p.t = time.t(j);
    const auto ckp = entropy::ckp_check(rho2, g2);
    p.entropy = ckp.vacuous ? INFINITY : ckp.entropy;
    p.infinite = ckp.vacuous;
    p.ckp_margin = ckp.margin;
    p.subadditivity_margin = entropy::subadditivity_check(rho2, rho1).margin;
    const auto dis = entropy::dissipation_terms(rho2, rho1, s.kernel, delta);
    p.fisher = dis.fisher_term;
    p.fluctuation = dis.fluctuation_term;
    p.asymmetry = spde::swap_asymmetry(rho2);
    p.mass2 = rho2.mass();
    p.mass1 = rho1.mass();
    if (c == 0) h0 = p.entropy;
    else {
      const auto& prev = rep.points.back();
      const double dt = p.t - prev.t;
      int_fisher += 0.5 * dt * (p.fisher + prev.fisher);
      int_fluct += 0.5 * dt * (p.fluctuation + prev.fluctuation);
    }
    p.residual = p.entropy - h0 + int_fisher - int_fluct;
    rep.sup_entropy = std::max(rep.sup_entropy, p.entropy);
    rep.max_residual = c == 0 ? p.residual : std::max(rep.max_residual, p.residual);
    rep.points.push_back(p);
  }
  rep.gronwall_c = 16.0 * std::numbers::e * s.kernel.sup_norm() / delta;
  rep.bound = entropy_bound(s.kernel.sup_norm(), cfg.T, delta);
  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::string liouville_csv(const LiouvilleReport& r) {
  std::ostringstream os;
  os << "t,entropy,ckp_margin,subadditivity_margin,fisher,fluctuation,residual,asymmetry,mass2,mass1\n";
  for (const auto& p : r.points)
    os << fmt(p.t) << ',' << fmt(p.entropy) << ',' << fmt(p.ckp_margin) << ',' << fmt(p.subadditivity_margin) << ','
       << fmt(p.fisher) << ',' << fmt(p.fluctuation) << ',' << fmt(p.residual) << ',' << fmt(p.asymmetry) << ','
       << fmt(p.mass2) << ',' << fmt(p.mass1) << '\n';
  return os.str();
}

nlohmann::json liouville_json(const LiouvilleReport& r, const StudyConfig& cfg) {
  double min_ckp = INFINITY, min_sub = INFINITY;
  for (const auto& p : r.points) {
    min_ckp = std::min(min_ckp, p.ckp_margin);
    min_sub = std::min(min_sub, p.subadditivity_margin);
  }
  return {{"config_hash", cfg.hash()},
          {"entropy_t0", r.points.empty() ? 0.0 : r.points.front().entropy},
          {"sup_entropy", r.sup_entropy},
          {"bound", r.bound},
          {"gronwall_c", r.gronwall_c},
          {"min_ckp_margin", min_ckp},
          {"min_subadditivity_margin", min_sub},
          {"max_residual", r.max_residual},
          {"max_asymmetry", r.max_asymmetry},
          {"picard_iterations", r.picard_iterations},
          {"w_seed", hex64(r.w_seed)},
          {"w_fingerprint", hex64(r.w_fingerprint)}};
}

void write_liouville(const LiouvilleReport& r, const StudyConfig& cfg, const std::filesystem::path& dir) {
  ensure_directory(dir);
  write_text(dir / "liouville.csv", liouville_csv(r));
  write_json(dir / "liouville.json", liouville_json(r, cfg));
  write_json(dir / "manifest.json", {{"tool_version", kToolVersion},
                                     {"config_hash", cfg.hash()},
                                     {"config", cfg.to_json()},
                                     {"master_seed", cfg.master_seed},
                                     {"w_seed", hex64(r.w_seed)},
                                     {"runtime_s", r.runtime_s},
                                     {"timestamp", utc_timestamp()}});
}

} // namespace mflab::harness
