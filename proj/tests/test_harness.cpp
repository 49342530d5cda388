#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "mflab/harness/config.hpp"
#include "mflab/harness/liouville_study.hpp"
#include "mflab/harness/output.hpp"
#include "mflab/harness/rate.hpp"
#include "mflab/harness/study.hpp"

using namespace mflab;
using namespace mflab::harness;
using nlohmann::json;

namespace {

json base() {
  return json::parse(R"J({
    "schema_version": 1,
    "model": { "kernel": "odd_bump(a=0.5,r=1)", "coefficients": "const_iso", "initial": "gauss_init(0,1)" },
    "time": { "T": 0.25, "steps": 16 },
    "grid": { "lo": -8, "hi": 8, "cells": 256 },
    "study": { "N": [32, 64, 128], "replicates": 4, "checkpoints": 5, "master_seed": 3 }
  })J");
}

StudyConfig small() { return parse_config(base()); }

} // namespace

TEST_CASE("config parsing is strict") {
  const auto c = small();
  CHECK(c.Ns == std::vector<int>{32, 64, 128});
  CHECK(c.cells == 256);
  CHECK(c.bandwidth == 0.1); // default

  auto j = base();
  j["model"]["colour"] = "blue";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j["extra"] = 1;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j["schema_version"] = 2;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j.erase("schema_version");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j["study"]["N"] = {64, 32};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j["study"]["replicates"] = 1;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j["model"]["kernel"] = "no_such_kernel";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j["time"]["steps"] = "many";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j["study"]["checkpoints"] = 6; // 5 does not divide 16
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = base();
  j["density"] = {{"method", "nearest"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("config round trip and hash") {
  const auto c = small();
  const auto back = parse_config(c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);
  auto d = c;
  d.master_seed = 4;
  CHECK(d.hash() != c.hash());
  auto e = c;
  e.output = "elsewhere";
  CHECK(e.hash() == c.hash());
  for (const char* f : {"study_interacting", "study_nu_zero", "study_k0", "liouville"})
    CHECK_NOTHROW(load_config(std::string(MFLAB_SOURCE_DIR) + "/configs/" + f + ".json"));
  const auto nz = load_config(std::string(MFLAB_SOURCE_DIR) + "/configs/study_nu_zero.json");
  const auto m = build_model(nz);
  const double z = 0.0;
  CHECK(m.coeffs.nu.at(0.0, &z)[0] == 0.0);
  CHECK(m.coeffs.sigma.at(0.0, &z)[0] == 1.0);
}

TEST_CASE("fit_rate") {
  std::vector<RatePoint> p;
  for (int N : {64, 128, 256, 512, 1024}) p.push_back({double(N), 3.0 / N});
  auto f = fit_rate(p);
  CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)));
  CHECK(f.slope_se < 1e-10);
  for (auto& q : p) q.value = 2.5;
  f = fit_rate(p);
  CHECK(std::abs(f.slope) < 1e-12);
  CHECK_THROWS(fit_rate({{1, 1}, {2, 2}}));
  CHECK_THROWS(fit_rate({{1, 1}, {2, 0.0}, {4, 1}}));
  CHECK_THROWS(fit_rate({{1, 1}, {2, -1}, {4, 1}}));

  // 10% multiplicative noise: slope within [-1.2, -0.8] in at least 95% of 1000 draws
  std::mt19937_64 rng(2718);
  std::normal_distribution<double> nd(0.0, 0.1);
  int inside = 0, covered = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    std::vector<RatePoint> q;
    for (int N : {256, 512, 1024, 2048, 4096}) q.push_back({double(N), (1.0 / N) * (1.0 + nd(rng))});
    const auto g = fit_rate(q);
    inside += g.slope >= -1.2 && g.slope <= -0.8;
    covered += g.band_lo <= -1.0 && -1.0 <= g.band_hi;
  }
  CHECK(inside >= 950);
  CHECK(covered >= 800);
}

TEST_CASE("replicate seeds and row determinism") {
  CHECK(replicate_seed(1, 256, 0) == replicate_seed(1, 256, 0));
  CHECK(replicate_seed(1, 256, 0) != replicate_seed(1, 256, 1));
  CHECK(replicate_seed(1, 256, 0) != replicate_seed(1, 512, 0));
  CHECK(replicate_seed(1, 256, 0) != replicate_seed(2, 256, 0));

  const auto c = small();
  const auto a = run_replicate(c, 64, 1);
  const auto b = run_replicate(c, 64, 1);
  REQUIRE(a.ok());
  CHECK(rows_csv({a}, c.hash()) == rows_csv({b}, c.hash()));
  CHECK(a.sup_l1_sq > 0.0);
  CHECK(a.sup_l1_sq >= a.l1_final * a.l1_final);
  CHECK(a.ckp_min_margin >= -1e-8);
  CHECK(a.w_fingerprint != 0);
  CHECK(std::isnan(a.fluctuation));
}

TEST_CASE("stage errors are captured in the row") {
  auto c = small();
  c.picard_max_iter = 1;
  const auto r = run_replicate(c, 32, 0);
  CHECK(r.status == "picard_divergence");
  CHECK(std::isnan(r.sup_l1_sq));
  CHECK_FALSE(r.message.empty());
}

TEST_CASE("aggregation is invariant under row order and marks invalid studies") {
  const auto c = small();
  auto res = run_study(c);
  REQUIRE(res.rows.size() == 12);
  CHECK(res.valid);
  REQUIRE(res.fit.has_value());
  const auto ref = summary_json(res, c).dump();
  const auto csv = rows_csv(res.rows, c.hash());
  std::mt19937_64 rng(1);
  for (int t = 0; t < 3; ++t) {
    std::shuffle(res.rows.begin(), res.rows.end(), rng);
    aggregate(res, c);
    CHECK(summary_json(res, c).dump() == ref);
    CHECK(rows_csv(res.rows, c.hash()) == csv);
  }
  CHECK(summary_json(res, c)["slope"].is_number());

}

TEST_CASE("more than 20% failed rows invalidates the study") {
  const auto c = small();
  auto res = run_study(c);
  auto two = res;
  for (int i = 0; i < 2; ++i) two.rows[i].status = "error"; // 2/12 < 20%
  aggregate(two, c);
  CHECK(two.valid);
  auto three = res;
  for (int i = 0; i < 3; ++i) three.rows[i].status = "error"; // 3/12 = 25%
  aggregate(three, c);
  CHECK_FALSE(three.valid);
  CHECK(three.failed_rows == 3);
}

TEST_CASE("study outputs") {
  const auto c = small();
  const auto res = run_study(c);
  const auto dir = std::filesystem::temp_directory_path() / "mflab_test_study";
  std::filesystem::remove_all(dir);
  write_study(res, c, dir);
  for (const char* f : {"rows.csv", "summary.json", "manifest.json", "timings.csv"})
    CHECK(std::filesystem::exists(dir / f));
  std::ifstream in(dir / "rows.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("N,rep,seed,w_fingerprint,config_hash,status,sup_l1_sq", 0) == 0);
  CHECK(header.find("runtime") == std::string::npos);
  std::ifstream mj(dir / "manifest.json");
  const auto m = json::parse(mj);
  CHECK(m["config_hash"] == c.hash());
  CHECK(m["replicate_seeds"].size() == 12);
  CHECK(m.contains("timestamp"));
  CHECK(fmt(0.1) == "0.10000000000000001");
  CHECK(fmt(INFINITY) == "inf");
}

TEST_CASE("zero-kernel study recovers the i.i.d. rate") {
  const auto c = load_config(std::string(MFLAB_SOURCE_DIR) + "/configs/study_k0.json");
  const auto res = run_study(c);
  REQUIRE(res.valid);
  REQUIRE(res.fit.has_value());
  CAPTURE(res.fit->slope);
  CHECK(res.fit->slope >= -1.3);
  CHECK(res.fit->slope <= -0.7);
  REQUIRE(res.pairing_fit.has_value());
  CHECK(res.pairing_fit->slope < -0.5);
}

TEST_CASE("doubling M halves the variance of the per-N means") {
  auto j = base();
  j["model"]["kernel"] = "zero";
  j["study"] = {{"N", {64, 128, 256}}, {"replicates", 128}, {"checkpoints", 3}, {"master_seed", 5}};
  j["time"] = {{"T", 0.2}, {"steps", 8}};
  const auto c = parse_config(j);
  const auto res = run_study(c);
  REQUIRE(res.valid);
  double ratio = 0.0;
  for (const auto& s : res.per_n) ratio += (s.stderr_half * s.stderr_half) / (s.stderr_ * s.stderr_) / 3.0;
  CAPTURE(ratio);
  CHECK(ratio >= 2.0 / 1.3);
  CHECK(ratio <= 2.0 * 1.3);
}

TEST_CASE("N-scaled fluctuation term stays bounded as N doubles") {
  auto j = base();
  j["study"] = {{"N", {256, 512, 1024, 2048}}, {"replicates", 8}, {"checkpoints", 5}, {"master_seed", 9}};
  j["diagnostics"] = {{"fluctuation", true}};
  const auto c = parse_config(j);
  // one replicate is an O(1) random variable; compare replicate means
  std::vector<double> est;
  for (int N : c.Ns) {
    double m = 0.0;
    for (int r = 0; r < c.replicates; ++r) {
      const auto row = run_replicate(c, N, r);
      REQUIRE(row.ok());
      m += row.fluctuation / c.replicates;
    }
    est.push_back(m);
    MESSAGE(N << " " << m);
  }
  const auto [lo, hi] = std::minmax_element(est.begin(), est.end());
  CHECK(*lo > 0.0);
  CHECK(*hi / *lo < 2.0);
}

TEST_CASE("Liouville study: exact start, zero kernel and the entropy bound") {
  auto c = load_config(std::string(MFLAB_SOURCE_DIR) + "/configs/liouville.json");
  c.liouville.cells = 96;
  c.liouville.steps = 50;
  c.liouville.checkpoints = 11;
  const auto r = liouville_study(c);
  REQUIRE(r.points.size() == 11);
  CHECK(r.points.front().entropy == 0.0);
  CHECK(r.sup_entropy <= r.bound);
  CHECK(r.bound == doctest::Approx(entropy_bound(0.25, 0.5, 1.0)));
  for (const auto& p : r.points) {
    CHECK(p.ckp_margin >= -1e-8);
    CHECK(p.subadditivity_margin >= -1e-6);
    CHECK(p.fisher >= 0.0);
    CHECK(p.fluctuation >= 0.0);
  }

  c.kernel = "zero";
  const auto z = liouville_study(c);
  CHECK(z.sup_entropy <= 1e-12);
  CHECK(entropy_bound(0.0, 0.5, 1.0) == 0.0);
}
