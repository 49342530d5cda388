#include "mflab/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "mflab/model/presets.hpp"
#include "mflab/sde/seeds.hpp"

namespace mflab::harness {
namespace {

using nlohmann::json;

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items())
    if (!allowed.contains(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_number(const json& obj, const char* key, double& out, const std::string& where) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  out = obj.at(key).get<double>();
}

void read_int(const json& obj, const char* key, int& out, const std::string& where) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  out = obj.at(key).get<int>();
}

} // namespace

json StudyConfig::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = {{"kernel", kernel}, {"coefficients", coefficients}, {"initial", initial}};
  j["time"] = {{"T", T}, {"steps", steps}};
  j["grid"] = {{"lo", lo}, {"hi", hi}, {"cells", cells}};
  j["study"] = {{"N", Ns}, {"replicates", replicates}, {"checkpoints", checkpoints}, {"master_seed", master_seed}};
  j["density"] = {{"method", method == sde::DensityMethod::kde ? "kde" : "histogram"}, {"bandwidth", bandwidth}};
  j["picard"] = {{"tol", picard_tol}, {"max_iter", picard_max_iter}};
  j["modes"] = {{"nu_zero", nu_zero}};
  j["diagnostics"] = {{"fluctuation", fluctuation}};
  j["liouville"] = {{"lo", liouville.lo},
                    {"hi", liouville.hi},
                    {"cells", liouville.cells},
                    {"steps", liouville.steps},
                    {"checkpoints", liouville.checkpoints}};
  j["output"] = output;
  return j;
}

std::string StudyConfig::hash() const {
  json j = to_json();
  // The output location does not change results.
  j.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(sde::fnv1a(j.dump())));
  return buf;
}

StudyConfig parse_config(const json& j) {
  only_keys(j, "config",
            {"schema_version", "model", "time", "grid", "study", "density", "picard", "modes", "diagnostics", "liouville",
             "output"});
  if (!j.contains("schema_version")) throw ConfigError("config: missing schema_version");
  if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion)
    throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  StudyConfig c;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    only_keys(m, "model", {"kernel", "coefficients", "initial"});
    read(m, "kernel", c.kernel, "model");
    read(m, "coefficients", c.coefficients, "model");
    read(m, "initial", c.initial, "model");
  }
  if (j.contains("time")) {
    const auto& t = j.at("time");
    only_keys(t, "time", {"T", "steps"});
    read_number(t, "T", c.T, "time");
    read_int(t, "steps", c.steps, "time");
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    only_keys(g, "grid", {"lo", "hi", "cells"});
    read_number(g, "lo", c.lo, "grid");
    read_number(g, "hi", c.hi, "grid");
    read_int(g, "cells", c.cells, "grid");
  }
  if (j.contains("study")) {
    const auto& s = j.at("study");
    only_keys(s, "study", {"N", "replicates", "checkpoints", "master_seed"});
    read(s, "N", c.Ns, "study");
    read_int(s, "replicates", c.replicates, "study");
    read_int(s, "checkpoints", c.checkpoints, "study");
    if (s.contains("master_seed")) {
      if (!s.at("master_seed").is_number_integer() || s.at("master_seed").is_number_float())
        throw ConfigError("study.master_seed: expected a nonnegative integer");
      if (s.at("master_seed").is_number_unsigned()) c.master_seed = s.at("master_seed").get<std::uint64_t>();
      else {
        const auto v = s.at("master_seed").get<std::int64_t>();
        if (v < 0) throw ConfigError("study.master_seed: expected a nonnegative integer");
        c.master_seed = static_cast<std::uint64_t>(v);
      }
    }
  }
  if (j.contains("density")) {
    const auto& d = j.at("density");
    only_keys(d, "density", {"method", "bandwidth"});
    std::string method = "kde";
    read(d, "method", method, "density");
    if (method == "kde") c.method = sde::DensityMethod::kde;
    else if (method == "histogram") c.method = sde::DensityMethod::histogram;
    else throw ConfigError("density.method: expected 'kde' or 'histogram'");
    read_number(d, "bandwidth", c.bandwidth, "density");
  }
  if (j.contains("picard")) {
    const auto& p = j.at("picard");
    only_keys(p, "picard", {"tol", "max_iter"});
    read_number(p, "tol", c.picard_tol, "picard");
    read_int(p, "max_iter", c.picard_max_iter, "picard");
  }
  if (j.contains("modes")) {
    const auto& m = j.at("modes");
    only_keys(m, "modes", {"nu_zero"});
    read(m, "nu_zero", c.nu_zero, "modes");
  }
  if (j.contains("diagnostics")) {
    const auto& m = j.at("diagnostics");
    only_keys(m, "diagnostics", {"fluctuation"});
    read(m, "fluctuation", c.fluctuation, "diagnostics");
  }
  if (j.contains("liouville")) {
    const auto& l = j.at("liouville");
    only_keys(l, "liouville", {"lo", "hi", "cells", "steps", "checkpoints"});
    read_number(l, "lo", c.liouville.lo, "liouville");
    read_number(l, "hi", c.liouville.hi, "liouville");
    read_int(l, "cells", c.liouville.cells, "liouville");
    read_int(l, "steps", c.liouville.steps, "liouville");
    read_int(l, "checkpoints", c.liouville.checkpoints, "liouville");
  }
  read(j, "output", c.output, "config");
  check_config(c);
  return c;
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void check_config(const StudyConfig& c) {
  if (!(c.T > 0.0) || c.steps < 1) throw ConfigError("time: need T > 0 and steps >= 1");
  if (!(c.hi > c.lo) || c.cells < 2) throw ConfigError("grid: need hi > lo and cells >= 2");
  if (c.Ns.empty()) throw ConfigError("study.N: empty list");
  for (std::size_t i = 0; i < c.Ns.size(); ++i) {
    if (c.Ns[i] < 1) throw ConfigError("study.N: entries must be positive");
    if (i > 0 && c.Ns[i] <= c.Ns[i - 1]) throw ConfigError("study.N: must be strictly increasing");
  }
  if (c.replicates < 2) throw ConfigError("study.replicates: need M >= 2");
  if (c.checkpoints < 2 || c.steps % (c.checkpoints - 1) != 0)
    throw ConfigError("study.checkpoints: checkpoints - 1 must divide time.steps");
  if (c.bandwidth < 0.0) throw ConfigError("density.bandwidth: must be nonnegative");
  if (c.picard_max_iter < 1) throw ConfigError("picard.max_iter: must be >= 1");
  const auto& l = c.liouville;
  if (!(l.hi > l.lo) || l.cells < 2 || l.steps < 1 || l.checkpoints < 2 || l.steps % (l.checkpoints - 1) != 0)
    throw ConfigError("liouville: need hi > lo, cells >= 2 and checkpoints - 1 dividing steps");
  try {
    (void)build_model(c);
  } catch (const model::PresetError& e) {
    throw ConfigError(e.what());
  }
}

model::CoefficientSet without_common_noise(const model::CoefficientSet& coeffs) {
  model::CoefficientSet c = coeffs;
  c.nu = model::MatrixField::constant_matrix(coeffs.nu.rows, coeffs.nu.cols,
                                             std::vector<double>(static_cast<std::size_t>(coeffs.nu.rows * coeffs.nu.cols), 0.0),
                                             "nu=0");
  c.c1_bound = c.sigma.c1_norm;
  return c;
}

ModelSetup build_model(const StudyConfig& cfg) {
  ModelSetup s{model::kernel_preset(cfg.kernel), model::coefficient_preset(cfg.coefficients),
               model::density_preset(cfg.initial), {}, sde::TimeGrid(cfg.T, cfg.steps)};
  if (cfg.nu_zero) s.coeffs = without_common_noise(s.coeffs);
  const int d = s.coeffs.d();
  if (s.kernel.dim() != d || s.rho0.dim() != d) throw ConfigError("model: kernel, coefficients and initial density disagree on d");
  s.grid = d == 1 ? spde::GridSpec::line(cfg.lo, cfg.hi, cfg.cells) : spde::GridSpec::square(cfg.lo, cfg.hi, cfg.cells);
  return s;
}

} // namespace mflab::harness
