#include "mflab/model/presets.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "mflab/model/mollify.hpp"

namespace mflab::model {
namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

double parse_number(const std::string& s, std::string_view ctx) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw PresetError("preset '" + std::string(ctx) + "': '" + s + "' is not a finite number");
  return v;
}

std::string join_names(PresetKind kind) {
  std::string out;
  for (const auto& n : preset_names(kind)) out += (out.empty() ? "" : ", ") + n;
  return out;
}

const char* kind_label(PresetKind k) {
  switch (k) {
  case PresetKind::kernel:
    return "kernel";
  case PresetKind::coefficients:
    return "coefficient";
  case PresetKind::density:
    return "density";
  }
  return "";
}

// Resolves call arguments against the entry's parameter list.
std::map<std::string, double> bind(const PresetCall& call, PresetKind kind, std::string_view text) {
  const PresetEntry* entry = nullptr;
  for (const auto& e : builtin_library())
    if (e.kind == kind && e.name == call.name) entry = &e;
  if (!entry)
    throw PresetError("unknown " + std::string(kind_label(kind)) + " preset '" + call.name + "'; available: " +
                      join_names(kind));
  if (call.positional.size() > entry->params.size())
    throw PresetError("preset '" + std::string(text) + "': too many arguments");
  std::map<std::string, double> v;
  for (const auto& [name, def] : entry->params) v[name] = def;
  for (std::size_t i = 0; i < call.positional.size(); ++i) v[entry->params[i].first] = call.positional[i];
  for (const auto& [name, value] : call.named) {
    if (!v.contains(name)) throw PresetError("preset '" + std::string(text) + "': unknown parameter '" + name + "'");
    v[name] = value;
  }
  return v;
}

int as_dim(double d, std::string_view text) {
  if (d != 1.0 && d != 2.0) throw PresetError("preset '" + std::string(text) + "': d must be 1 or 2");
  return static_cast<int>(d);
}

void require_positive(double v, const char* what, std::string_view text) {
  if (!(v > 0.0)) throw PresetError("preset '" + std::string(text) + "': " + what + " must be positive");
}

} // namespace

PresetCall parse_preset(std::string_view text) {
  PresetCall call;
  const std::string s = trim(text);
  const auto open = s.find('(');
  call.name = trim(std::string_view(s).substr(0, open));
  if (call.name.empty()) throw PresetError("empty preset name in '" + s + "'");
  for (char c : call.name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
      throw PresetError("bad preset name '" + call.name + "'");
  if (open == std::string::npos) return call;
  if (s.back() != ')') throw PresetError("preset '" + s + "': missing ')'");
  const std::string body = s.substr(open + 1, s.size() - open - 2);
  if (trim(body).empty()) return call;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      if (!call.named.empty()) throw PresetError("preset '" + s + "': positional argument after named one");
      call.positional.push_back(parse_number(trim(item), s));
    } else {
      const std::string key = trim(std::string_view(item).substr(0, eq));
      if (key.empty()) throw PresetError("preset '" + s + "': empty parameter name");
      if (call.named.contains(key)) throw PresetError("preset '" + s + "': duplicate parameter '" + key + "'");
      call.named[key] = parse_number(trim(std::string_view(item).substr(eq + 1)), s);
    }
  }
  return call;
}

const std::vector<PresetEntry>& builtin_library() {
  static const std::vector<PresetEntry> lib = {
      {"zero", PresetKind::kernel, {{"d", 1}}, "k = 0"},
      {"odd_bump", PresetKind::kernel, {{"a", 1}, {"r", 1}, {"d", 1}}, "smooth odd bump, attractive, max |k| = a"},
      {"step", PresetKind::kernel, {{"a", 1}, {"r", 1}, {"d", 1}}, "a z/|z| on 0 < |z| < r"},
      {"step_mollified", PresetKind::kernel, {{"a", 1}, {"r", 1}, {"eps", 0.1}}, "step kernel mollified at scale eps (d = 1)"},
      {"const_iso", PresetKind::coefficients, {{"sigma", 1}, {"nu", 1}, {"d", 1}}, "sigma = s I, nu = n I"},
      {"const_nu", PresetKind::coefficients, {{"nu", 1}, {"sigma", 1}, {"d", 1}}, "constant common noise nu I with sigma I"},
      {"rotation_nu", PresetKind::coefficients, {{"sigma", 1}, {"c", 1}}, "d = 2, nu = c (-z2, z1); unbounded"},
      {"shear_nu", PresetKind::coefficients, {{"sigma", 1}, {"c", 1}}, "d = 2, nu = c (sin z2, 0)"},
      {"gauss_init", PresetKind::density, {{"mean", 0}, {"var", 1}, {"d", 1}}, "isotropic Gaussian"},
      {"two_bump", PresetKind::density, {{"sep", 2}, {"var", 0.25}, {"w", 0.5}}, "Gaussian mixture at +-sep/2 (d = 1)"},
      {"bump_init", PresetKind::density, {{"c", 0}, {"r", 1}, {"d", 1}}, "compact smooth bump"},
  };
  return lib;
}

std::vector<std::string> preset_names(PresetKind kind) {
  std::vector<std::string> out;
  for (const auto& e : builtin_library())
    if (e.kind == kind) out.push_back(e.name);
  return out;
}

KernelSpec kernel_preset(std::string_view text) {
  const PresetCall call = parse_preset(text);
  const auto v = bind(call, PresetKind::kernel, text);
  KernelSpec k;
  if (call.name == "zero") {
    k = KernelSpec::zero(as_dim(v.at("d"), text));
  } else if (call.name == "odd_bump" || call.name == "step") {
    require_positive(v.at("r"), "r", text);
    if (v.at("a") < 0.0) throw PresetError("preset '" + std::string(text) + "': a must be nonnegative");
    const int d = as_dim(v.at("d"), text);
    k = call.name == "odd_bump" ? KernelSpec::odd_bump(v.at("a"), v.at("r"), d) : KernelSpec::step(v.at("a"), v.at("r"), d);
  } else {
    require_positive(v.at("r"), "r", text);
    require_positive(v.at("eps"), "eps", text);
    k = mollify_kernel(KernelSpec::step(v.at("a"), v.at("r"), 1), v.at("eps"));
  }
  k.set_name(trim(text));
  return k;
}

CoefficientSet coefficient_preset(std::string_view text) {
  const PresetCall call = parse_preset(text);
  const auto v = bind(call, PresetKind::coefficients, text);
  const double s = v.at("sigma");
  require_positive(s, "sigma", text);
  if (call.name == "const_iso" || call.name == "const_nu") {
    const int d = as_dim(v.at("d"), text);
    return make_coefficients(MatrixField::scaled_identity(d, s, "sigma"), MatrixField::scaled_identity(d, v.at("nu"), "nu"),
                             s * s);
  }
  const double c = v.at("c");
  MatrixField nu;
  nu.rows = 2;
  nu.cols = 1;
  if (call.name == "rotation_nu") {
    nu.eval = [c](double, const double* z, double* out) {
      out[0] = -c * z[1];
      out[1] = c * z[0];
    };
    nu.c1_norm = std::numeric_limits<double>::infinity();
    nu.name = "rotation";
  } else {
    nu.eval = [c](double, const double* z, double* out) {
      out[0] = c * std::sin(z[1]);
      out[1] = 0.0;
    };
    nu.c1_norm = 2.0 * std::abs(c);
    nu.name = "shear";
  }
  return make_coefficients(MatrixField::scaled_identity(2, s, "sigma"), std::move(nu), s * s);
}

InitialDensity density_preset(std::string_view text) {
  const PresetCall call = parse_preset(text);
  const auto v = bind(call, PresetKind::density, text);
  InitialDensity rho;
  if (call.name == "gauss_init") {
    require_positive(v.at("var"), "var", text);
    const int d = as_dim(v.at("d"), text);
    const double m = v.at("mean");
    const double var = v.at("var");
    rho = InitialDensity::gaussian(d, {m, d == 2 ? m : 0.0}, {var, 0.0, 0.0, var});
  } else if (call.name == "two_bump") {
    require_positive(v.at("var"), "var", text);
    const double w = v.at("w");
    if (!(w > 0.0 && w < 1.0)) throw PresetError("preset '" + std::string(text) + "': w must lie in (0, 1)");
    const double h = 0.5 * v.at("sep");
    rho = InitialDensity::mixture(1, {{w, {-h, 0.0}, v.at("var")}, {1.0 - w, {h, 0.0}, v.at("var")}});
  } else {
    require_positive(v.at("r"), "r", text);
    const int d = as_dim(v.at("d"), text);
    rho = InitialDensity::bump(d, {v.at("c"), d == 2 ? v.at("c") : 0.0}, v.at("r"));
  }
  rho.set_name(trim(text));
  return rho;
}

} // namespace mflab::model
