#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mflab/model/coefficients.hpp"
#include "mflab/model/initial_density.hpp"
#include "mflab/model/kernel.hpp"

namespace mflab::model {

/// Parsed `name(v1, v2, key=value, ...)`.
struct PresetCall {
  std::string name;
  std::vector<double> positional;
  std::map<std::string, double> named;
};

class PresetError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Throws PresetError on malformed text.
PresetCall parse_preset(std::string_view text);

enum class PresetKind { kernel, coefficients, density };

struct PresetEntry {
  std::string name;
  PresetKind kind;
  /// Parameter names with defaults, in positional order.
  std::vector<std::pair<std::string, double>> params;
  std::string summary;
};

const std::vector<PresetEntry>& builtin_library();
std::vector<std::string> preset_names(PresetKind kind);

/// Unknown names raise PresetError listing the available names.
KernelSpec kernel_preset(std::string_view text);
CoefficientSet coefficient_preset(std::string_view text);
InitialDensity density_preset(std::string_view text);

} // namespace mflab::model
