#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace mflab::harness {

/// Shortest round-trip decimal ("%.17g"); inf and nan spelled out.
std::string fmt(double v);
/// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

void ensure_directory(const std::filesystem::path& dir);
/// Writes through a temporary file and renames it into place.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// ISO-8601 UTC wall clock, for manifests only.
std::string utc_timestamp();

} // namespace mflab::harness
