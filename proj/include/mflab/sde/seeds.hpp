#pragma once

#include <cstdint>
#include <string_view>

namespace mflab::sde {

std::uint64_t splitmix64(std::uint64_t x);
/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Keyed child seed: splitmix64 mixing of (parent, fnv1a(tag), index).
/// Chains such as master -> "study" -> N -> replicate -> stream are built by
/// repeated application.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0);

} // namespace mflab::sde
