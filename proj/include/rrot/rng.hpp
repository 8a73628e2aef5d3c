#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rrot {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// FNV-1a hash of a stream name.
inline std::uint64_t name_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  return h;
}

/// Seed for job `index` of the named stream under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  return mix64(mix64(master ^ name_hash(stream)) + index);
}

inline Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  return Rng(derive_seed(master, stream, index));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace rrot
