#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace augarena {

// splitmix64; used to derive substream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  return splitmix64(s);
}

// FNV-1a, so substreams can be named by role ("init", "batch-shuffle", ...).
constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

using Rng = std::mt19937_64;

// Named, counter-indexed substream of a master seed. Streams with distinct
// (name, counters...) are independent for our purposes; the derivation is
// pure so any (seed, epoch, batch) point can be replayed in isolation.
inline Rng substream(std::uint64_t master_seed, std::string_view name) {
  return Rng(mix(master_seed, hash_name(name)));
}

inline Rng substream(std::uint64_t master_seed, std::string_view name,
                     std::uint64_t a) {
  return Rng(mix(mix(master_seed, hash_name(name)), a));
}

inline Rng substream(std::uint64_t master_seed, std::string_view name,
                     std::uint64_t a, std::uint64_t b) {
  return Rng(mix(mix(mix(master_seed, hash_name(name)), a), b));
}

// Uniform in [0, n) without modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
  return d(rng);
}

inline double uniform_unit(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace augarena
