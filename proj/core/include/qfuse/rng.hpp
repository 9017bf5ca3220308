#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace qfuse {

/// FNV-1a 64-bit over a byte string.
inline uint64_t fnv1a64(std::string_view bytes,
                        uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// FNV-1a 64-bit absorbing one 64-bit word (little-endian byte order).
inline uint64_t fnv1a64_word(uint64_t v, uint64_t h) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ULL;
  }
  return h;
}

inline uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent substream seed from a master seed plus a
/// domain tag and numeric coordinates. Distinct (tag, parts) tuples give
/// uncorrelated streams, so workers seeded this way may run in any order.
inline uint64_t substream_seed(uint64_t master, std::string_view tag,
                               std::initializer_list<uint64_t> parts = {}) {
  uint64_t h = fnv1a64(tag, fnv1a64_word(master, 1469598103934665603ULL));
  for (uint64_t p : parts) h = fnv1a64_word(p, h);
  return splitmix64_next(h);
}

inline std::mt19937_64 substream_engine(uint64_t master, std::string_view tag,
                                        std::initializer_list<uint64_t> parts = {}) {
  return std::mt19937_64(substream_seed(master, tag, parts));
}

}  // namespace qfuse
