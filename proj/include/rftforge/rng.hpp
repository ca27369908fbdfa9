#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rftforge {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL) {
  uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic seed derivation for independent random streams.
inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index = 0) {
  return splitmix64(splitmix64(base) ^ fnv1a64(tag) ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + 1));
}

}  // namespace rftforge
