#pragma once

#include <cmath>
#include <cstdint>

namespace trapsim {

// 64-bit finalizer (SplitMix64). Full avalanche: every input bit affects
// every output bit.
constexpr uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds v into the running hash h. Order-sensitive.
constexpr uint64_t hash_combine(uint64_t h, uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Distinct tags keep draws from different subsystems on disjoint streams
// even when (seed, replica) coincide.
enum class StreamPurpose : uint64_t {
  walk = 0x57414c4bULL,
  marks = 0x4d41524bULL,
  env = 0x454e5653ULL,
  limit = 0x4c494d54ULL,
  aux = 0x41555835ULL,
};

// Counter-based stream: draw i is a keyed hash of (key, i). State is two
// words, streams are cheap to derive, and a stream can be replayed or
// continued exactly by carrying (key, counter).
class RngStream {
 public:
  using result_type = uint64_t;

  explicit RngStream(uint64_t key) : key_(key) {}

  static RngStream make(uint64_t seed, uint64_t replica, StreamPurpose purpose) {
    uint64_t k = mix64(seed);
    k = hash_combine(k, static_cast<uint64_t>(purpose));
    k = hash_combine(k, replica);
    return RngStream(k);
  }

  static constexpr uint64_t min() { return 0; }
  static constexpr uint64_t max() { return ~0ULL; }
  uint64_t operator()() { return next_u64(); }

  uint64_t next_u64() {
    uint64_t z = mix64(counter_++ + 0x9e3779b97f4a7c15ULL);
    return mix64(z ^ key_);
  }

  // Uniform on the open interval (0,1); endpoints are unreachable.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exp(1).
  double next_exp() { return -std::log(next_unit()); }

  // Uniform on {0,...,m-1} via multiply-shift (bias < m * 2^-64).
  uint64_t next_below(uint64_t m) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * m) >> 64);
  }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

// Converts a hash value to a uniform in (0,1). Shared by RngStream and the
// pure site-keyed environment lookups.
constexpr double unit_from_hash(uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace trapsim
