#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "trapsim/errors.hpp"
#include "trapsim/rng.hpp"

namespace trapsim {

// Lattice sites live in Z^d for d in [1, kMaxDim]. Unused lanes stay zero so
// sites compare and hash uniformly regardless of d.
inline constexpr int kMaxDim = 4;
using Site = std::array<int64_t, kMaxDim>;

// Walks abort once any coordinate leaves this range.
inline constexpr int64_t kCoordLimit = int64_t{1} << 62;

inline Site origin_site() { return Site{0, 0, 0, 0}; }

inline void check_dim(int d) {
  if (d < 1 || d > kMaxDim)
    throw SimulationError("lattice dimension must be in [1, " +
                          std::to_string(kMaxDim) + "], got " + std::to_string(d));
}

// Mixes the two's-complement 64-bit coordinate values into one hash,
// coordinate 0 first. This is the documented site-keying function: identical
// on every platform since it operates on values, not memory bytes.
inline uint64_t site_hash(uint64_t h, const Site& x, int dim) {
  for (int i = 0; i < dim; ++i)
    h = hash_combine(h, static_cast<uint64_t>(x[i]));
  return h;
}

// Open-addressing site -> count map (power-of-two capacity, linear probing).
// Paths of heavy-tailed walks visit up to ~10^6 distinct sites; node-based
// maps thrash on that.
class SiteMap {
 public:
  explicit SiteMap(int dim, size_t expected = 16) : dim_(dim) {
    size_t cap = 16;
    while (cap * 10 < expected * 16) cap <<= 1;
    slots_.resize(cap);
  }

  int dim() const { return dim_; }
  size_t size() const { return size_; }

  // Returns the count after increment.
  int64_t increment(const Site& key) {
    if ((size_ + 1) * 10 >= slots_.size() * 7) grow();
    Slot& s = locate(key);
    if (!s.used) {
      s.used = true;
      s.key = key;
      s.value = 0;
      ++size_;
    }
    return ++s.value;
  }

  bool contains(const Site& key) const {
    const Slot& s = locate_const(key);
    return s.used;
  }

  int64_t value_or_zero(const Site& key) const {
    const Slot& s = locate_const(key);
    return s.used ? s.value : 0;
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const Slot& s : slots_)
      if (s.used) fn(s.key, s.value);
  }

 private:
  struct Slot {
    Site key;
    int64_t value = 0;
    bool used = false;
  };

  Slot& locate(const Site& key) {
    size_t mask = slots_.size() - 1;
    size_t i = site_hash(0x736974656d617030ULL, key, dim_) & mask;
    while (slots_[i].used && slots_[i].key != key) i = (i + 1) & mask;
    return slots_[i];
  }

  const Slot& locate_const(const Site& key) const {
    size_t mask = slots_.size() - 1;
    size_t i = site_hash(0x736974656d617030ULL, key, dim_) & mask;
    while (slots_[i].used && slots_[i].key != key) i = (i + 1) & mask;
    return slots_[i];
  }

  void grow() {
    std::vector<Slot> old;
    old.swap(slots_);
    slots_.resize(old.size() * 2);
    for (const Slot& s : old) {
      if (!s.used) continue;
      Slot& dst = locate(s.key);
      dst = s;
    }
  }

  int dim_;
  size_t size_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace trapsim
