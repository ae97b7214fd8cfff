#pragma once

#include <cstdint>

#include "trapsim/lattice.hpp"
#include "trapsim/rng.hpp"
#include "trapsim/tail_law.hpp"

namespace trapsim {

// Lazy trap environment over Z^d: tau_at(x) is a pure function of
// (seed, x), so the full (infinite) environment is reconstructible from
// (law, seed, d) and is safe to share across any number of threads.
//
// Keying: seed is mixed with the env stream tag, then the coordinates are
// folded in via site_hash; the resulting 64 bits feed the inverse CDF of the
// law. No table is kept -- recomputation is the contract.
class Environment {
 public:
  Environment(TailLaw law, uint64_t seed, int dim)
      : law_(law), seed_(seed), dim_(dim) {
    check_dim(dim);
    key_ = hash_combine(mix64(seed), static_cast<uint64_t>(StreamPurpose::env));
  }

  const TailLaw& law() const { return law_; }
  uint64_t seed() const { return seed_; }
  int dim() const { return dim_; }

  // Uniform level attached to site x (the value tail(tau_x)).
  double unit_at(const Site& x) const {
    return unit_from_hash(mix64(site_hash(key_, x, dim_)));
  }

  // Trap depth at site x.
  double tau_at(const Site& x) const { return law_.quantile_of_tail(unit_at(x)); }

  // Dimension-checked variant for callers holding raw coordinate vectors.
  double tau_at(const int64_t* coords, int dim) const {
    if (dim != dim_)
      throw SimulationError("environment dimension mismatch: site has d=" +
                            std::to_string(dim) + ", environment has d=" +
                            std::to_string(dim_));
    Site x = origin_site();
    for (int i = 0; i < dim; ++i) x[i] = coords[i];
    return tau_at(x);
  }

 private:
  TailLaw law_;
  uint64_t seed_;
  int dim_;
  uint64_t key_;
};

}  // namespace trapsim
