#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "trapsim/errors.hpp"
#include "trapsim/lattice.hpp"
#include "trapsim/rng.hpp"

namespace trapsim {

// Jump law mu on Z^d \ {0}. Shipped families:
//   srw(d)            uniform nearest-neighbor
//   asym1d(p)         P(+1) = p, P(-1) = 1-p
//   heavy1d(beta,K)   P(+-k) proportional to k^(-1-beta), 1 <= k <= K
//   table             explicit (offset, probability) list
// heavy1d is a truncated stand-in for a beta-stable jump law; K defaults to
// 2^20.
class WalkModel {
 public:
  enum class Kind { srw, asym1d, heavy1d, table };

  static WalkModel srw(int d) {
    check_dim(d);
    WalkModel m;
    m.kind_ = Kind::srw;
    m.dim_ = d;
    m.name_ = "srw(" + std::to_string(d) + ")";
    return m;
  }

  static WalkModel asym1d(double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError("walk.p: must be in [0,1], got " + std::to_string(p));
    WalkModel m;
    m.kind_ = Kind::asym1d;
    m.dim_ = 1;
    m.p_ = p;
    m.name_ = "asym1d(" + format_param(p) + ")";
    return m;
  }

  static WalkModel heavy1d(double beta, int64_t k_max = int64_t{1} << 20) {
    if (!(beta > 0.0)) throw ConfigError("walk.beta: must be positive");
    if (k_max < 1) throw ConfigError("walk.kmax: must be >= 1");
    WalkModel m;
    m.kind_ = Kind::heavy1d;
    m.dim_ = 1;
    m.beta_ = beta;
    m.k_max_ = k_max;
    m.name_ = "heavy1d(" + format_param(beta) + ")";
    // One-sided cumulative of k^(-1-beta), normalized.
    m.cum_.reserve(static_cast<size_t>(k_max));
    double acc = 0.0;
    for (int64_t k = 1; k <= k_max; ++k) {
      acc += std::pow(static_cast<double>(k), -1.0 - beta);
      m.cum_.push_back(acc);
    }
    for (double& c : m.cum_) c /= acc;
    m.cum_.back() = 1.0;
    return m;
  }

  static WalkModel table(int d, std::vector<std::pair<Site, double>> entries) {
    check_dim(d);
    if (entries.empty()) throw ConfigError("walk.table: no entries");
    WalkModel m;
    m.kind_ = Kind::table;
    m.dim_ = d;
    m.name_ = "table";
    double total = 0.0;
    Site zero = origin_site();
    for (auto& [offset, prob] : entries) {
      for (int i = d; i < kMaxDim; ++i)
        if (offset[i] != 0) throw ConfigError("walk.table: offset uses lanes beyond d");
      if (offset == zero) throw ConfigError("walk.table: mu(0) must be 0, zero offset listed");
      if (!(prob > 0.0)) throw ConfigError("walk.table: probabilities must be positive");
      total += prob;
      m.offsets_.push_back(offset);
      m.cum_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ConfigError("walk.table: probabilities sum to " + std::to_string(total) +
                        ", expected 1 within 1e-12");
    m.cum_.back() = 1.0;
    return m;
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  double p() const { return p_; }

  // One jump; never the zero offset.
  Site sample_step(RngStream& rng) const {
    Site step = origin_site();
    switch (kind_) {
      case Kind::srw: {
        uint64_t u = rng.next_below(static_cast<uint64_t>(2 * dim_));
        step[u >> 1] = (u & 1) ? 1 : -1;
        break;
      }
      case Kind::asym1d:
        step[0] = rng.next_unit() < p_ ? 1 : -1;
        break;
      case Kind::heavy1d: {
        double u = rng.next_unit();
        auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
        int64_t k = 1 + (it - cum_.begin());
        step[0] = (rng.next_u64() & 1) ? k : -k;
        break;
      }
      case Kind::table: {
        double u = rng.next_unit();
        auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
        step = offsets_[static_cast<size_t>(it - cum_.begin())];
        break;
      }
    }
    return step;
  }

 private:
  static std::string format_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
  }

  Kind kind_ = Kind::srw;
  int dim_ = 1;
  double p_ = 0.5;
  double beta_ = 1.0;
  int64_t k_max_ = 0;
  std::string name_;
  std::vector<double> cum_;
  std::vector<Site> offsets_;
};

// A simulated path with range bookkeeping:
//   positions        X_0..X_n, flat, dim entries per step
//   discovery_times  sigma_0..sigma_{R-1} (steps at which a new site appears)
//   distinct_sites   the sites X_sigma_k, in discovery order, flat
//   occupation       L(x, n) per visited site
struct PathRecord {
  int dim = 1;
  int64_t steps = 0;
  std::vector<int64_t> positions;
  std::vector<int64_t> discovery_times;
  std::vector<int64_t> distinct_sites;
  SiteMap occupation{1};
  int64_t range_size = 0;

  Site site_at(int64_t k) const {
    Site s = origin_site();
    for (int i = 0; i < dim; ++i) s[i] = positions[static_cast<size_t>(k) * dim + i];
    return s;
  }
};

inline void apply_step(Site& pos, const Site& step, int dim) {
  for (int i = 0; i < dim; ++i) {
    pos[i] += step[i];
    if (pos[i] > kCoordLimit || pos[i] < -kCoordLimit)
      throw SimulationError("coordinate overflow beyond 2^62; walk left the supported box");
  }
}

inline PathRecord simulate_path(const WalkModel& model, int64_t n, RngStream& rng) {
  if (n < 0) throw SimulationError("simulate_path: n must be >= 0");
  PathRecord rec;
  rec.dim = model.dim();
  rec.steps = n;
  rec.positions.reserve(static_cast<size_t>(n + 1) * model.dim());
  rec.occupation = SiteMap(model.dim(), static_cast<size_t>(std::min<int64_t>(n + 1, 1 << 20)));

  Site pos = origin_site();
  for (int64_t k = 0; k <= n; ++k) {
    if (k > 0) apply_step(pos, model.sample_step(rng), model.dim());
    for (int i = 0; i < model.dim(); ++i) rec.positions.push_back(pos[i]);
    if (rec.occupation.increment(pos) == 1) {
      rec.discovery_times.push_back(k);
      for (int i = 0; i < model.dim(); ++i) rec.distinct_sites.push_back(pos[i]);
      ++rec.range_size;
    }
  }
  return rec;
}

}  // namespace trapsim
