#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trapsim/errors.hpp"
#include "trapsim/parallel.hpp"
#include "trapsim/rng.hpp"
#include "trapsim/stats.hpp"

namespace trapsim {

// Truncated jump representation of an alpha-stable subordinator Upsilon on
// [0, x_max], normalized so the Levy density is alpha x^(-1-alpha): jumps of
// size > s arrive at rate s^-alpha per unit time. Jumps below delta0 are
// discarded outright (no compensation), so the correlated pair
//   V_x = sum_{locations <= x} T_i * size_i      (mark-weighted clock)
//   Upsilon_x = sum_{locations <= x} size_i
// is driven by the same jump set. The small-jump mass dropped per unit time
// is alpha/(1-alpha) * delta0^(1-alpha).
struct SubordinatorJump {
  double location = 0;
  double size = 0;
  double mark = 0;
};

struct SubordinatorPath {
  double alpha = 0.5;
  double delta0 = 1e-3;
  double x_max = 0;
  std::vector<SubordinatorJump> jumps;  // locations strictly increasing
  std::vector<double> v_cum;            // running sum of mark * size

  double v_last() const { return v_cum.empty() ? 0.0 : v_cum.back(); }
};

namespace detail {

inline void append_jumps(SubordinatorPath& path, double new_x_max, RngStream& rng) {
  double rate = std::pow(path.delta0, -path.alpha);
  double x = path.jumps.empty() ? 0.0 : path.jumps.back().location;
  // Continue the Poisson process from the last stored location.
  for (;;) {
    x += rng.next_exp() / rate;
    if (x > new_x_max) break;
    SubordinatorJump j;
    j.location = x;
    j.size = path.delta0 * std::pow(rng.next_unit(), -1.0 / path.alpha);
    j.mark = rng.next_exp();
    path.v_cum.push_back(path.v_last() + j.mark * j.size);
    path.jumps.push_back(j);
  }
  path.x_max = new_x_max;
}

}  // namespace detail

inline SubordinatorPath sample_subordinator(double alpha, double x_max, double delta0,
                                            RngStream& rng) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw SimulationError("sample_subordinator: alpha must be in (0,1)");
  if (!(delta0 > 0.0 && x_max > 0.0))
    throw SimulationError("sample_subordinator: delta0 and x_max must be positive");
  double expected = x_max * std::pow(delta0, -alpha);
  if (expected > 1e8)
    throw SimulationError("sample_subordinator: expected jump count " +
                          std::to_string(expected) +
                          " exceeds 1e8; delta0 too small for this horizon");
  SubordinatorPath path;
  path.alpha = alpha;
  path.delta0 = delta0;
  detail::append_jumps(path, x_max, rng);
  return path;
}

// Doubles the horizon until V reaches past t, drawing only the extension.
inline void extend_subordinator(SubordinatorPath& path, double t, RngStream& rng) {
  while (path.v_last() <= t) {
    double next = std::max(path.x_max * 2.0, 1.0);
    if (next * std::pow(path.delta0, -path.alpha) > 1e8)
      throw SimulationError("extend_subordinator: jump budget exceeded");
    detail::append_jumps(path, next, rng);
  }
}

// Index of the V-interval straddling t: the unique i with
// V_{i-1} <= t < V_i (V with jumps indexed from 1, V_0 := 0).
inline size_t straddling_index(const SubordinatorPath& path, double t) {
  if (t < 0.0) throw SimulationError("z_at: t must be >= 0");
  auto it = std::upper_bound(path.v_cum.begin(), path.v_cum.end(), t);
  if (it == path.v_cum.end())
    throw SimulationError("horizon exhausted; extend x_max");
  return static_cast<size_t>(it - path.v_cum.begin());
}

// Z_t: the Upsilon-jump straddled by the inverse of V at t.
inline double z_at(const SubordinatorPath& path, double t) {
  return path.jumps[straddling_index(path, t)].size;
}

// Limit aging functionals, all expressed through the first crossings of V:
//   R          [1, 1+theta] misses the range of V
//   PiLaplace  E exp(-theta / Z_1)
//   Omega      sup_{[0,1]} Z < sup_{[0,1+theta]} Z
enum class LimitAgingMode { R, PiLaplace, Omega };

inline std::string limit_mode_name(LimitAgingMode m) {
  switch (m) {
    case LimitAgingMode::R: return "R";
    case LimitAgingMode::PiLaplace: return "Pi_laplace";
    case LimitAgingMode::Omega: return "Omega";
  }
  return "?";
}

struct LimitAgingPoint {
  double theta = 0;
  double estimate = 0, ci_lo = 0, ci_hi = 0, se = 0;
  int64_t replicas = 0;
};

inline std::vector<LimitAgingPoint> estimate_limit_aging(
    double alpha, LimitAgingMode mode, const std::vector<double>& theta_grid,
    int64_t replicas, double delta0, uint64_t seed, int workers = 0) {
  if (theta_grid.empty()) throw SimulationError("estimate_limit_aging: empty theta grid");
  if (replicas < 1) throw SimulationError("estimate_limit_aging: need replicas >= 1");
  for (double th : theta_grid)
    if (!(th >= 0.0)) throw SimulationError("estimate_limit_aging: theta must be >= 0");

  double theta_max = *std::max_element(theta_grid.begin(), theta_grid.end());
  double t_far = 1.0 + theta_max;
  // Horizon heuristic: V reaches t around x ~ t^alpha, padded 4x.
  double x0 = 4.0 * std::pow(t_far, alpha) + 1.0;

  const size_t cells = theta_grid.size();
  std::vector<double> contrib(cells * static_cast<size_t>(replicas), 0.0);

  parallel_for_replicas(replicas, workers, [&](int64_t rep) {
    RngStream rng = RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::limit);
    SubordinatorPath path = sample_subordinator(alpha, x0, delta0, rng);
    extend_subordinator(path, t_far, rng);
    size_t i1 = straddling_index(path, 1.0);
    double z1 = path.jumps[i1].size;
    double v_after = path.v_cum[i1];  // first point of range(V) at or past 1
    for (size_t a = 0; a < cells; ++a) {
      double theta = theta_grid[a];
      double out = 0.0;
      switch (mode) {
        case LimitAgingMode::R:
          out = v_after > 1.0 + theta ? 1.0 : 0.0;
          break;
        case LimitAgingMode::PiLaplace:
          out = std::exp(-theta / z1);
          break;
        case LimitAgingMode::Omega: {
          size_t i2 = straddling_index(path, 1.0 + theta);
          double m1 = 0.0, m2 = 0.0;
          for (size_t i = 0; i <= i2; ++i) {
            m2 = std::max(m2, path.jumps[i].size);
            if (i == i1) m1 = m2;
          }
          out = m1 < m2 ? 1.0 : 0.0;
          break;
        }
      }
      contrib[a * static_cast<size_t>(replicas) + static_cast<size_t>(rep)] = out;
    }
  });

  std::vector<LimitAgingPoint> out;
  for (size_t a = 0; a < cells; ++a) {
    LimitAgingPoint pt;
    pt.theta = theta_grid[a];
    pt.replicas = replicas;
    if (mode == LimitAgingMode::PiLaplace) {
      std::vector<double> vals(contrib.begin() + static_cast<int64_t>(a) * replicas,
                               contrib.begin() + static_cast<int64_t>(a + 1) * replicas);
      MeanSe ms = mean_se(vals);
      pt.estimate = ms.mean;
      pt.se = ms.se;
      pt.ci_lo = std::max(0.0, ms.mean - 1.959963984540054 * ms.se);
      pt.ci_hi = std::min(1.0, ms.mean + 1.959963984540054 * ms.se);
    } else {
      int64_t k = 0;
      for (int64_t r = 0; r < replicas; ++r)
        k += contrib[a * static_cast<size_t>(replicas) + static_cast<size_t>(r)] > 0.5;
      auto [lo, hi] = wilson_interval(k, replicas);
      MeanSe ms = proportion_se(k, replicas);
      pt.estimate = ms.mean;
      pt.se = ms.se;
      pt.ci_lo = lo;
      pt.ci_hi = hi;
    }
    out.push_back(pt);
  }
  return out;
}

// The generalized-arcsine aging limit
//   R(theta) = sin(pi alpha)/pi * int_{theta/(1+theta)}^1 s^-alpha (1-s)^(alpha-1) ds
//            = I_{1/(1+theta)}(alpha, 1-alpha),
// evaluated through the regularized incomplete beta function (the endpoint
// singularity never meets the quadrature this way).
inline double closed_form_R(double theta, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw SimulationError("closed_form_R: alpha must be in (0,1)");
  if (!(theta >= 0.0)) throw SimulationError("closed_form_R: theta must be >= 0");
  if (theta == 0.0) return 1.0;
  return regularized_incomplete_beta(alpha, 1.0 - alpha, 1.0 / (1.0 + theta));
}

}  // namespace trapsim
