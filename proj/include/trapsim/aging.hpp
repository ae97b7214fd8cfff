#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "trapsim/clock.hpp"
#include "trapsim/environment.hpp"
#include "trapsim/errors.hpp"
#include "trapsim/parallel.hpp"
#include "trapsim/stats.hpp"
#include "trapsim/walk.hpp"
#include "trapsim/walk_stats.hpp"

namespace trapsim {

// Two-time functionals of the energy process, evaluated along the scaling
// windows in which they have nontrivial limits:
//   R          P(Y_t = Y_{t+theta t}), equality of trap depths
//   Pi         P(no clock jump during [t, t + theta v_{n(t)}])
//   PiLaplace  E exp(-theta v_{n(t)} / Y_t), the exact Laplace form of Pi
//   Omega      P(sup_{[0,t]} Y < sup_{[0,(1+theta)t]} Y), prospects of novelty
enum class AgingMode { R, Pi, PiLaplace, Omega };

inline std::string aging_mode_name(AgingMode m) {
  switch (m) {
    case AgingMode::R: return "R";
    case AgingMode::Pi: return "Pi";
    case AgingMode::PiLaplace: return "Pi_laplace";
    case AgingMode::Omega: return "Omega";
  }
  return "?";
}

inline AgingMode parse_aging_mode(const std::string& s) {
  if (s == "R") return AgingMode::R;
  if (s == "Pi") return AgingMode::Pi;
  if (s == "Pi_laplace") return AgingMode::PiLaplace;
  if (s == "Omega") return AgingMode::Omega;
  throw ConfigError("mode: expected one of R, Pi, Pi_laplace, Omega; got '" + s + "'");
}

struct AgingPoint {
  double theta = 0, t = 0;
  double estimate = 0, ci_lo = 0, ci_hi = 0, se = 0;
  int64_t n_used = 0;
  int64_t replicas = 0;
};

struct AgingCurve {
  AgingMode mode = AgingMode::R;
  bool quenched = false;
  std::string walk_name;
  double alpha = 0;
  std::vector<double> theta_grid, t_grid;
  std::vector<AgingPoint> points;  // theta-major, t-minor
};

namespace detail {

// Per-cell window end that the trace must cover.
inline double window_end(AgingMode mode, double theta, double t,
                         const ScalingBundle& bundle) {
  switch (mode) {
    case AgingMode::R: return t + theta * t;
    case AgingMode::Pi: return t + theta * bundle.v_at_time(t);
    case AgingMode::PiLaplace: return t;
    case AgingMode::Omega: return t * (1.0 + theta);
  }
  return t;
}

// One replica's contribution at one grid cell. Counting modes return 0/1.
inline double evaluate_cell(const ClockTrace& trace, AgingMode mode, double theta,
                            double t, double window_scale, int64_t* index_used) {
  int64_t i1 = clock_index(trace, t);
  switch (mode) {
    case AgingMode::R: {
      int64_t i2 = clock_index(trace, t + theta * t);
      *index_used = i2;
      // Trap-depth equality. Depths are pure lookups, so revisits of a site
      // reproduce the identical double and the comparison is exact; under a
      // continuous law distinct sites tie with probability zero.
      return trace.taus()[static_cast<size_t>(i1)] ==
                     trace.taus()[static_cast<size_t>(i2)]
                 ? 1.0
                 : 0.0;
    }
    case AgingMode::Pi: {
      int64_t i2 = clock_index(trace, t + theta * window_scale);
      *index_used = i2;
      return i1 == i2 ? 1.0 : 0.0;
    }
    case AgingMode::PiLaplace: {
      *index_used = i1;
      return std::exp(-theta * window_scale / trace.taus()[static_cast<size_t>(i1)]);
    }
    case AgingMode::Omega: {
      int64_t i2 = clock_index(trace, t * (1.0 + theta));
      *index_used = i2;
      const auto& pm = trace.prefix_max_tau();
      return pm[static_cast<size_t>(i1)] < pm[static_cast<size_t>(i2)] ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

inline int64_t initial_trace_steps(const ScalingBundle& bundle, double t_need) {
  double u = std::min(t_need, bundle.nu_max());
  u = std::max(u, bundle.nu_min());
  double guess = bundle.n_of(u) * 1.25;
  return std::max<int64_t>(16, static_cast<int64_t>(guess) + 1);
}

}  // namespace detail

// Annealed aging curve: every replica draws a fresh environment, walk and
// marks. All cells of the (theta, t) grid are evaluated on the same traces,
// so estimates across the grid share their randomness.
inline AgingCurve estimate_aging(const WalkModel& model, const TailLaw& law,
                                 const ScalingBundle& bundle, AgingMode mode,
                                 const std::vector<double>& theta_grid,
                                 const std::vector<double>& t_grid, int64_t replicas,
                                 uint64_t seed, int workers = 0,
                                 const ClockHooks& hooks = {}) {
  if (theta_grid.empty() || t_grid.empty())
    throw SimulationError("estimate_aging: theta and t grids must be nonempty");
  if (replicas < 1) throw SimulationError("estimate_aging: need replicas >= 1");
  for (double th : theta_grid)
    if (!(th >= 0.0)) throw SimulationError("estimate_aging: theta must be >= 0");
  for (double t : t_grid)
    if (!(t > 0.0)) throw SimulationError("estimate_aging: t must be > 0");

  const size_t cells = theta_grid.size() * t_grid.size();
  // Window scales v_{n(t)} are shared by all replicas; bundle exhaustion
  // surfaces here, before any simulation.
  std::vector<double> window_scale(t_grid.size(), 0.0);
  if (mode == AgingMode::Pi || mode == AgingMode::PiLaplace)
    for (size_t j = 0; j < t_grid.size(); ++j)
      window_scale[j] = bundle.v_at_time(t_grid[j]);

  double t_need = 0.0;
  for (size_t a = 0; a < theta_grid.size(); ++a)
    for (size_t j = 0; j < t_grid.size(); ++j)
      t_need = std::max(t_need, detail::window_end(mode, theta_grid[a], t_grid[j], bundle));
  const int64_t n_init = detail::initial_trace_steps(bundle, t_need);

  std::vector<double> contrib(cells * static_cast<size_t>(replicas), 0.0);
  std::vector<int64_t> used(cells * static_cast<size_t>(replicas), 0);

  parallel_for_replicas(replicas, workers, [&](int64_t rep) {
    Environment env(law, RngStream::make(seed, static_cast<uint64_t>(rep),
                                         StreamPurpose::env).key(),
                    model.dim());
    ClockTrace trace(model, env,
                     RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::walk),
                     RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::marks),
                     hooks);
    trace.extend(n_init);
    trace.extend_past(t_need);
    for (size_t a = 0; a < theta_grid.size(); ++a)
      for (size_t j = 0; j < t_grid.size(); ++j) {
        size_t cell = a * t_grid.size() + j;
        int64_t idx = 0;
        contrib[cell * static_cast<size_t>(replicas) + static_cast<size_t>(rep)] =
            detail::evaluate_cell(trace, mode, theta_grid[a], t_grid[j],
                                  window_scale[j], &idx);
        used[cell * static_cast<size_t>(replicas) + static_cast<size_t>(rep)] = idx;
      }
  });

  AgingCurve curve;
  curve.mode = mode;
  curve.quenched = false;
  curve.walk_name = model.name();
  curve.alpha = law.alpha();
  curve.theta_grid = theta_grid;
  curve.t_grid = t_grid;
  for (size_t a = 0; a < theta_grid.size(); ++a)
    for (size_t j = 0; j < t_grid.size(); ++j) {
      size_t cell = a * t_grid.size() + j;
      AgingPoint pt;
      pt.theta = theta_grid[a];
      pt.t = t_grid[j];
      pt.replicas = replicas;
      for (int64_t r = 0; r < replicas; ++r)
        pt.n_used = std::max(pt.n_used,
                             used[cell * static_cast<size_t>(replicas) + static_cast<size_t>(r)]);
      if (mode == AgingMode::PiLaplace) {
        std::vector<double> vals(contrib.begin() + static_cast<int64_t>(cell) * replicas,
                                 contrib.begin() + static_cast<int64_t>(cell + 1) * replicas);
        MeanSe ms = mean_se(vals);
        pt.estimate = ms.mean;
        pt.se = ms.se;
        pt.ci_lo = std::max(0.0, ms.mean - 1.959963984540054 * ms.se);
        pt.ci_hi = std::min(1.0, ms.mean + 1.959963984540054 * ms.se);
      } else {
        int64_t k = 0;
        for (int64_t r = 0; r < replicas; ++r)
          k += contrib[cell * static_cast<size_t>(replicas) + static_cast<size_t>(r)] > 0.5;
        auto [lo, hi] = wilson_interval(k, replicas);
        MeanSe ms = proportion_se(k, replicas);
        pt.estimate = ms.mean;
        pt.se = ms.se;
        pt.ci_lo = lo;
        pt.ci_hi = hi;
      }
      curve.points.push_back(pt);
    }
  return curve;
}

// Quenched diagnostics: env_count fixed environments, each probed with
// replicas_per_env fresh (walk, marks) pairs while tau stays fixed. Reported
// per t: the spread of the conditional estimates across environments, and
// that spread in excess of the binomial noise floor p(1-p)/replicas.
struct QuenchedPoint {
  double theta = 0, t = 0;
  std::vector<double> per_env;
  double mean = 0;
  double variance = 0;
  double noise_floor = 0;
  double excess = 0;
};

inline std::vector<QuenchedPoint> quenched_aging_profile(
    const WalkModel& model, const TailLaw& law, const ScalingBundle& bundle,
    AgingMode mode, double theta, const std::vector<double>& t_grid,
    int64_t env_count, int64_t replicas_per_env, uint64_t seed, int workers = 0,
    const ClockHooks& hooks = {}) {
  if (env_count < 2) throw SimulationError("quenched profile: need env_count >= 2");
  if (replicas_per_env < 2)
    throw SimulationError("quenched profile: need replicas_per_env >= 2");
  if (mode == AgingMode::PiLaplace)
    throw SimulationError("quenched profile: use a counting mode (R, Pi, Omega)");

  std::vector<double> window_scale(t_grid.size(), 0.0);
  if (mode == AgingMode::Pi)
    for (size_t j = 0; j < t_grid.size(); ++j)
      window_scale[j] = bundle.v_at_time(t_grid[j]);
  double t_need = 0.0;
  for (size_t j = 0; j < t_grid.size(); ++j)
    t_need = std::max(t_need, detail::window_end(mode, theta, t_grid[j], bundle));
  const int64_t n_init = detail::initial_trace_steps(bundle, t_need);

  const int64_t total = env_count * replicas_per_env;
  std::vector<uint8_t> events(static_cast<size_t>(total) * t_grid.size(), 0);

  parallel_for_replicas(total, workers, [&](int64_t g) {
    int64_t e = g / replicas_per_env;
    Environment env(law, RngStream::make(seed, static_cast<uint64_t>(e),
                                         StreamPurpose::env).key(),
                    model.dim());
    ClockTrace trace(model, env,
                     RngStream::make(seed, static_cast<uint64_t>(g), StreamPurpose::walk),
                     RngStream::make(seed, static_cast<uint64_t>(g), StreamPurpose::marks),
                     hooks);
    trace.extend(n_init);
    trace.extend_past(t_need);
    for (size_t j = 0; j < t_grid.size(); ++j) {
      int64_t idx = 0;
      double v = detail::evaluate_cell(trace, mode, theta, t_grid[j], window_scale[j], &idx);
      events[static_cast<size_t>(g) * t_grid.size() + j] = v > 0.5 ? 1 : 0;
    }
  });

  std::vector<QuenchedPoint> out;
  for (size_t j = 0; j < t_grid.size(); ++j) {
    QuenchedPoint q;
    q.theta = theta;
    q.t = t_grid[j];
    double floor_sum = 0.0;
    for (int64_t e = 0; e < env_count; ++e) {
      int64_t k = 0;
      for (int64_t r = 0; r < replicas_per_env; ++r)
        k += events[static_cast<size_t>(e * replicas_per_env + r) * t_grid.size() + j];
      double p = static_cast<double>(k) / static_cast<double>(replicas_per_env);
      q.per_env.push_back(p);
      floor_sum += p * (1.0 - p) / static_cast<double>(replicas_per_env);
    }
    double m = 0.0;
    for (double p : q.per_env) m += p;
    m /= static_cast<double>(env_count);
    double ss = 0.0;
    for (double p : q.per_env) ss += (p - m) * (p - m);
    q.mean = m;
    q.variance = ss / static_cast<double>(env_count - 1);
    q.noise_floor = floor_sum / static_cast<double>(env_count);
    q.excess = q.variance - q.noise_floor;
    out.push_back(std::move(q));
  }
  return out;
}

inline QuenchedPoint quenched_aging_variance(const WalkModel& model, const TailLaw& law,
                                             const ScalingBundle& bundle, AgingMode mode,
                                             double theta, double t, int64_t env_count,
                                             int64_t replicas_per_env, uint64_t seed,
                                             int workers = 0) {
  return quenched_aging_profile(model, law, bundle, mode, theta, {t}, env_count,
                                replicas_per_env, seed, workers)[0];
}

// Range-intersection diagnostic for the quenched strengthening: I_n is the
// number of sites visited by both of two independent copies of the walk.
struct IntersectionPoint {
  int64_t n = 0;
  double i_hat = 0, i_se = 0;
  double rho_hat = 0, rho_se = 0;
  double ratio = 0, ratio_se = 0;
};

inline std::vector<IntersectionPoint> intersection_ratio(const WalkModel& model,
                                                         std::vector<int64_t> n_grid,
                                                         int64_t pairs, uint64_t seed,
                                                         int workers = 0) {
  if (pairs < 1) throw SimulationError("intersection_ratio: need at least one pair");
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.empty() || n_grid.front() < 0)
    throw SimulationError("intersection_ratio: grid must be nonempty, n >= 0");
  const int64_t n_max = n_grid.back();
  const size_t pts = n_grid.size();
  const int dim = model.dim();

  struct Accum {
    int64_t common = 0;
    unsigned __int128 common_sq = 0;
    int64_t range = 0;  // over both paths of the pair
    unsigned __int128 range_sq = 0;
  };
  std::vector<Accum> total(pts);
  std::mutex merge_mutex;
  const int64_t chunk = std::max<int64_t>(1, pairs / (8 * resolve_workers(workers)) + 1);
  const int64_t n_chunks = (pairs + chunk - 1) / chunk;

  parallel_for_replicas(n_chunks, workers, [&](int64_t c) {
    std::vector<Accum> local(pts);
    const int64_t lo = c * chunk, hi = std::min(pairs, lo + chunk);
    for (int64_t rep = lo; rep < hi; ++rep) {
      RngStream rng_a = RngStream::make(seed, static_cast<uint64_t>(2 * rep), StreamPurpose::walk);
      RngStream rng_b = RngStream::make(seed, static_cast<uint64_t>(2 * rep + 1), StreamPurpose::walk);
      Site pa = origin_site(), pb = origin_site();
      SiteMap va(dim, static_cast<size_t>(std::min<int64_t>(n_max + 1, 1 << 18)));
      SiteMap vb(dim, static_cast<size_t>(std::min<int64_t>(n_max + 1, 1 << 18)));
      int64_t common = 0, ra = 0, rb = 0;
      size_t g = 0;
      for (int64_t k = 0; k <= n_max; ++k) {
        if (k > 0) {
          apply_step(pa, model.sample_step(rng_a), dim);
          apply_step(pb, model.sample_step(rng_b), dim);
        }
        if (va.increment(pa) == 1) {
          ++ra;
          if (vb.contains(pa)) ++common;
        }
        if (vb.increment(pb) == 1) {
          ++rb;
          if (va.contains(pb)) ++common;
        }
        while (g < pts && n_grid[g] == k) {
          local[g].common += common;
          local[g].common_sq += static_cast<unsigned __int128>(common) *
                                static_cast<unsigned __int128>(common);
          local[g].range += ra + rb;
          local[g].range_sq += static_cast<unsigned __int128>(ra) *
                                   static_cast<unsigned __int128>(ra) +
                               static_cast<unsigned __int128>(rb) *
                                   static_cast<unsigned __int128>(rb);
          ++g;
        }
      }
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    for (size_t i = 0; i < pts; ++i) {
      total[i].common += local[i].common;
      total[i].common_sq += local[i].common_sq;
      total[i].range += local[i].range;
      total[i].range_sq += local[i].range_sq;
    }
  });

  std::vector<IntersectionPoint> out(pts);
  for (size_t i = 0; i < pts; ++i) {
    IntersectionPoint& p = out[i];
    p.n = n_grid[i];
    const double m = static_cast<double>(pairs);
    p.i_hat = static_cast<double>(total[i].common) / m;
    p.i_se = detail::se_from_sums(total[i].common, total[i].common_sq, pairs);
    p.rho_hat = static_cast<double>(total[i].range) / (2.0 * m);
    p.rho_se = detail::se_from_sums(total[i].range, total[i].range_sq, 2 * pairs);
    p.ratio = p.i_hat / p.rho_hat;
    // Both factors fluctuate; first-order error propagation.
    double rel_i = p.i_hat > 0 ? p.i_se / p.i_hat : 0.0;
    double rel_rho = p.rho_se / p.rho_hat;
    p.ratio_se = p.ratio * std::sqrt(rel_i * rel_i + rel_rho * rel_rho);
    out[i] = p;
  }
  return out;
}

}  // namespace trapsim
