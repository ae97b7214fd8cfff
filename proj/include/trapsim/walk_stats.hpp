#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <vector>

#include "trapsim/errors.hpp"
#include "trapsim/parallel.hpp"
#include "trapsim/stats.hpp"
#include "trapsim/tail_law.hpp"
#include "trapsim/walk.hpp"

namespace trapsim {

// Shared-path survey of the walk sequences on a grid of n values. One pass
// over M independent paths yields, per grid point:
//   r_hat      P(X_1 != 0, ..., X_n != 0), fraction of paths with no return
//   rho_sum    sum_{k<=n} r_k, estimated by E min(T_ret, n+1)
//   rho_range  E R_n, estimated by the mean range size
//   u_hat      E L_n, mean occupation count of the origin
// rho_sum and rho_range are two routes to the same quantity; their agreement
// is an identity test.
struct RangeSurveyPoint {
  int64_t n = 0;
  double r_hat = 0, r_se = 0;
  double rho_sum = 0, rho_sum_se = 0;
  double rho_range = 0, rho_range_se = 0;
  double u_hat = 0, u_se = 0;
};

namespace detail {

struct SurveyAccum {
  int64_t no_return = 0;
  int64_t min_ret = 0;
  unsigned __int128 min_ret_sq = 0;
  int64_t range = 0;
  unsigned __int128 range_sq = 0;
  int64_t visits = 0;
  unsigned __int128 visits_sq = 0;

  void merge(const SurveyAccum& o) {
    no_return += o.no_return;
    min_ret += o.min_ret;
    min_ret_sq += o.min_ret_sq;
    range += o.range;
    range_sq += o.range_sq;
    visits += o.visits;
    visits_sq += o.visits_sq;
  }
};

inline double se_from_sums(int64_t sum, unsigned __int128 sq, int64_t m) {
  double mean = static_cast<double>(sum) / static_cast<double>(m);
  double msq = static_cast<double>(sq) / static_cast<double>(m);
  double var = std::max(0.0, msq - mean * mean);
  if (m > 1) var *= static_cast<double>(m) / static_cast<double>(m - 1);
  return std::sqrt(var / static_cast<double>(m));
}

}  // namespace detail

inline std::vector<RangeSurveyPoint> range_survey(const WalkModel& model,
                                                  std::vector<int64_t> n_grid,
                                                  int64_t paths, uint64_t seed,
                                                  int workers = 0) {
  if (paths < 1) throw SimulationError("range_survey: need at least one path");
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.empty() || n_grid.front() < 0)
    throw SimulationError("range_survey: grid must be nonempty, n >= 0");
  const int64_t n_max = n_grid.back();
  const size_t pts = n_grid.size();
  const int dim = model.dim();
  const Site zero = origin_site();

  std::vector<detail::SurveyAccum> total(pts);
  std::mutex merge_mutex;

  // Replicas are chunked; integer accumulators commute, so the merge order
  // cannot affect the result.
  const int64_t chunk = std::max<int64_t>(1, paths / (8 * resolve_workers(workers)) + 1);
  const int64_t n_chunks = (paths + chunk - 1) / chunk;

  parallel_for_replicas(n_chunks, workers, [&](int64_t c) {
    std::vector<detail::SurveyAccum> local(pts);
    const int64_t lo = c * chunk, hi = std::min(paths, lo + chunk);
    for (int64_t rep = lo; rep < hi; ++rep) {
      RngStream rng = RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::walk);
      Site pos = zero;
      SiteMap visited(dim, static_cast<size_t>(std::min<int64_t>(n_max + 1, 1 << 18)));
      visited.increment(pos);
      int64_t range = 1;
      int64_t first_return = n_max + 1;
      int64_t visits = 1;
      size_t g = 0;
      for (int64_t k = 0; k <= n_max; ++k) {
        if (k > 0) {
          apply_step(pos, model.sample_step(rng), dim);
          if (visited.increment(pos) == 1) ++range;
          if (pos == zero) {
            ++visits;
            if (first_return > n_max) first_return = k;
          }
        }
        while (g < pts && n_grid[g] == k) {
          detail::SurveyAccum& a = local[g];
          a.no_return += first_return > k ? 1 : 0;
          int64_t mr = std::min(first_return, k + 1);
          a.min_ret += mr;
          a.min_ret_sq += static_cast<unsigned __int128>(mr) * static_cast<unsigned __int128>(mr);
          a.range += range;
          a.range_sq += static_cast<unsigned __int128>(range) * static_cast<unsigned __int128>(range);
          a.visits += visits;
          a.visits_sq += static_cast<unsigned __int128>(visits) * static_cast<unsigned __int128>(visits);
          ++g;
        }
      }
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    for (size_t i = 0; i < pts; ++i) total[i].merge(local[i]);
  });

  std::vector<RangeSurveyPoint> out(pts);
  for (size_t i = 0; i < pts; ++i) {
    const detail::SurveyAccum& a = total[i];
    RangeSurveyPoint& p = out[i];
    const double m = static_cast<double>(paths);
    p.n = n_grid[i];
    p.r_hat = static_cast<double>(a.no_return) / m;
    p.r_se = std::sqrt(p.r_hat * (1.0 - p.r_hat) / m);
    p.rho_sum = static_cast<double>(a.min_ret) / m;
    p.rho_sum_se = detail::se_from_sums(a.min_ret, a.min_ret_sq, paths);
    p.rho_range = static_cast<double>(a.range) / m;
    p.rho_range_se = detail::se_from_sums(a.range, a.range_sq, paths);
    p.u_hat = static_cast<double>(a.visits) / m;
    p.u_se = detail::se_from_sums(a.visits, a.visits_sq, paths);
  }
  return out;
}

struct RSeries {
  std::vector<int64_t> n;
  std::vector<double> r_hat, r_se;
};

inline RSeries estimate_r(const WalkModel& model, const std::vector<int64_t>& n_grid,
                          int64_t paths, uint64_t seed, int workers = 0) {
  RSeries out;
  for (const auto& p : range_survey(model, n_grid, paths, seed, workers)) {
    out.n.push_back(p.n);
    out.r_hat.push_back(p.r_hat);
    out.r_se.push_back(p.r_se);
  }
  return out;
}

struct RhoSeries {
  std::vector<int64_t> n;
  std::vector<double> via_r_sum, via_r_sum_se;   // sum of r_k route
  std::vector<double> via_range, via_range_se;   // mean R_n route
};

inline RhoSeries estimate_rho(const WalkModel& model, const std::vector<int64_t>& n_grid,
                              int64_t paths, uint64_t seed, int workers = 0) {
  RhoSeries out;
  for (const auto& p : range_survey(model, n_grid, paths, seed, workers)) {
    out.n.push_back(p.n);
    out.via_r_sum.push_back(p.rho_sum);
    out.via_r_sum_se.push_back(p.rho_sum_se);
    out.via_range.push_back(p.rho_range);
    out.via_range_se.push_back(p.rho_range_se);
  }
  return out;
}

// Checkpointed survey of r_hat and U_hat = mean L_n along one set of shared
// paths (no range bookkeeping, so it stays cheap at n ~ 1e6). Sharing the
// paths across checkpoints makes the r*U trend readable at far smaller M
// than independent estimates would need.
struct OccupationSurveyPoint {
  int64_t n = 0;
  double r_hat = 0, r_se = 0;
  double u_hat = 0, u_se = 0;
};

inline std::vector<OccupationSurveyPoint> occupation_survey(const WalkModel& model,
                                                            std::vector<int64_t> n_grid,
                                                            int64_t paths, uint64_t seed,
                                                            int workers = 0) {
  if (paths < 1) throw SimulationError("occupation_survey: need at least one path");
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.empty() || n_grid.front() < 0)
    throw SimulationError("occupation_survey: grid must be nonempty, n >= 0");
  const int64_t n_max = n_grid.back();
  const size_t pts = n_grid.size();
  const int dim = model.dim();
  const Site zero = origin_site();

  struct Accum {
    int64_t no_return = 0;
    int64_t visits = 0;
    unsigned __int128 visits_sq = 0;
  };
  std::vector<Accum> total(pts);
  std::mutex merge_mutex;
  const int64_t chunk = std::max<int64_t>(1, paths / (8 * resolve_workers(workers)) + 1);
  const int64_t n_chunks = (paths + chunk - 1) / chunk;

  parallel_for_replicas(n_chunks, workers, [&](int64_t c) {
    std::vector<Accum> local(pts);
    const int64_t lo = c * chunk, hi = std::min(paths, lo + chunk);
    for (int64_t rep = lo; rep < hi; ++rep) {
      RngStream rng = RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::walk);
      Site pos = zero;
      int64_t visits = 1;
      bool returned = false;
      size_t g = 0;
      for (int64_t k = 0; k <= n_max; ++k) {
        if (k > 0) {
          apply_step(pos, model.sample_step(rng), dim);
          if (pos == zero) {
            ++visits;
            returned = true;
          }
        }
        while (g < pts && n_grid[g] == k) {
          local[g].no_return += returned ? 0 : 1;
          local[g].visits += visits;
          local[g].visits_sq += static_cast<unsigned __int128>(visits) *
                                static_cast<unsigned __int128>(visits);
          ++g;
        }
      }
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    for (size_t i = 0; i < pts; ++i) {
      total[i].no_return += local[i].no_return;
      total[i].visits += local[i].visits;
      total[i].visits_sq += local[i].visits_sq;
    }
  });

  std::vector<OccupationSurveyPoint> out(pts);
  for (size_t i = 0; i < pts; ++i) {
    OccupationSurveyPoint& p = out[i];
    const double m = static_cast<double>(paths);
    p.n = n_grid[i];
    p.r_hat = static_cast<double>(total[i].no_return) / m;
    p.r_se = std::sqrt(p.r_hat * (1.0 - p.r_hat) / m);
    p.u_hat = static_cast<double>(total[i].visits) / m;
    p.u_se = detail::se_from_sums(total[i].visits, total[i].visits_sq, paths);
  }
  return out;
}

// Occupation statistics of the origin at a single n:
//   u_hat            mean L_n
//   rl_samples       r_hat * L_n per path (count of visits, including step 0)
//   rell_samples     r_hat * ell(0,n) per path, ell = sum of Exp(1) marks at
//                    origin visits
//   window_freq      P(some return to 0 with step in (a n, b n])
struct OccupationStats {
  int64_t n = 0;
  double r_hat = 0, r_se = 0;
  double u_hat = 0, u_se = 0;
  double window_freq = 0, window_se = 0;
  std::vector<double> rl_samples;
  std::vector<double> rell_samples;
};

inline OccupationStats occupation_stats(const WalkModel& model, int64_t n,
                                        int64_t paths, uint64_t seed,
                                        int workers = 0, double a = 1.0,
                                        double b = 2.0) {
  if (n < 0) throw SimulationError("occupation_stats: n must be >= 0");
  if (!(0 < a && a < b)) throw SimulationError("occupation_stats: need 0 < a < b");
  const int dim = model.dim();
  const Site zero = origin_site();
  const int64_t n_far = static_cast<int64_t>(std::floor(b * static_cast<double>(n)));
  const int64_t win_lo = static_cast<int64_t>(std::floor(a * static_cast<double>(n)));

  std::vector<int64_t> l_vals(static_cast<size_t>(paths));
  std::vector<double> ell_vals(static_cast<size_t>(paths));
  std::vector<uint8_t> no_return(static_cast<size_t>(paths));
  std::vector<uint8_t> window_hit(static_cast<size_t>(paths));

  parallel_for_replicas(paths, workers, [&](int64_t rep) {
    RngStream walk_rng = RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::walk);
    RngStream mark_rng = RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::marks);
    Site pos = zero;
    int64_t visits = 1;
    double ell = mark_rng.next_exp();
    bool returned = false, in_window = false;
    for (int64_t k = 1; k <= n_far; ++k) {
      apply_step(pos, model.sample_step(walk_rng), dim);
      if (pos == zero) {
        if (k <= n) {
          ++visits;
          ell += mark_rng.next_exp();
          returned = true;
        }
        if (k > win_lo && k <= n_far) in_window = true;
      }
    }
    l_vals[static_cast<size_t>(rep)] = visits;
    ell_vals[static_cast<size_t>(rep)] = ell;
    no_return[static_cast<size_t>(rep)] = returned ? 0 : 1;
    window_hit[static_cast<size_t>(rep)] = in_window ? 1 : 0;
  });

  OccupationStats out;
  out.n = n;
  int64_t nr = 0, wh = 0, lsum = 0;
  unsigned __int128 lsq = 0;
  for (int64_t i = 0; i < paths; ++i) {
    nr += no_return[static_cast<size_t>(i)];
    wh += window_hit[static_cast<size_t>(i)];
    lsum += l_vals[static_cast<size_t>(i)];
    lsq += static_cast<unsigned __int128>(l_vals[static_cast<size_t>(i)]) *
           static_cast<unsigned __int128>(l_vals[static_cast<size_t>(i)]);
  }
  const double m = static_cast<double>(paths);
  out.r_hat = static_cast<double>(nr) / m;
  out.r_se = std::sqrt(out.r_hat * (1.0 - out.r_hat) / m);
  out.u_hat = static_cast<double>(lsum) / m;
  out.u_se = detail::se_from_sums(lsum, lsq, paths);
  out.window_freq = static_cast<double>(wh) / m;
  out.window_se = std::sqrt(out.window_freq * (1.0 - out.window_freq) / m);
  out.rl_samples.resize(static_cast<size_t>(paths));
  out.rell_samples.resize(static_cast<size_t>(paths));
  for (int64_t i = 0; i < paths; ++i) {
    out.rl_samples[static_cast<size_t>(i)] =
        out.r_hat * static_cast<double>(l_vals[static_cast<size_t>(i)]);
    out.rell_samples[static_cast<size_t>(i)] = out.r_hat * ell_vals[static_cast<size_t>(i)];
  }
  return out;
}

// The estimated scaling chain of a (walk, law) pair:
//   s_n   law quantile at the grid n
//   v_n   s at rho_hat_n
//   nu_n  v_n / r_hat_n          (clock scale)
//   n(u)  right-continuous inverse of nu, log-log interpolated
//   a(eps) = 1 / v(n(1/eps))     (energy rescaling)
// r_hat is isotonic-corrected (nonincreasing) before the chain so that nu is
// invertible; raw values stay available in r_raw.
class ScalingBundle {
 public:
  std::vector<int64_t> n;
  std::vector<double> r_raw, r_hat, r_se;
  std::vector<double> rho_hat, rho_se;
  std::vector<double> u_hat;
  std::vector<double> s, v, nu;

  double nu_min() const { return nu.front(); }
  double nu_max() const { return nu.back(); }

  // max{n in grid closure : nu_n <= u}, log-log linear between grid points.
  double n_of(double u) const {
    auto it = std::upper_bound(nu.begin(), nu.end(), u);
    if (it == nu.begin())
      throw SimulationError("scaling grid exhausted below: nu range starts at " +
                            std::to_string(nu.front()) + ", queried " + std::to_string(u) +
                            "; extend n_grid downward");
    size_t hi = static_cast<size_t>(it - nu.begin());
    size_t lo = hi - 1;
    if (nu[lo] == u) return static_cast<double>(n[lo]);
    if (hi == nu.size())
      throw SimulationError("grid exhausted; extend n_grid (nu range ends at " +
                            std::to_string(nu.back()) + ", queried " + std::to_string(u) + ")");
    double t = (std::log(u) - std::log(nu[lo])) / (std::log(nu[hi]) - std::log(nu[lo]));
    return std::exp((1.0 - t) * std::log(static_cast<double>(n[lo])) +
                    t * std::log(static_cast<double>(n[hi])));
  }

  double v_at_steps(double n_real) const { return interp_log(v, n_real); }
  double nu_at_steps(double n_real) const { return interp_log(nu, n_real); }

  // Window scale v_{n(t)} for a clock time t.
  double v_at_time(double t) const { return v_at_steps(n_of(t)); }

  double a_of(double eps) const {
    if (!(eps > 0.0 && eps < 1.0))
      throw SimulationError("a(eps): eps must be in (0,1)");
    return 1.0 / v_at_time(1.0 / eps);
  }

 private:
  double interp_log(const std::vector<double>& ys, double n_real) const {
    if (n_real < static_cast<double>(n.front()) || n_real > static_cast<double>(n.back()))
      throw SimulationError("grid exhausted; extend n_grid (steps " +
                            std::to_string(n_real) + " outside grid)");
    auto it = std::lower_bound(n.begin(), n.end(), static_cast<int64_t>(std::ceil(n_real)));
    size_t hi = static_cast<size_t>(it - n.begin());
    if (static_cast<double>(n[hi]) == n_real || hi == 0) return ys[hi];
    size_t lo = hi - 1;
    double t = (std::log(n_real) - std::log(static_cast<double>(n[lo]))) /
               (std::log(static_cast<double>(n[hi])) - std::log(static_cast<double>(n[lo])));
    return std::exp((1.0 - t) * std::log(ys[lo]) + t * std::log(ys[hi]));
  }
};

// Geometric grid n_j = ceil(2^(j/2)), deduplicated, covering [1, n_max].
inline std::vector<int64_t> geometric_grid(int64_t n_max) {
  std::vector<int64_t> grid;
  for (int j = 0;; ++j) {
    int64_t v = static_cast<int64_t>(std::ceil(std::pow(2.0, 0.5 * j)));
    if (v > n_max) break;
    if (grid.empty() || grid.back() != v) grid.push_back(v);
  }
  if (grid.empty() || grid.back() != n_max) grid.push_back(n_max);
  return grid;
}

inline ScalingBundle build_scaling(const WalkModel& model, const TailLaw& law,
                                   int64_t paths, uint64_t seed, int64_t n_max,
                                   int workers = 0) {
  auto survey = range_survey(model, geometric_grid(n_max), paths, seed, workers);
  ScalingBundle b;
  for (const auto& p : survey) {
    b.n.push_back(p.n);
    b.r_raw.push_back(p.r_hat);
    b.r_se.push_back(p.r_se);
    b.rho_hat.push_back(p.rho_sum);
    b.rho_se.push_back(p.rho_sum_se);
    b.u_hat.push_back(p.u_hat);
  }
  b.r_hat = isotonic_nonincreasing(b.r_raw);
  for (size_t i = 0; i < b.n.size(); ++i) {
    if (!(b.r_hat[i] > 0.0))
      throw SimulationError("r-hat vanished at n=" + std::to_string(b.n[i]) +
                            "; increase paths or reduce n_max");
    b.s.push_back(law.tail_quantile(static_cast<double>(b.n[i])));
    b.v.push_back(law.tail_quantile(b.rho_hat[i]));
    b.nu.push_back(b.v.back() / b.r_hat[i]);
  }
  for (size_t i = 1; i < b.nu.size(); ++i)
    if (b.nu[i] < b.nu[i - 1])
      throw SimulationError("nu sequence not monotone after isotonic correction");
  return b;
}

// Models exercised by the identity test suites.
inline std::vector<WalkModel> shipped_models() {
  return {WalkModel::srw(1),      WalkModel::srw(2),      WalkModel::srw(3),
          WalkModel::asym1d(1.0), WalkModel::asym1d(0.8), WalkModel::heavy1d(0.7)};
}

}  // namespace trapsim
