#pragma once

#include <cmath>
#include <string>

#include "trapsim/errors.hpp"

namespace trapsim {

enum class TailFamily { pareto, log_pareto };

inline std::string family_name(TailFamily f) {
  return f == TailFamily::pareto ? "pareto" : "log_pareto";
}

inline TailFamily parse_family(const std::string& s) {
  if (s == "pareto") return TailFamily::pareto;
  if (s == "log_pareto") return TailFamily::log_pareto;
  throw ConfigError("env.family: expected pareto or log_pareto, got '" + s + "'");
}

// Heavy-tailed trap-depth law with tail index alpha in (0,1).
//
//   pareto:      P(tau > t) = t^-alpha           for t >= 1
//   log_pareto:  P(tau > t) = t^-alpha (1+ln t)  for t >= t0
//
// where t0 is the larger root of t^-alpha (1+ln t) = 1, so the tail is 1 up
// to the support minimum and strictly decreasing beyond it.
class TailLaw {
 public:
  TailLaw(TailFamily family, double alpha) : family_(family), alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("env.alpha: must be in (0,1), got " + std::to_string(alpha));
    if (family_ == TailFamily::log_pareto) {
      // The raw tail rises from 1 at t=1 to its peak at exp(1/alpha - 1);
      // bracket the root to the right of the peak.
      double peak = std::exp(1.0 / alpha_ - 1.0);
      support_min_ = solve_raw_tail(1.0, peak);
    } else {
      support_min_ = 1.0;
    }
  }

  TailFamily family() const { return family_; }
  double alpha() const { return alpha_; }
  double support_min() const { return support_min_; }

  // P(tau > t). Nonincreasing, right-continuous, equals 1 at the support
  // minimum.
  double tail(double t) const {
    if (t <= support_min_) return 1.0;
    return raw_tail(t);
  }

  double cdf(double t) const { return 1.0 - tail(t); }

  // Tail inverse: the t >= support_min with tail(t) = u, u in (0,1].
  double quantile_of_tail(double u) const {
    if (!(u > 0.0 && u <= 1.0))
      throw SimulationError("tail level must be in (0,1], got " + std::to_string(u));
    if (u == 1.0) return support_min_;
    if (family_ == TailFamily::pareto) return std::pow(u, -1.0 / alpha_);
    return solve_raw_tail(u, support_min_);
  }

  // s_n = inf{t >= 0 : tail(t) <= 1/n}. Accepts real n >= 1 so that the
  // scaling chain can evaluate s at estimated (non-integer) arguments.
  double tail_quantile(double n) const {
    if (!(n >= 1.0))
      throw SimulationError("tail_quantile requires n >= 1, got " + std::to_string(n));
    return quantile_of_tail(1.0 / n);
  }

  // Inverse-CDF sample at uniform level u in (0,1): the t with tail(t) = u.
  double sample_tau(double u) const {
    if (!(u > 0.0 && u < 1.0))
      throw SimulationError("sample_tau requires u in (0,1), got " + std::to_string(u));
    return quantile_of_tail(u);
  }

 private:
  double raw_tail(double t) const {
    if (family_ == TailFamily::pareto) return std::pow(t, -alpha_);
    return std::pow(t, -alpha_) * (1.0 + std::log(t));
  }

  // Solves raw_tail(t) = u on [lo, inf), where raw_tail is strictly
  // decreasing. Bisection in log t, relative tolerance 1e-13.
  double solve_raw_tail(double u, double lo) const {
    double ylo = std::log(lo);
    double yhi = ylo + 1.0;
    while (raw_tail(std::exp(yhi)) > u) {
      ylo = yhi;
      yhi *= 2.0;
      if (yhi > 700.0 / alpha_ + 64.0)
        throw SimulationError("tail quantile bracket overflow");
    }
    for (int it = 0; it < 200 && (yhi - ylo) > 1e-13 * (1.0 + std::abs(yhi)); ++it) {
      double mid = 0.5 * (ylo + yhi);
      if (raw_tail(std::exp(mid)) > u)
        ylo = mid;
      else
        yhi = mid;
    }
    return std::exp(yhi);
  }

  TailFamily family_;
  double alpha_;
  double support_min_;
};

}  // namespace trapsim
