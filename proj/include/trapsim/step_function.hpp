#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "trapsim/errors.hpp"

namespace trapsim {

// Right-continuous step function on [0, T]: values_[i] holds on
// [breaks_[i-1], breaks_[i]) with breaks_[-1] := 0 and breaks_[m] := T.
class StepFunction {
 public:
  StepFunction(std::vector<double> breakpoints, std::vector<double> values,
               double domain_end)
      : breaks_(std::move(breakpoints)),
        values_(std::move(values)),
        domain_end_(domain_end) {
    if (values_.size() != breaks_.size() + 1)
      throw SimulationError("StepFunction: need one value per interval");
    if (!(domain_end_ > 0.0))
      throw SimulationError("StepFunction: domain end must be positive");
    for (size_t i = 0; i < breaks_.size(); ++i) {
      if (breaks_[i] < 0.0 || breaks_[i] > domain_end_)
        throw SimulationError("StepFunction: breakpoint outside [0, T]");
      if (i > 0 && !(breaks_[i] > breaks_[i - 1]))
        throw SimulationError("StepFunction: breakpoints must be strictly increasing");
    }
  }

  static StepFunction constant(double value, double domain_end) {
    return StepFunction({}, {value}, domain_end);
  }

  double domain_end() const { return domain_end_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double t) const {
    if (t < 0.0 || t > domain_end_)
      throw SimulationError("StepFunction: evaluation outside [0, T]");
    size_t i = std::upper_bound(breaks_.begin(), breaks_.end(), t) - breaks_.begin();
    return values_[i];
  }

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
  double domain_end_;
};

// d_T: the L1 distance of f and g on [0, T], by exact piecewise integration
// over the merged breakpoint sequence.
inline double path_distance_l1(const StepFunction& f, const StepFunction& g,
                               double horizon) {
  if (!(horizon > 0.0)) throw SimulationError("path_distance: horizon must be positive");
  if (f.domain_end() < horizon || g.domain_end() < horizon)
    throw SimulationError("path_distance: domain mismatch, function not defined on [0, T]");
  const auto& fb = f.breakpoints();
  const auto& gb = g.breakpoints();
  size_t i = 0, j = 0;
  double t = 0.0, total = 0.0;
  size_t fi = 0, gi = 0;  // current interval index in each function
  while (t < horizon) {
    double next = horizon;
    if (i < fb.size() && fb[i] < next) next = fb[i];
    if (j < gb.size() && gb[j] < next) next = gb[j];
    if (next > t) total += std::abs(f.values()[fi] - g.values()[gi]) * (next - t);
    t = next;
    while (i < fb.size() && fb[i] <= t) ++i, ++fi;
    while (j < gb.size() && gb[j] <= t) ++j, ++gi;
  }
  return total;
}

// Truncation depth of the weighted metric d = sum_n 2^-n (d_n ^ 1); the
// discarded tail is below 2^-40.
inline constexpr int kPathMetricCut = 40;

inline double path_distance_weighted(const StepFunction& f, const StepFunction& g) {
  if (f.domain_end() < kPathMetricCut || g.domain_end() < kPathMetricCut)
    throw SimulationError("path_distance: domain mismatch, d needs [0, 40]");
  double total = 0.0;
  for (int n = 1; n <= kPathMetricCut; ++n) {
    double dn = path_distance_l1(f, g, static_cast<double>(n));
    total += std::ldexp(std::min(dn, 1.0), -n);
    if (dn >= 1.0) {
      // d_n is nondecreasing in n: every remaining term caps at 1.
      total += std::ldexp(1.0, -n) - std::ldexp(1.0, -kPathMetricCut);
      break;
    }
  }
  return total;
}

}  // namespace trapsim
