#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "trapsim/environment.hpp"
#include "trapsim/errors.hpp"
#include "trapsim/rng.hpp"
#include "trapsim/walk.hpp"
#include "trapsim/walk_stats.hpp"

namespace trapsim {

// Overrides for the trap depths and exponential marks; tests use constant
// hooks to force deterministic clocks.
struct ClockHooks {
  std::function<double(const Site&)> tau;       // default: env.tau_at
  std::function<double(RngStream&)> mark;       // default: Exp(1) draw
};

// Clock and energy bookkeeping of one trap-model trajectory:
//   clock[k] = C_k = sum_{i<=k} tau_{X_i} T_i   (strictly increasing)
//   taus[k]  = tau_{X_k}
// The walker occupies X_k during (C_{k-1}, C_k], C_{-1} := 0. The RNG
// streams live in the trace so extension continues them exactly; nothing
// already generated is ever resampled.
class ClockTrace {
 public:
  ClockTrace(const WalkModel& model, const Environment& env, RngStream walk_rng,
             RngStream marks_rng, ClockHooks hooks = {})
      : model_(&model),
        env_(&env),
        walk_rng_(walk_rng),
        marks_rng_(marks_rng),
        hooks_(std::move(hooks)) {
    if (model.dim() != env.dim())
      throw SimulationError("clock trace: walk dimension " + std::to_string(model.dim()) +
                            " does not match environment dimension " +
                            std::to_string(env.dim()));
    pos_ = origin_site();
    append_current_site();
  }

  int dim() const { return model_->dim(); }
  int64_t steps() const { return static_cast<int64_t>(clock_.size()) - 1; }
  const std::vector<double>& clock() const { return clock_; }
  const std::vector<double>& taus() const { return taus_; }
  const std::vector<double>& marks() const { return marks_; }
  const Environment& env() const { return *env_; }

  Site site_at(int64_t k) const {
    Site s = origin_site();
    for (int i = 0; i < dim(); ++i)
      s[i] = positions_[static_cast<size_t>(k) * dim() + i];
    return s;
  }

  // Grows the trajectory to new_steps jumps (no-op if already longer).
  void extend(int64_t new_steps) {
    while (steps() < new_steps) {
      apply_step(pos_, model_->sample_step(walk_rng_), dim());
      append_current_site();
    }
  }

  // Doubles the length until the clock passes t.
  void extend_past(double t) {
    while (clock_.back() <= t) {
      int64_t target = std::max<int64_t>(16, 2 * steps());
      if (target > (int64_t{1} << 34))
        throw SimulationError("clock trace extension exceeded 2^34 steps");
      extend(target);
    }
  }

  // Running maximum of tau over steps 0..k (built on demand, for the
  // novelty aging functional).
  const std::vector<double>& prefix_max_tau() const {
    if (prefix_max_.size() != taus_.size()) {
      prefix_max_.resize(taus_.size());
      double m = 0.0;
      for (size_t i = 0; i < taus_.size(); ++i) {
        m = std::max(m, taus_[i]);
        prefix_max_[i] = m;
      }
    }
    return prefix_max_;
  }

 private:
  void append_current_site() {
    for (int i = 0; i < dim(); ++i) positions_.push_back(pos_[i]);
    double tau = hooks_.tau ? hooks_.tau(pos_) : env_->tau_at(pos_);
    double mark = hooks_.mark ? hooks_.mark(marks_rng_) : marks_rng_.next_exp();
    taus_.push_back(tau);
    marks_.push_back(mark);
    double prev = clock_.empty() ? 0.0 : clock_.back();
    clock_.push_back(prev + tau * mark);
  }

  const WalkModel* model_;
  const Environment* env_;
  RngStream walk_rng_;
  RngStream marks_rng_;
  ClockHooks hooks_;
  Site pos_;
  std::vector<int64_t> positions_;
  std::vector<double> taus_;
  std::vector<double> marks_;
  std::vector<double> clock_;
  mutable std::vector<double> prefix_max_;
};

inline ClockTrace build_clock_trace(const WalkModel& model, const Environment& env,
                                    int64_t n, RngStream walk_rng, RngStream marks_rng,
                                    ClockHooks hooks = {}) {
  if (n < 0) throw SimulationError("build_clock_trace: n must be >= 0");
  ClockTrace trace(model, env, walk_rng, marks_rng, std::move(hooks));
  trace.extend(n);
  return trace;
}

// I_t = min{k >= 0 : C_k > t}: the index of the trap occupied at time t.
inline int64_t clock_index(const ClockTrace& trace, double t) {
  if (t < 0.0) throw SimulationError("clock_index: t must be >= 0");
  const auto& c = trace.clock();
  auto it = std::upper_bound(c.begin(), c.end(), t);
  if (it == c.end()) throw SimulationError("trace exhausted; extend n");
  return static_cast<int64_t>(it - c.begin());
}

// Y_t = tau_{X_{I_t}}.
inline double energy_at(const ClockTrace& trace, double t) {
  return trace.taus()[static_cast<size_t>(clock_index(trace, t))];
}

// a(eps) * Y_{t/eps}.
inline double rescaled_energy(const ClockTrace& trace, const ScalingBundle& bundle,
                              double eps, double t) {
  double a = bundle.a_of(eps);
  return a * energy_at(trace, t / eps);
}

}  // namespace trapsim
