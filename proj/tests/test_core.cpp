#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "support/oracles.hpp"
#include "trapsim/environment.hpp"
#include "trapsim/rng.hpp"
#include "trapsim/stats.hpp"
#include "trapsim/step_function.hpp"
#include "trapsim/subordinator.hpp"
#include "trapsim/tail_law.hpp"

using namespace trapsim;

TEST_CASE("rng streams are deterministic and replayable") {
  RngStream a = RngStream::make(42, 7, StreamPurpose::walk);
  RngStream b = RngStream::make(42, 7, StreamPurpose::walk);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("rng purpose tags separate streams") {
  RngStream w = RngStream::make(42, 7, StreamPurpose::walk);
  RngStream m = RngStream::make(42, 7, StreamPurpose::marks);
  RngStream e = RngStream::make(42, 7, StreamPurpose::env);
  RngStream l = RngStream::make(42, 7, StreamPurpose::limit);
  std::set<uint64_t> seen;
  for (int i = 0; i < 4000; ++i) {
    seen.insert(w.next_u64());
    seen.insert(m.next_u64());
    seen.insert(e.next_u64());
    seen.insert(l.next_u64());
  }
  REQUIRE(seen.size() == 16000);
}

TEST_CASE("rng unit draws are open-interval uniform") {
  RngStream s = RngStream::make(3, 0, StreamPurpose::aux);
  std::vector<double> us(100000);
  double sum_exp = 0.0;
  for (auto& u : us) {
    u = s.next_unit();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
  double ks = ks_vs_cdf(us, [](double t) { return std::min(1.0, std::max(0.0, t)); });
  REQUIRE(ks < 0.012);
  RngStream e = RngStream::make(4, 0, StreamPurpose::aux);
  for (int i = 0; i < 100000; ++i) sum_exp += e.next_exp();
  REQUIRE(std::abs(sum_exp / 100000.0 - 1.0) < 0.01);
}

TEST_CASE("pareto tail quantiles are closed form") {
  TailLaw law(TailFamily::pareto, 0.5);
  REQUIRE(law.tail_quantile(1.0) == 1.0);
  REQUIRE(law.tail_quantile(100.0) == Catch::Approx(10000.0).epsilon(1e-12));
  REQUIRE(law.sample_tau(0.25) == Catch::Approx(16.0).epsilon(1e-12));
  REQUIRE(law.sample_tau(0.01) == Catch::Approx(10000.0).epsilon(1e-12));
  REQUIRE(law.sample_tau(1.0 - 1e-15) == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE_THROWS_AS(law.sample_tau(0.0), SimulationError);
  REQUIRE_THROWS_AS(law.sample_tau(1.0), SimulationError);
  REQUIRE_THROWS_AS(TailLaw(TailFamily::pareto, 1.0), ConfigError);
  REQUIRE_THROWS_AS(TailLaw(TailFamily::pareto, 0.0), ConfigError);
}

TEST_CASE("quantile/tail duality") {
  TailLaw p(TailFamily::pareto, 0.3);
  for (double n : {1.0, 2.0, 10.0, 1234.5}) {
    double s = p.tail_quantile(n);
    REQUIRE(p.tail(s) <= 1.0 / n + 1e-12);
    REQUIRE(p.tail(s) == Catch::Approx(1.0 / n).epsilon(1e-10));  // exact for pareto
    if (s > p.support_min()) REQUIRE(p.tail(s * (1.0 - 1e-9)) > 1.0 / n);
  }
  TailLaw lp(TailFamily::log_pareto, 0.5);
  for (double n : {1.0, 7.0, 100.0}) {
    double s = lp.tail_quantile(n);
    REQUIRE(lp.tail(s) <= 1.0 / n + 1e-10);
    if (s > lp.support_min() * (1 + 1e-9)) REQUIRE(lp.tail(s * (1.0 - 1e-7)) > 1.0 / n);
  }
}

TEST_CASE("log_pareto support minimum and bisection residual") {
  TailLaw law(TailFamily::log_pareto, 0.5);
  double t0 = law.support_min();
  REQUIRE(t0 > 1.0);
  // t0 solves t^-alpha (1 + ln t) = 1 on the decreasing branch.
  REQUIRE(std::pow(t0, -0.5) * (1.0 + std::log(t0)) == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(law.tail(t0) == 1.0);
  REQUIRE(law.tail(t0 * 1.001) < 1.0);

  double t = law.tail_quantile(100.0);
  REQUIRE(std::abs(std::pow(t, -0.5) * (1.0 + std::log(t)) - 0.01) < 1e-10);
}

TEST_CASE("tail law is nonincreasing and right-continuous at the support edge") {
  for (auto fam : {TailFamily::pareto, TailFamily::log_pareto}) {
    TailLaw law(fam, 0.4);
    double prev = 1.0;
    for (double t = law.support_min() * 0.5; t < law.support_min() * 50; t *= 1.07) {
      double cur = law.tail(t);
      REQUIRE(cur <= prev + 1e-15);
      prev = cur;
    }
    REQUIRE(law.tail(law.support_min()) == 1.0);
  }
}

TEST_CASE("inverse-CDF sampling matches the tail") {
  // Fraction of samples above t stays within 3 sqrt(tail/0) of tail(t).
  for (auto fam : {TailFamily::pareto, TailFamily::log_pareto}) {
    TailLaw law(fam, 0.6);
    const int64_t n = 1000000;
    RngStream s = RngStream::make(11, 0, StreamPurpose::aux);
    std::vector<double> checkpoints;
    for (double f : {1.0, 1.5, 4.0, 30.0, 1000.0}) checkpoints.push_back(law.support_min() * f);
    std::vector<int64_t> above(checkpoints.size(), 0);
    for (int64_t i = 0; i < n; ++i) {
      double tau = law.sample_tau(s.next_unit());
      REQUIRE(tau >= law.support_min() * (1 - 1e-12));
      for (size_t j = 0; j < checkpoints.size(); ++j)
        if (tau > checkpoints[j]) ++above[j];
    }
    for (size_t j = 0; j < checkpoints.size(); ++j) {
      double tail = law.tail(checkpoints[j]);
      double frac = static_cast<double>(above[j]) / static_cast<double>(n);
      REQUIRE(std::abs(frac - tail) <=
              3.0 * std::sqrt(tail * (1 - tail) / static_cast<double>(n)) + 1e-9);
    }
  }
}

TEST_CASE("environment lookups are pure and seed-determined") {
  TailLaw law(TailFamily::pareto, 0.5);
  Environment env(law, 123, 3);
  Environment env2(law, 123, 3);
  Site x{5, -2, 7, 0};
  REQUIRE(env.tau_at(x) == env.tau_at(x));
  REQUIRE(env.tau_at(x) == env2.tau_at(x));
  Environment other(law, 124, 3);
  REQUIRE(env.tau_at(x) != other.tau_at(x));

  int64_t coords[2] = {1, 2};
  REQUIRE_THROWS_AS(env.tau_at(coords, 2), SimulationError);
}

TEST_CASE("environment sites are marginally correct and uncorrelated") {
  TailLaw law(TailFamily::pareto, 0.5);
  Environment env(law, 2024, 2);
  const int n = 100000;
  std::vector<double> taus(n);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    Site a{i, 0, 0, 0}, b{i, 1, 0, 0};
    taus[static_cast<size_t>(i)] = env.tau_at(a);
    // Correlate the uniform levels; tau itself has infinite variance.
    double ua = env.unit_at(a), ub = env.unit_at(b);
    sx += ua;
    sy += ub;
    sxx += ua * ua;
    syy += ub * ub;
    sxy += ua * ub;
  }
  double mx = sx / n, my = sy / n;
  double corr = (sxy / n - mx * my) /
                std::sqrt((sxx / n - mx * mx) * (syy / n - my * my));
  REQUIRE(std::abs(corr) < 0.01);
  REQUIRE(ks_vs_cdf(taus, [&](double t) { return law.cdf(t); }) < 0.01);
}

TEST_CASE("ks statistics") {
  std::vector<double> a{1.0, 2.0, 3.0};
  REQUIRE(ks_two_sample(a, a) == 0.0);
  std::vector<double> b{4.0, 5.0};
  REQUIRE(ks_two_sample(a, b) == 1.0);

  RngStream s = RngStream::make(5, 0, StreamPurpose::aux);
  std::vector<double> u1(100000), u2(100000);
  for (auto& v : u1) v = s.next_unit();
  for (auto& v : u2) v = s.next_unit();
  REQUIRE(ks_two_sample(u1, u2) < 0.012);

  std::vector<double> e(100000);
  for (auto& v : e) v = s.next_exp();
  REQUIRE(ks_vs_exponential(e) < 0.012);

  REQUIRE(ks_vs_exponential({std::log(2.0)}) == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE_THROWS_AS(ks_vs_exponential({}), SimulationError);
  REQUIRE_THROWS_AS(ks_vs_exponential({1.0, -2.0}), SimulationError);
  REQUIRE_THROWS_AS(ks_two_sample({}, {1.0}), SimulationError);
}

TEST_CASE("wilson interval") {
  auto [lo0, hi0] = wilson_interval(0, 50);
  REQUIRE(lo0 == 0.0);
  auto [lo1, hi1] = wilson_interval(50, 50);
  REQUIRE(hi1 == 1.0);
  auto [lo, hi] = wilson_interval(50, 100);
  REQUIRE((lo + hi) / 2 == Catch::Approx(0.5).margin(0.01));
  REQUIRE((hi - lo) / 2 == Catch::Approx(0.0962).margin(0.001));
  REQUIRE_THROWS_AS(wilson_interval(5, 4), SimulationError);
}

TEST_CASE("normal quantile") {
  REQUIRE(normal_quantile(0.975) == Catch::Approx(1.959963984540054).margin(1e-6));
  REQUIRE(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(normal_quantile(0.025) == Catch::Approx(-1.959963984540054).margin(1e-6));
}

TEST_CASE("incomplete beta agrees with tanh-sinh quadrature") {
  for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double theta : {0.25, 1.0, 3.0, 9.0}) {
      double via_beta = closed_form_R(theta, alpha);
      double via_quad = oracles::arcsine_integral_quadrature(theta, alpha);
      REQUIRE(std::abs(via_beta - via_quad) < 1e-9);
    }
}

TEST_CASE("closed form aging values") {
  for (double alpha : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9})
    REQUIRE(std::abs(closed_form_R(0.0, alpha) - 1.0) < 1e-10);
  REQUIRE(std::abs(closed_form_R(1.0, 0.5) - oracles::arcsine_integral_half(1.0)) < 1e-9);
  REQUIRE(std::abs(closed_form_R(1.0, 0.5) - 0.5) < 1e-9);
  REQUIRE(std::abs(closed_form_R(3.0, 0.5) - 1.0 / 3.0) < 1e-9);
  REQUIRE_THROWS_AS(closed_form_R(1.0, 1.5), SimulationError);
  REQUIRE_THROWS_AS(closed_form_R(-0.5, 0.5), SimulationError);
}

namespace {

StepFunction random_step(RngStream& rng, double domain_end) {
  int k = static_cast<int>(rng.next_below(12));
  std::vector<double> breaks;
  for (int i = 0; i < k; ++i) breaks.push_back(rng.next_unit() * domain_end);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> values;
  for (size_t i = 0; i <= breaks.size(); ++i) values.push_back(4.0 * rng.next_unit() - 2.0);
  return StepFunction(breaks, values, domain_end);
}

}  // namespace

TEST_CASE("path distance basics") {
  StepFunction f = StepFunction::constant(1.0, 42.0);
  StepFunction g = StepFunction::constant(0.0, 42.0);
  REQUIRE(path_distance_l1(f, f, 10.0) == 0.0);
  // |f-g| = 1 on [0,1], 0 after: rectangle of area 1 inside [0,2].
  StepFunction h({1.0}, {1.0, 0.0}, 42.0);
  REQUIRE(path_distance_l1(h, g, 2.0) == Catch::Approx(1.0).epsilon(1e-12));
  // |f-g| = 1 everywhere: d = sum 2^-n = 1 up to the 2^-40 truncation tail.
  REQUIRE(path_distance_weighted(f, g) == Catch::Approx(1.0).margin(1.1 * std::ldexp(1.0, -40)));
  REQUIRE(path_distance_weighted(f, f) == 0.0);
  REQUIRE_THROWS_AS(path_distance_l1(f, StepFunction::constant(0.0, 5.0), 10.0),
                    SimulationError);
  REQUIRE_THROWS_AS(path_distance_weighted(f, StepFunction::constant(0.0, 5.0)),
                    SimulationError);
}

TEST_CASE("step function evaluation is right-continuous") {
  StepFunction f({1.0, 2.0}, {5.0, 6.0, 7.0}, 3.0);
  REQUIRE(f(0.0) == 5.0);
  REQUIRE(f(1.0) == 6.0);  // value from the right of the break
  REQUIRE(f(1.999999) == 6.0);
  REQUIRE(f(2.0) == 7.0);
  REQUIRE_THROWS_AS(f(3.5), SimulationError);
  REQUIRE_THROWS_AS(StepFunction({2.0, 1.0}, {0, 0, 0}, 3.0), SimulationError);
  REQUIRE_THROWS_AS(StepFunction({1.0}, {0.0}, 3.0), SimulationError);
}

TEST_CASE("path distances satisfy the metric axioms") {
  RngStream rng = RngStream::make(99, 0, StreamPurpose::aux);
  for (int trial = 0; trial < 1000; ++trial) {
    StepFunction f = random_step(rng, 42.0);
    StepFunction g = random_step(rng, 42.0);
    StepFunction h = random_step(rng, 42.0);
    double fg = path_distance_weighted(f, g);
    double gf = path_distance_weighted(g, f);
    double fh = path_distance_weighted(f, h);
    double gh = path_distance_weighted(g, h);
    REQUIRE(fg >= 0.0);
    REQUIRE(fg == Catch::Approx(gf).margin(1e-12));
    REQUIRE(fh <= fg + gh + 1e-12);
    REQUIRE(fg <= 1.0 + std::ldexp(1.0, -40));
    double l1_fg = path_distance_l1(f, g, 42.0);
    double l1_fh = path_distance_l1(f, h, 42.0);
    double l1_gh = path_distance_l1(g, h, 42.0);
    REQUIRE(l1_fg == Catch::Approx(path_distance_l1(g, f, 42.0)).margin(1e-12));
    REQUIRE(l1_fh <= l1_fg + l1_gh + 1e-9);
  }
}
