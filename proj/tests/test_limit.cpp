#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "trapsim/parallel.hpp"
#include "trapsim/stats.hpp"
#include "trapsim/subordinator.hpp"

using namespace trapsim;

TEST_CASE("subordinator jump counts follow the truncation rate") {
  // Levy density alpha x^(-1-alpha): jumps above delta0 arrive at rate
  // delta0^-alpha = 10 per unit time here.
  const int64_t paths = 10000;
  int64_t total = 0;
  for (int64_t rep = 0; rep < paths; ++rep) {
    RngStream rng = RngStream::make(31, static_cast<uint64_t>(rep), StreamPurpose::limit);
    SubordinatorPath p = sample_subordinator(0.5, 1.0, 0.01, rng);
    total += static_cast<int64_t>(p.jumps.size());
    REQUIRE(p.x_max == 1.0);
  }
  double mean = static_cast<double>(total) / static_cast<double>(paths);
  REQUIRE(std::abs(mean - 10.0) < 0.3);
}

TEST_CASE("subordinator jump sizes are truncated pareto") {
  RngStream rng = RngStream::make(32, 0, StreamPurpose::limit);
  int64_t n = 0, above = 0;
  while (n < 20000) {
    SubordinatorPath p = sample_subordinator(0.5, 1.0, 1.0, rng);
    for (const auto& j : p.jumps) {
      REQUIRE(j.size > 1.0);
      above += j.size > 4.0;
      ++n;
    }
  }
  // P(size > 4) = (4/1)^-0.5 = 0.5
  REQUIRE(std::abs(static_cast<double>(above) / static_cast<double>(n) - 0.5) < 0.02);
}

TEST_CASE("subordinator refuses absurd jump budgets") {
  RngStream rng = RngStream::make(33, 0, StreamPurpose::limit);
  REQUIRE_THROWS_AS(sample_subordinator(0.5, 1.0, 1e-18, rng), SimulationError);
  REQUIRE_THROWS_AS(sample_subordinator(1.2, 1.0, 0.01, rng), SimulationError);
}

TEST_CASE("z lookup walks the straddled jump") {
  SubordinatorPath p;
  p.alpha = 0.5;
  p.delta0 = 0.1;
  p.x_max = 1.0;
  p.jumps = {{0.25, 3.0, 2.0}, {0.75, 5.0, 1.0}};
  p.v_cum = {6.0, 11.0};
  for (double t : {0.0, 1.0, 5.999}) REQUIRE(z_at(p, t) == 3.0);
  for (double t : {6.0, 10.0}) REQUIRE(z_at(p, t) == 5.0);  // right-continuous at V_1
  REQUIRE_THROWS_WITH(z_at(p, 11.0), Catch::Matchers::ContainsSubstring("horizon exhausted"));
  REQUIRE_THROWS_AS(z_at(p, -1.0), SimulationError);
}

TEST_CASE("horizon extension continues the same stream deterministically") {
  RngStream rng1 = RngStream::make(34, 0, StreamPurpose::limit);
  SubordinatorPath a = sample_subordinator(0.5, 8.0, 0.01, rng1);
  RngStream rng2 = RngStream::make(34, 0, StreamPurpose::limit);
  SubordinatorPath b = sample_subordinator(0.5, 2.0, 0.01, rng2);
  detail::append_jumps(b, 8.0, rng2);
  REQUIRE(a.jumps.size() == b.jumps.size());
  for (size_t i = 0; i < a.jumps.size(); ++i) {
    REQUIRE(a.jumps[i].location == b.jumps[i].location);
    REQUIRE(a.jumps[i].size == b.jumps[i].size);
    REQUIRE(a.jumps[i].mark == b.jumps[i].mark);
  }
}

TEST_CASE("z is self similar of index one") {
  const int64_t n = 10000;
  std::vector<double> z1(n), z2(n);
  parallel_for_replicas(n, 0, [&](int64_t rep) {
    RngStream rng = RngStream::make(35, static_cast<uint64_t>(rep), StreamPurpose::limit);
    SubordinatorPath p = sample_subordinator(0.5, 4.0, 1e-3, rng);
    extend_subordinator(p, 1.0, rng);
    z1[static_cast<size_t>(rep)] = z_at(p, 1.0);
  });
  parallel_for_replicas(n, 0, [&](int64_t rep) {
    RngStream rng = RngStream::make(36, static_cast<uint64_t>(rep), StreamPurpose::limit);
    SubordinatorPath p = sample_subordinator(0.5, 6.0, 1e-3, rng);
    extend_subordinator(p, 3.0, rng);
    z2[static_cast<size_t>(rep)] = z_at(p, 3.0) / 3.0;
  });
  REQUIRE(ks_two_sample(z1, z2) < 0.05);
}

TEST_CASE("limit aging at theta zero") {
  auto r = estimate_limit_aging(0.5, LimitAgingMode::R, {0.0}, 200, 1e-2, 37, 0);
  REQUIRE(r[0].estimate == 1.0);
  auto pl = estimate_limit_aging(0.5, LimitAgingMode::PiLaplace, {0.0}, 200, 1e-2, 37, 0);
  REQUIRE(pl[0].estimate == 1.0);
  auto om = estimate_limit_aging(0.5, LimitAgingMode::Omega, {0.0}, 200, 1e-2, 37, 0);
  REQUIRE(om[0].estimate == 0.0);
}

TEST_CASE("limit aging near the arcsine value") {
  auto r = estimate_limit_aging(0.5, LimitAgingMode::R, {1.0}, 20000, 1e-3, 38, 0);
  REQUIRE(std::abs(r[0].estimate - 0.5) < 0.03);  // small truncation bias remains
}

TEST_CASE("range-miss and laplace routes agree") {
  for (double alpha : {0.3, 0.6}) {
    auto r = estimate_limit_aging(alpha, LimitAgingMode::R, {0.5, 1.0, 2.0}, 20000,
                                  1e-3, 39, 0);
    auto pl = estimate_limit_aging(alpha, LimitAgingMode::PiLaplace, {0.5, 1.0, 2.0},
                                   20000, 1e-3, 40, 0);
    for (size_t i = 0; i < r.size(); ++i) {
      double comb = std::sqrt(r[i].se * r[i].se + pl[i].se * pl[i].se);
      REQUIRE(std::abs(r[i].estimate - pl[i].estimate) <= 3.0 * comb);
    }
  }
}

TEST_CASE("aging probability is invariant under jump rescaling") {
  // The range-miss event is scale-free: multiplying every jump size (and so
  // V) by c > 0 moves the crossing level from 1 to 1/c but the law of the
  // event is unchanged.
  const int64_t n = 20000;
  const double theta = 1.0, c = 3.0;
  int64_t base = 0, scaled = 0;
  for (int64_t rep = 0; rep < n; ++rep) {
    RngStream rng = RngStream::make(41, static_cast<uint64_t>(rep), StreamPurpose::limit);
    SubordinatorPath p = sample_subordinator(0.5, 5.0, 1e-3, rng);
    extend_subordinator(p, (1.0 + theta) * c, rng);
    size_t i1 = straddling_index(p, 1.0);
    base += p.v_cum[i1] > 1.0 + theta;
    // same path with every size (hence V) multiplied by c
    auto it = std::upper_bound(p.v_cum.begin(), p.v_cum.end(), 1.0 / c);
    size_t j1 = static_cast<size_t>(it - p.v_cum.begin());
    scaled += c * p.v_cum[j1] > 1.0 + theta;
  }
  double pb = static_cast<double>(base) / n, ps = static_cast<double>(scaled) / n;
  double se = std::sqrt(pb * (1 - pb) / n) + std::sqrt(ps * (1 - ps) / n);
  REQUIRE(std::abs(pb - ps) <= 3.0 * se);
}

TEST_CASE("limit aging input validation") {
  REQUIRE_THROWS_AS(estimate_limit_aging(0.5, LimitAgingMode::R, {}, 100, 1e-2, 1, 0),
                    SimulationError);
  REQUIRE_THROWS_AS(estimate_limit_aging(0.5, LimitAgingMode::R, {-1.0}, 100, 1e-2, 1, 0),
                    SimulationError);
}
