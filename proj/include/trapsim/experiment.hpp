#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trapsim/aging.hpp"
#include "trapsim/clock.hpp"
#include "trapsim/config.hpp"
#include "trapsim/environment.hpp"
#include "trapsim/errors.hpp"
#include "trapsim/io.hpp"
#include "trapsim/stats.hpp"
#include "trapsim/subordinator.hpp"
#include "trapsim/tail_law.hpp"
#include "trapsim/version.hpp"
#include "trapsim/walk.hpp"
#include "trapsim/walk_stats.hpp"

namespace trapsim {

struct SvgPlot {
  std::string filename;
  std::string content;
};

struct ResultBundle {
  std::string kind;
  std::vector<Table> tables;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<SvgPlot> plots;
};

inline WalkModel make_walk_model(const ExperimentConfig& c) {
  if (c.walk_kind == "srw") return WalkModel::srw(c.walk_d);
  if (c.walk_kind == "asym1d") return WalkModel::asym1d(c.walk_p);
  if (c.walk_kind == "heavy1d") return WalkModel::heavy1d(c.walk_beta, c.walk_kmax);
  // table: rows of d offset coordinates followed by a probability
  std::ifstream in(c.walk_table_path);
  if (!in) throw ConfigError("walk.table_path: cannot read '" + c.walk_table_path + "'");
  std::vector<std::pair<Site, double>> entries;
  std::string line;
  int d = -1;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto fields = detail::split_list(s);
    if (fields.size() < 2)
      throw ConfigError("walk.table_path:" + std::to_string(lineno) +
                        ": expected offset coordinates and a probability");
    int row_d = static_cast<int>(fields.size()) - 1;
    if (d < 0) d = row_d;
    if (row_d != d)
      throw ConfigError("walk.table_path:" + std::to_string(lineno) +
                        ": inconsistent offset dimension");
    Site off = origin_site();
    for (int i = 0; i < d; ++i)
      off[i] = detail::parse_int("walk.table_path offset", fields[static_cast<size_t>(i)]);
    double p = detail::parse_real("walk.table_path probability", fields.back());
    entries.emplace_back(off, p);
  }
  if (d < 0) throw ConfigError("walk.table_path: file has no entries");
  return WalkModel::table(d, std::move(entries));
}

inline TailLaw make_law(const ExperimentConfig& c) {
  return TailLaw(parse_family(c.env_family), c.env_alpha);
}

namespace detail {

// Builds a scaling bundle whose nu range covers t_need, doubling n_max as
// needed. An explicit bundle.n_max is taken as-is and coverage failures
// surface later as grid-exhausted errors.
inline ScalingBundle covering_bundle(const WalkModel& model, const TailLaw& law,
                                     const ExperimentConfig& c, double t_need) {
  if (c.bundle_n_max > 0)
    return build_scaling(model, law, c.bundle_paths, c.seed ^ 0xb51eULL, c.bundle_n_max,
                         c.workers);
  int64_t n_max = 4096;
  for (;;) {
    ScalingBundle b = build_scaling(model, law, c.bundle_paths, c.seed ^ 0xb51eULL, n_max,
                                    c.workers);
    if (b.nu_max() >= t_need) return b;
    if (n_max >= (int64_t{1} << 24))
      throw SimulationError("grid exhausted; extend n_grid (bundle.n_max cap reached at " +
                            std::to_string(n_max) + ")");
    n_max *= 4;
  }
}

inline void append_aging_rows(Table& table, const AgingCurve& curve,
                              const std::string& walk_name, double alpha) {
  for (const AgingPoint& p : curve.points)
    table.rows.push_back({aging_mode_name(curve.mode), alpha, walk_name, p.theta, p.t,
                          p.estimate, p.ci_lo, p.ci_hi, p.n_used, p.replicas});
}

inline SvgPlot make_aging_plot(const std::string& kind, const AgingCurve& curve,
                               double alpha) {
  std::vector<SvgSeries> series;
  for (size_t j = 0; j < curve.t_grid.size(); ++j) {
    SvgSeries s;
    s.label = "t=" + fmt_number(curve.t_grid[j]);
    for (const AgingPoint& p : curve.points)
      if (p.t == curve.t_grid[j]) s.points.push_back({p.theta, p.estimate, p.ci_lo, p.ci_hi});
    series.push_back(std::move(s));
  }
  std::vector<std::pair<double, double>> ref;
  if (curve.mode != AgingMode::Omega) {
    double theta_max = *std::max_element(curve.theta_grid.begin(), curve.theta_grid.end());
    if (theta_max <= 0) theta_max = 1.0;
    for (int i = 0; i <= 200; ++i) {
      double th = theta_max * i / 200.0;
      ref.emplace_back(th, closed_form_R(th, alpha));
    }
  }
  SvgPlot plot;
  std::string mode = aging_mode_name(curve.mode);
  plot.filename = kind + "_" + mode + "_alpha" + fmt_number(alpha) + ".svg";
  plot.content = render_svg_curve(kind + " " + mode + " alpha=" + fmt_number(alpha),
                                  series, ref);
  return plot;
}

inline std::vector<double> sample_z1(double alpha, double delta0, int64_t count,
                                     uint64_t seed, int workers) {
  std::vector<double> out(static_cast<size_t>(count));
  parallel_for_replicas(count, workers, [&](int64_t rep) {
    RngStream rng = RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::limit);
    SubordinatorPath path = sample_subordinator(alpha, 4.0 + 1.0, delta0, rng);
    extend_subordinator(path, 1.0, rng);
    out[static_cast<size_t>(rep)] = z_at(path, 1.0);
  });
  return out;
}

inline std::vector<double> sample_rescaled_energy(const WalkModel& model, const TailLaw& law,
                                                  const ScalingBundle& bundle, double eps,
                                                  double t, int64_t count, uint64_t seed,
                                                  int workers) {
  double t_raw = t / eps;
  double a = bundle.a_of(eps);
  int64_t n_init = initial_trace_steps(bundle, t_raw);
  std::vector<double> out(static_cast<size_t>(count));
  parallel_for_replicas(count, workers, [&](int64_t rep) {
    Environment env(law, RngStream::make(seed, static_cast<uint64_t>(rep),
                                         StreamPurpose::env).key(),
                    model.dim());
    ClockTrace trace(model, env,
                     RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::walk),
                     RngStream::make(seed, static_cast<uint64_t>(rep), StreamPurpose::marks));
    trace.extend(n_init);
    trace.extend_past(t_raw);
    out[static_cast<size_t>(rep)] = a * energy_at(trace, t_raw);
  });
  return out;
}

}  // namespace detail

inline ResultBundle run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const ExperimentConfig& c = config;
  ResultBundle bundle;
  bundle.kind = c.kind;
  int64_t total_replicas = 0;

  if (c.kind == "aging") {
    WalkModel model = make_walk_model(c);
    TailLaw law = make_law(c);
    double theta_max = *std::max_element(c.theta_grid.begin(), c.theta_grid.end());
    std::vector<double> t_grid = c.t_grid;
    ScalingBundle sb = [&] {
      if (!c.n_grid.empty()) {
        double n_top = static_cast<double>(*std::max_element(c.n_grid.begin(), c.n_grid.end()));
        double need = 1.6 * n_top * std::pow(1.0 + theta_max, law.alpha());
        ExperimentConfig cc = c;
        if (cc.bundle_n_max == 0)
          cc.bundle_n_max = static_cast<int64_t>(std::ceil(need));
        return detail::covering_bundle(model, law, cc, 0.0);
      }
      double t_need = (1.0 + theta_max) *
                      *std::max_element(c.t_grid.begin(), c.t_grid.end());
      return detail::covering_bundle(model, law, c, t_need);
    }();
    if (t_grid.empty())
      for (int64_t n : c.n_grid) t_grid.push_back(sb.nu_at_steps(static_cast<double>(n)));

    Table table;
    table.name = "aging";
    table.columns = {"mode", "alpha", "walk", "theta", "t",
                     "estimate", "ci_lo", "ci_hi", "n_used", "M"};
    for (const std::string& mode_name : c.modes) {
      AgingMode mode = parse_aging_mode(mode_name);
      AgingCurve curve = estimate_aging(model, law, sb, mode, c.theta_grid, t_grid,
                                        c.replicas, c.seed, c.workers);
      detail::append_aging_rows(table, curve, model.name(), law.alpha());
      total_replicas += c.replicas;
      if (c.plot || std::count(c.formats.begin(), c.formats.end(), "svg"))
        bundle.plots.push_back(detail::make_aging_plot(c.kind, curve, law.alpha()));
    }
    bundle.tables.push_back(std::move(table));
  } else if (c.kind == "limit-aging") {
    Table table;
    table.name = "aging";
    table.columns = {"mode", "alpha", "walk", "theta", "t",
                     "estimate", "ci_lo", "ci_hi", "n_used", "M"};
    for (const std::string& mode_name : c.modes) {
      LimitAgingMode mode = mode_name == "R"            ? LimitAgingMode::R
                            : mode_name == "Pi_laplace" ? LimitAgingMode::PiLaplace
                                                        : LimitAgingMode::Omega;
      auto pts = estimate_limit_aging(c.env_alpha, mode, c.theta_grid, c.replicas,
                                      c.delta0, c.seed, c.workers);
      total_replicas += c.replicas;
      AgingCurve curve;
      curve.mode = mode_name == "R"            ? AgingMode::R
                   : mode_name == "Pi_laplace" ? AgingMode::PiLaplace
                                               : AgingMode::Omega;
      curve.walk_name = "limit";
      curve.alpha = c.env_alpha;
      curve.theta_grid = c.theta_grid;
      curve.t_grid = {1.0};
      for (const auto& p : pts) {
        table.rows.push_back({mode_name, c.env_alpha, std::string("limit"), p.theta, 1.0,
                              p.estimate, p.ci_lo, p.ci_hi, int64_t{0}, p.replicas});
        AgingPoint ap;
        ap.theta = p.theta;
        ap.t = 1.0;
        ap.estimate = p.estimate;
        ap.ci_lo = p.ci_lo;
        ap.ci_hi = p.ci_hi;
        curve.points.push_back(ap);
      }
      if (c.plot || std::count(c.formats.begin(), c.formats.end(), "svg"))
        bundle.plots.push_back(detail::make_aging_plot(c.kind, curve, c.env_alpha));
    }
    bundle.tables.push_back(std::move(table));
  } else if (c.kind == "scaling-table") {
    WalkModel model = make_walk_model(c);
    TailLaw law = make_law(c);
    double u_need = 0.0;
    for (double e : c.eps_grid) u_need = std::max(u_need, 1.0 / e);
    ScalingBundle sb = detail::covering_bundle(model, law, c, u_need);
    total_replicas += c.bundle_paths;

    Table grid;
    grid.name = "scaling";
    grid.columns = {"n", "r_raw", "r_hat", "r_se", "rho_hat", "rho_se",
                    "u_hat", "s", "v", "nu"};
    for (size_t i = 0; i < sb.n.size(); ++i)
      grid.rows.push_back({sb.n[i], sb.r_raw[i], sb.r_hat[i], sb.r_se[i], sb.rho_hat[i],
                           sb.rho_se[i], sb.u_hat[i], sb.s[i], sb.v[i], sb.nu[i]});
    bundle.tables.push_back(std::move(grid));

    Table aeps;
    aeps.name = "a_eps";
    aeps.columns = {"eps", "n_eps", "a", "a_over_eps"};
    for (double e : c.eps_grid) {
      double n_eps = sb.n_of(1.0 / e);
      double a = sb.a_of(e);
      aeps.rows.push_back({e, n_eps, a, a / e});
    }
    bundle.tables.push_back(std::move(aeps));
  } else if (c.kind == "assumption-diagnostics") {
    WalkModel model = make_walk_model(c);
    TailLaw law = make_law(c);
    Table inter;
    inter.name = "intersection";
    inter.columns = {"n", "i_hat", "i_se", "rho_hat", "rho_se", "ratio", "ratio_se"};
    auto pts = intersection_ratio(model, c.n_grid, c.replicas, c.seed, c.workers);
    total_replicas += 2 * c.replicas;
    for (const auto& p : pts)
      inter.rows.push_back({p.n, p.i_hat, p.i_se, p.rho_hat, p.rho_se, p.ratio, p.ratio_se});
    bundle.tables.push_back(std::move(inter));

    double theta = c.theta_grid.front();
    int64_t n_top = *std::max_element(c.n_grid.begin(), c.n_grid.end());
    ExperimentConfig cc = c;
    if (cc.bundle_n_max == 0)
      cc.bundle_n_max = static_cast<int64_t>(
          std::ceil(2.0 * static_cast<double>(n_top) * std::pow(1.0 + theta, law.alpha())));
    ScalingBundle sb = detail::covering_bundle(model, law, cc, 0.0);
    std::vector<double> t_grid;
    for (int64_t n : c.n_grid)
      if (n >= 1) t_grid.push_back(sb.nu_at_steps(static_cast<double>(n)));
    AgingMode mode = c.modes.empty() ? AgingMode::Pi : parse_aging_mode(c.modes.front());
    auto qpts = quenched_aging_profile(model, law, sb, mode, theta, t_grid, c.env_count,
                                       c.m_per_env, c.seed, c.workers);
    total_replicas += c.env_count * c.m_per_env;
    Table quenched;
    quenched.name = "quenched";
    quenched.columns = {"mode", "alpha", "walk", "theta", "t", "mean",
                        "variance", "noise_floor", "excess", "env_count", "m_per_env"};
    for (const auto& q : qpts)
      quenched.rows.push_back({aging_mode_name(mode), law.alpha(), model.name(), q.theta,
                               q.t, q.mean, q.variance, q.noise_floor, q.excess,
                               c.env_count, c.m_per_env});
    bundle.tables.push_back(std::move(quenched));
  } else if (c.kind == "marginal-convergence") {
    WalkModel model = make_walk_model(c);
    TailLaw law = make_law(c);
    double u_need = 0.0;
    for (double e : c.eps_grid) u_need = std::max(u_need, 1.0 / e);
    ScalingBundle sb = detail::covering_bundle(model, law, c, u_need);
    Table table;
    table.name = "marginal";
    table.columns = {"eps", "n_eps", "ks", "M"};
    std::vector<double> eps_sorted = c.eps_grid;
    std::sort(eps_sorted.begin(), eps_sorted.end());
    for (double e : eps_sorted) {
      auto trap_samples = detail::sample_rescaled_energy(model, law, sb, e, 1.0,
                                                         c.replicas, c.seed, c.workers);
      auto z_samples = detail::sample_z1(law.alpha(), c.delta0, c.replicas,
                                         c.seed ^ 0x21ULL, c.workers);
      double ks = ks_two_sample(trap_samples, z_samples);
      table.rows.push_back({e, sb.n_of(1.0 / e), ks, c.replicas});
      total_replicas += 2 * c.replicas;
    }
    bundle.tables.push_back(std::move(table));
  } else {
    throw ConfigError("kind: unhandled experiment '" + c.kind + "'");
  }

  bundle.metadata.emplace_back("version", kVersion);
  bundle.metadata.emplace_back("kind", c.kind);
  bundle.metadata.emplace_back("config_hash", config_hash(c));
  bundle.metadata.emplace_back("total_replicas", std::to_string(total_replicas));
  bundle.metadata.emplace_back("seed", std::to_string(c.seed));
  return bundle;
}

// Writes the bundle in the requested formats; returns the paths written.
inline std::vector<std::string> emit_outputs(const ResultBundle& bundle,
                                             const std::vector<std::string>& formats,
                                             const std::string& out_dir) {
  std::vector<std::string> written;
  auto join = [&](const std::string& name) { return out_dir + "/" + name; };
  bool want_csv = std::count(formats.begin(), formats.end(), "csv");
  bool want_json = std::count(formats.begin(), formats.end(), "json");
  bool want_svg = std::count(formats.begin(), formats.end(), "svg");

  if (want_csv)
    for (const Table& t : bundle.tables) {
      std::string path = join(t.name + ".csv");
      write_csv(t, path);
      written.push_back(path);
    }
  if (want_json) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : bundle.metadata) j["metadata"][k] = v;
    for (const Table& t : bundle.tables) j["tables"][t.name] = table_to_json(t);
    std::string path = join(bundle.kind + ".json");
    write_text_file(path, j.dump(1) + "\n");
    written.push_back(path);
  }
  if (want_svg)
    for (const SvgPlot& p : bundle.plots) {
      std::string path = join(p.filename);
      write_text_file(path, p.content);
      written.push_back(path);
    }
  return written;
}

}  // namespace trapsim
