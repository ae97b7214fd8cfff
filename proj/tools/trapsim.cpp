// trapsim: Monte Carlo experiments for trap models on Z^d and their
// subordinator limit process.
//
// Subcommands map onto experiment kinds:
//   trapsim aging          two-time aging functionals of the trap process
//   trapsim limit-aging    the same functionals for the limit process
//   trapsim scaling-table  estimated scaling chain r, rho, s, v, nu, a(eps)
//   trapsim diagnose       range-intersection and quenched-variance checks
//   trapsim marginal       rescaled-energy vs limit marginal KS distances
//
// Exit codes: 0 ok, 2 config error, 3 simulation error, 4 I/O error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "trapsim/config.hpp"
#include "trapsim/experiment.hpp"
#include "trapsim/version.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string formats;
  int workers = -1;
  long long seed = -1;
  bool seed_given = false;
};

int run(const std::string& kind, const CommonFlags& flags) {
  using namespace trapsim;
  ExperimentConfig config;
  try {
    config = parse_config_file(flags.config_path);
    if (config.kind.empty()) config.kind = kind;
    if (config.kind != kind)
      throw ConfigError("kind: config says '" + config.kind + "' but subcommand is '" +
                        kind + "'");
    if (flags.seed_given) {
      config.seed = static_cast<uint64_t>(flags.seed);
      config.seed_set = true;
    }
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (!flags.formats.empty()) config.formats = detail::split_list(flags.formats);
    if (flags.workers >= 0)
      config.workers = flags.workers;
    else if (const char* env = std::getenv("TRAPSIM_WORKERS"))
      config.workers = std::atoi(env);
    validate_config(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    ResultBundle results = run_experiment(config);
    auto written = emit_outputs(results, config.formats, config.out_dir);
    for (const auto& [k, v] : results.metadata) std::cout << k << ": " << v << "\n";
    for (const auto& path : written) std::cout << "wrote " << path << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo toolkit for trap models and their scaling limits"};
  app.set_version_flag("--version", trapsim::kVersion);
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* kind;
    const char* help;
  };
  const Sub subs[] = {
      {"aging", "aging", "trap-process aging functionals"},
      {"limit-aging", "limit-aging", "limit-process aging functionals"},
      {"scaling-table", "scaling-table", "scaling chain and a(eps) table"},
      {"diagnose", "assumption-diagnostics", "intersection and quenched diagnostics"},
      {"marginal", "marginal-convergence", "marginal convergence KS table"},
  };

  CommonFlags flags[5];
  std::string kinds[5];
  int rc = 0;
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(subs[i].name, subs[i].help);
    kinds[i] = subs[i].kind;
    CommonFlags* f = &flags[i];
    sub->add_option("--config", f->config_path, "experiment config file")->required();
    sub->add_option("--out", f->out_dir, "output directory (default from config)");
    sub->add_option("--format", f->formats, "comma list: csv,json,svg");
    sub->add_option("--workers", f->workers, "worker thread count");
    auto* seed_opt = sub->add_option("--seed", f->seed, "override the config seed");
    const std::string kind = kinds[i];
    sub->callback([f, kind, seed_opt, &rc]() {
      f->seed_given = seed_opt->count() > 0;
      rc = run(kind, *f);
    });
  }

  CLI11_PARSE(app, argc, argv);
  return rc;
}
