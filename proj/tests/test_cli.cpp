#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapsim_bin_path.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  std::string out_file = std::string(std::tmpnam(nullptr)) + ".out";
  std::string cmd = std::string(kTrapsimBin) + " " + args + " > " + out_file + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(out_file);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  std::remove(out_file.c_str());
  return r;
}

std::string make_temp_dir() {
  char templ[] = "/tmp/trapsim_test_XXXXXX";
  char* dir = mkdtemp(templ);
  REQUIRE(dir != nullptr);
  return dir;
}

const char* kLimitConfig =
    "kind = limit-aging\n"
    "seed = 4242\n"
    "env.alpha = 0.5\n"
    "modes = R,Pi_laplace\n"
    "theta_grid = 0.5,1\n"
    "M = 3000\n"
    "delta0 = 0.001\n";

}  // namespace

TEST_CASE("cli runs a limit-aging experiment deterministically") {
  std::string dir1 = make_temp_dir();
  std::string dir2 = make_temp_dir();
  std::string cfg = dir1 + "/exp.conf";
  write_file(cfg, kLimitConfig);

  auto r1 = run_cli("limit-aging --config " + cfg + " --out " + dir1 + " --workers 1");
  INFO(r1.output);
  REQUIRE(r1.exit_code == 0);
  auto r2 = run_cli("limit-aging --config " + cfg + " --out " + dir2 + " --workers 8");
  REQUIRE(r2.exit_code == 0);

  // byte-identical CSV regardless of worker count
  REQUIRE(slurp(dir1 + "/aging.csv") == slurp(dir2 + "/aging.csv"));

  // rerun in place: byte-identical again
  auto r3 = run_cli("limit-aging --config " + cfg + " --out " + dir2 + " --workers 3");
  REQUIRE(r3.exit_code == 0);
  REQUIRE(slurp(dir1 + "/aging.csv") == slurp(dir2 + "/aging.csv"));
}

TEST_CASE("csv and json carry identical numeric content") {
  std::string dir = make_temp_dir();
  std::string cfg = dir + "/exp.conf";
  write_file(cfg, kLimitConfig);
  auto r = run_cli("limit-aging --config " + cfg + " --out " + dir);
  REQUIRE(r.exit_code == 0);

  auto json = nlohmann::json::parse(slurp(dir + "/limit-aging.json"));
  REQUIRE(json["metadata"]["kind"] == "limit-aging");
  REQUIRE(json["metadata"].contains("version"));
  REQUIRE(json["metadata"].contains("config_hash"));
  REQUIRE(json["metadata"].contains("total_replicas"));
  auto rows = json["tables"]["aging"]["rows"];

  std::ifstream csv(dir + "/aging.csv");
  std::string line;
  std::getline(csv, line);
  REQUIRE(line == "mode,alpha,walk,theta,t,estimate,ci_lo,ci_hi,n_used,M");
  size_t ri = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 10);
    REQUIRE(ri < rows.size());
    // numeric columns parse to exactly the JSON values
    REQUIRE(std::stod(cells[5]) == rows[ri][5].get<double>());
    REQUIRE(std::stod(cells[6]) == rows[ri][6].get<double>());
    REQUIRE(std::stod(cells[7]) == rows[ri][7].get<double>());
    REQUIRE(cells[0] == rows[ri][0].get<std::string>());
    ++ri;
  }
  REQUIRE(ri == rows.size());
  REQUIRE(ri == 4);  // 2 modes x 2 thetas
}

TEST_CASE("svg output contains the reference curve and data points") {
  std::string dir = make_temp_dir();
  std::string cfg = dir + "/exp.conf";
  write_file(cfg, kLimitConfig);
  auto r = run_cli("limit-aging --config " + cfg + " --out " + dir +
                   " --format csv,json,svg");
  REQUIRE(r.exit_code == 0);
  std::string svg = slurp(dir + "/limit-aging_R_alpha0.5.svg");
  REQUIRE(svg.find("<path") != std::string::npos);
  REQUIRE(svg.find("<circle") != std::string::npos);
}

TEST_CASE("cli exit code 2 on config errors") {
  std::string dir = make_temp_dir();
  std::string cfg = dir + "/bad.conf";

  write_file(cfg, "kind = limit-aging\nenv.alpha = 0.5\ntheta_grid = 1\nM = 10\n");
  auto missing_seed = run_cli("limit-aging --config " + cfg + " --out " + dir);
  REQUIRE(missing_seed.exit_code == 2);
  REQUIRE(missing_seed.output.find("seed") != std::string::npos);

  write_file(cfg, "kind = limit-aging\nseed = 1\ntheta_grid = 1\nnot_a_key = 5\n");
  REQUIRE(run_cli("limit-aging --config " + cfg + " --out " + dir).exit_code == 2);

  write_file(cfg, "kind = limit-aging\nseed = 1\nM = 10\n");
  auto empty_grid = run_cli("limit-aging --config " + cfg + " --out " + dir);
  REQUIRE(empty_grid.exit_code == 2);
  REQUIRE(empty_grid.output.find("theta_grid") != std::string::npos);

  write_file(cfg, "kind = aging\nseed = 1\ntheta_grid = 1\nn_grid = 16\nM = 10\n");
  auto wrong_kind = run_cli("limit-aging --config " + cfg + " --out " + dir);
  REQUIRE(wrong_kind.exit_code == 2);

  write_file(cfg, "kind = limit-aging\nseed = 1\nseed = 2\ntheta_grid = 1\n");
  REQUIRE(run_cli("limit-aging --config " + cfg + " --out " + dir).exit_code == 2);

  auto no_file = run_cli("limit-aging --config " + dir + "/absent.conf --out " + dir);
  REQUIRE(no_file.exit_code == 2);
}

TEST_CASE("cli exit code 3 on simulation errors") {
  std::string dir = make_temp_dir();
  std::string cfg = dir + "/exhaust.conf";
  // eps far outside the nu range covered by a deliberately tiny bundle
  write_file(cfg,
             "kind = scaling-table\nseed = 7\nwalk.kind = srw\nwalk.d = 3\n"
             "eps_grid = 1e-30\nbundle.paths = 50\nbundle.n_max = 64\n");
  auto r = run_cli("scaling-table --config " + cfg + " --out " + dir);
  REQUIRE(r.exit_code == 3);
  REQUIRE(r.output.find("grid exhausted") != std::string::npos);
}

TEST_CASE("cli exit code 4 on unwritable output") {
  std::string dir = make_temp_dir();
  std::string cfg = dir + "/exp.conf";
  write_file(cfg, kLimitConfig);
  auto r = run_cli("limit-aging --config " + cfg + " --out /dev/null/nowhere");
  REQUIRE(r.exit_code == 4);
}

TEST_CASE("cli seed override changes outputs") {
  std::string dir = make_temp_dir();
  std::string cfg = dir + "/exp.conf";
  write_file(cfg, kLimitConfig);
  auto r1 = run_cli("limit-aging --config " + cfg + " --out " + dir);
  REQUIRE(r1.exit_code == 0);
  std::string first = slurp(dir + "/aging.csv");
  auto r2 = run_cli("limit-aging --config " + cfg + " --out " + dir + " --seed 999");
  REQUIRE(r2.exit_code == 0);
  REQUIRE(slurp(dir + "/aging.csv") != first);
}

TEST_CASE("cli aging run over a small grid") {
  std::string dir = make_temp_dir();
  std::string cfg = dir + "/aging.conf";
  write_file(cfg,
             "kind = aging\nseed = 11\nenv.family = pareto\nenv.alpha = 0.5\n"
             "walk.kind = srw\nwalk.d = 2\nmodes = R,Pi\ntheta_grid = 0,1\n"
             "n_grid = 16,64\nM = 150\nbundle.paths = 300\nbundle.n_max = 256\n");
  auto r = run_cli("aging --config " + cfg + " --out " + dir + " --format csv,svg");
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  std::string csv = slurp(dir + "/aging.csv");
  // theta = 0 rows estimate exactly 1 for R and Pi
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  int ones = 0, rows = 0;
  while (std::getline(ss, line)) {
    ++rows;
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells[3] == "0") {
      REQUIRE(cells[5] == "1");
      ++ones;
    }
  }
  REQUIRE(rows == 8);
  REQUIRE(ones == 4);
  REQUIRE(slurp(dir + "/aging_R_alpha0.5.svg").find("<path") != std::string::npos);
}

TEST_CASE("cli table walk model from csv") {
  std::string dir = make_temp_dir();
  std::string table = dir + "/law.csv";
  write_file(table, "# offset, probability\n1,0.5\n-1,0.5\n");
  std::string cfg = dir + "/exp.conf";
  write_file(cfg,
             "kind = scaling-table\nseed = 3\nwalk.kind = table\nwalk.table_path = " +
                 table + "\neps_grid = 0.01\nbundle.paths = 200\nbundle.n_max = 512\n");
  auto r = run_cli("scaling-table --config " + cfg + " --out " + dir);
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(slurp(dir + "/scaling.csv").find("n,r_raw") == 0);
}
