#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mazo/checks.hpp"
#include "mazo/graph.hpp"

#ifndef MAZO_CLI_PATH
#define MAZO_CLI_PATH "./mazo"
#endif

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string out_path =
      "cli_capture_" + std::to_string(::getpid()) + ".txt";
  const std::string cmd =
      std::string(MAZO_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CliResult res;
  res.code = WEXITSTATUS(raw);
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  res.output = buf.str();
  std::remove(out_path.c_str());
  return res;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("cli generate") {
  SUBCASE("defaults reproduce the 15-agent, 40-dimensional, 2-constraint shape") {
    const auto res = run_cli("generate --seed 5 --out cli_gen_a.json");
    CHECK(res.code == 0);
    CHECK(res.output.find("n=15 d=40 m=2") != std::string::npos);
    std::remove("cli_gen_a.json");
  }
  SUBCASE("same seed twice produces byte-identical files") {
    CHECK(run_cli("generate --seed 8 --n 4 --d 8 --m 1 --out cli_gen_b1.json")
              .code == 0);
    CHECK(run_cli("generate --seed 8 --n 4 --d 8 --m 1 --out cli_gen_b2.json")
              .code == 0);
    CHECK(slurp("cli_gen_b1.json") == slurp("cli_gen_b2.json"));
    std::remove("cli_gen_b1.json");
    std::remove("cli_gen_b2.json");
  }
  SUBCASE("invalid eigenvalue range is a usage error") {
    CHECK(run_cli("generate --eig-min 0 --out cli_gen_c.json").code == 2);
    CHECK(run_cli("generate --eig-min 2.0 --eig-max 1.0 --out cli_gen_c.json")
              .code == 2);
  }
}

TEST_CASE("cli solve-ref") {
  SUBCASE("missing instance file is a usage error") {
    CHECK(run_cli("solve-ref --instance does_not_exist.json").code == 2);
  }
  SUBCASE("prints the optimal value and dual norm") {
    REQUIRE(run_cli("generate --seed 9 --n 3 --d 6 --m 1 --out cli_ref.json")
                .code == 0);
    const auto res = run_cli("solve-ref --instance cli_ref.json --tol 1e-8");
    CHECK(res.code == 0);
    CHECK(res.output.find("f_star=") != std::string::npos);
    CHECK(res.output.find("y_norm=") != std::string::npos);
    std::remove("cli_ref.json");
  }
}

TEST_CASE("cli run") {
  REQUIRE(run_cli("generate --seed 12 --n 4 --d 8 --m 2 --out cli_run.json")
              .code == 0);

  SUBCASE("single-trial smoke run emits a schema-valid summary") {
    const auto res = run_cli(
        "run --instance cli_run.json --schedule constant --eta 0.002 --mu "
        "0.002 --u 0.01 --C 2 --T 10 --trials 1 --topology ring --out-dir "
        "cli_run_out");
    CHECK(res.code == 0);
    const auto csv = slurp("cli_run_out/summary.csv");
    std::stringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header ==
          "t,f0_mean,f0_q05,f0_q95,viol1_mean,viol1_q05,viol1_q95,viol2_mean,"
          "viol2_q05,viol2_q95,violnorm_mean,violnorm_q05,violnorm_q95,"
          "spread_mean,oracle_cumulative");
    int rows = 0;
    std::string line;
    while (std::getline(lines, line))
      if (!line.empty()) ++rows;
    CHECK(rows >= 1);
    CHECK(slurp("cli_run_out/manifest.json").find("\"T\": 10") !=
          std::string::npos);
    std::filesystem::remove_all("cli_run_out");
  }
  SUBCASE("diminishing schedule flag is honored") {
    const auto res = run_cli(
        "run --instance cli_run.json --schedule diminishing --c 300 --u 0.01 "
        "--C 2 --T 20 --trials 1 --topology complete --out-dir cli_run_dim");
    CHECK(res.code == 0);
    CHECK(slurp("cli_run_dim/manifest.json").find("\"c_offset\": 300.0") !=
          std::string::npos);
    std::filesystem::remove_all("cli_run_dim");
  }
  SUBCASE("config file supplies defaults and flags override them") {
    {
      std::ofstream cfg("cli_run.cfg");
      cfg << "# run configuration\n"
          << "instance = cli_run.json\n"
          << "schedule = constant\n"
          << "eta = 0.002\nmu = 0.002\nu = 0.01\nC = 2\n"
          << "T = 15\ntrials = 1\ntopology = ring\n"
          << "out_dir = cli_cfg_out\n";
    }
    const auto res = run_cli("run --config cli_run.cfg --T 25");
    CHECK(res.code == 0);
    const auto manifest = slurp("cli_cfg_out/manifest.json");
    CHECK(manifest.find("\"T\": 25") != std::string::npos);  // flag wins
    std::filesystem::remove_all("cli_cfg_out");
    std::remove("cli_run.cfg");
  }
  SUBCASE("unknown schedule is a usage error") {
    CHECK(run_cli("run --instance cli_run.json --schedule nonsense "
                  "--out-dir cli_run_x")
              .code == 2);
    std::filesystem::remove_all("cli_run_x");
  }
  std::remove("cli_run.json");
}

TEST_CASE("cli params prints the step-size constants") {
  REQUIRE(run_cli("generate --seed 13 --n 3 --d 6 --m 1 --out cli_params.json")
              .code == 0);
  const auto res = run_cli(
      "params --instance cli_params.json --topology complete --T 1000");
  CHECK(res.code == 0);
  CHECK(res.output.find("xi=") != std::string::npos);
  CHECK(res.output.find("eta=") != std::string::npos);
  CHECK(res.output.find("u=") != std::string::npos);
  std::remove("cli_params.json");
}

TEST_CASE("cli verify") {
  SUBCASE("fresh checkout passes inside the runtime budget") {
    const auto start = std::chrono::steady_clock::now();
    const auto res = run_cli("verify --seed 3");
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    CHECK(res.code == 0);
    CHECK(res.output.find("[PASS]") != std::string::npos);
    CHECK(res.output.find("[FAIL]") == std::string::npos);
    CHECK(elapsed <= 300.0);
  }
  SUBCASE("broken column sums fail the named doubly-stochastic invariant") {
    Eigen::MatrixXd w(2, 2);
    w << 0.6, 0.4, 0.5, 0.5;  // rows sum to 1, columns do not
    const auto report = mazo::check_doubly_stochastic(w);
    CHECK_FALSE(report.pass);
    CHECK(report.detail.find("column sum") != std::string::npos);
  }
}
