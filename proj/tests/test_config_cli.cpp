#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "test_util.hpp"
#include "teamopt/config_io.hpp"
#include "teamopt/evaluation.hpp"

using namespace teamopt;
using namespace teamopt::testutil;

TEST_SUITE_BEGIN("config_cli");

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path scratch_dir() {
  fs::path d = fs::temp_directory_path() / "teamopt_cli_tests";
  fs::create_directories(d);
  return d;
}

// Runs the CLI, captures stdout to a file, returns the exit status.
int run_cli(const std::string& args, const fs::path& stdout_path) {
  std::string cmd = std::string(TEAMOPT_CLI) + " " + args + " > " +
                    stdout_path.string() + " 2> /dev/null";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("every benchmark round-trips through the config format") {
  for (const std::string& name : benchmark_names()) {
    TeamSpec spec = build_benchmark(name);
    std::string cfg = team_to_config(spec);
    TeamSpec back = team_from_config(cfg);
    CHECK(team_to_config(back) == cfg);  // byte-identical re-serialization
    CHECK(back.name == spec.name);
    CHECK(back.num_agents == spec.num_agents);
    CHECK(back.horizon == spec.horizon);
  }
}

TEST_CASE("round-tripped specs evaluate identically") {
  TeamSpec spec = witsenhausen_spec();
  TeamSpec back = team_from_config(team_to_config(spec));
  StrategyProfile prof = linear_profile(spec, {0.8, 0.4});
  double a = expected_cost_quadrature(spec, prof, 32);
  double b = expected_cost_quadrature(back, prof, 32);
  CHECK(a == b);
}

TEST_CASE("schema and syntax errors are rejected") {
  std::string cfg = team_to_config(witsenhausen_spec());
  std::string wrong = cfg;
  auto pos = wrong.find("\"schema_version\": 1");
  REQUIRE(pos != std::string::npos);
  wrong.replace(pos, std::string("\"schema_version\": 1").size(),
                "\"schema_version\": 99");
  CHECK_THROWS_AS(team_from_config(wrong), ValidationError);
  CHECK_THROWS_AS(team_from_config("not a config"), ValidationError);
  CHECK_THROWS_AS(team_from_config(cfg.substr(0, cfg.size() / 2)),
                  ValidationError);
}

TEST_CASE("cli: missing subcommand is a usage error") {
  fs::path out = scratch_dir() / "usage.txt";
  CHECK(run_cli("", out) == 64);
  CHECK(run_cli("no_such_command", out) == 64);
}

TEST_CASE("cli: benchmark emission is deterministic and parseable") {
  fs::path d1 = scratch_dir() / "bench1";
  fs::path d2 = scratch_dir() / "bench2";
  fs::path out = scratch_dir() / "bench_stdout.txt";
  CHECK(run_cli("benchmark witsenhausen --out " + d1.string(), out) == 0);
  CHECK(run_cli("benchmark witsenhausen --out " + d2.string(), out) == 0);
  std::string c1 = slurp(d1 / "team.cfg");
  std::string c2 = slurp(d2 / "team.cfg");
  REQUIRE_FALSE(c1.empty());
  CHECK(c1 == c2);
  CHECK(c1 == team_to_config(witsenhausen_spec()));
  CHECK(slurp(out) == c2);  // stdout carries the same config
  // unknown benchmark name is a validation failure
  CHECK(run_cli("benchmark nope", out) == 2);
}

TEST_CASE("cli: evaluate is reproducible for a fixed seed") {
  fs::path a = scratch_dir() / "eval_a.csv";
  fs::path b = scratch_dir() / "eval_b.csv";
  std::string args =
      "evaluate --benchmark witsenhausen --linear 1 --linear 0.5 "
      "--method mc --seed 5 --n 50000";
  CHECK(run_cli(args, a) == 0);
  CHECK(run_cli(args, b) == 0);
  std::string ca = slurp(a);
  CHECK(ca == slurp(b));
  CHECK(ca.rfind("estimate,stderr,method,seed,order", 0) == 0);
}

TEST_CASE("cli: quadrature evaluate matches the library value") {
  fs::path out = scratch_dir() / "eval_q.csv";
  CHECK(run_cli("evaluate --benchmark witsenhausen --linear 1 --linear 0.5 "
                "--method quadrature --order 64",
                out) == 0);
  std::string body = slurp(out);
  auto nl = body.find('\n');
  REQUIRE(nl != std::string::npos);
  double est = std::stod(body.substr(nl + 1));
  double lib = expected_cost_quadrature(
      witsenhausen_spec(), linear_profile(witsenhausen_spec(), {1.0, 0.5}), 64);
  CHECK(est == doctest::Approx(lib).epsilon(1e-12));
}

TEST_CASE("cli: certify exit codes distinguish pass from inconclusive") {
  fs::path out = scratch_dir() / "cert.txt";
  CHECK(run_cli("certify --condition c1 --kernel gaussian", out) == 0);
  std::string rep = slurp(out);
  CHECK(rep.find("result: pass") != std::string::npos);
  CHECK(run_cli("certify --condition c1 --kernel step", out) == 3);
  CHECK(slurp(out).find("result: fail") != std::string::npos);
  CHECK(run_cli("certify --condition nope", out) == 2);
}

TEST_CASE("cli: sequential certification emits the full ladder") {
  fs::path out = scratch_dir() / "seq.txt";
  CHECK(run_cli("certify --condition sequential --benchmark witsenhausen "
                "--k 1 --eps 0.1",
                out) == 0);
  std::string rep = slurp(out);
  CHECK(rep.find("rungs: 2") != std::string::npos);
  CHECK(rep.find("rung agent 1 time 1") != std::string::npos);
  CHECK(rep.find("rung agent 2 time 1") != std::string::npos);
}

TEST_CASE("cli: counterexample table carries the exact columns") {
  fs::path out = scratch_dir() / "cx.csv";
  CHECK(run_cli("counterexample --nmax 5", out) == 0);
  std::string body = slurp(out);
  CHECK(body.rfind("n,sequence_cost,p_u1,p_u2", 0) == 0);
  CHECK(body.find("full_joint_gap") != std::string::npos);
  // five data rows after the header
  int lines = 0;
  for (char c : body) lines += c == '\n';
  CHECK(lines == 6);
  // each data row ends with the invariant 1/8 gap
  CHECK(body.find(",0.125\n") != std::string::npos);
  // levels beyond the exactness guard are validation failures
  CHECK(run_cli("counterexample --nmax 99", out) == 2);
}

TEST_CASE("cli: reduce prints the channel summary") {
  fs::path out = scratch_dir() / "reduce.txt";
  CHECK(run_cli("reduce --benchmark witsenhausen", out) == 0);
  std::string rep = slurp(out);
  CHECK(rep.find("channel agent 1 time 1") != std::string::npos);
  CHECK(rep.find("channel agent 2 time 1") != std::string::npos);
  // config file input path: round-trip through a file on disk
  fs::path cfg = scratch_dir() / "team.cfg";
  std::ofstream(cfg) << team_to_config(witsenhausen_spec());
  CHECK(run_cli("reduce --team " + cfg.string(), out) == 0);
  CHECK(slurp(out) == rep);
}

TEST_SUITE_END();
