#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nelson/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace nelson;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = NELSON_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nelson_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json smoke_json() {
  std::ifstream in(kConfigs / "smoke.json");
  return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + NELSON_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const ExperimentConfig c = config_from_json(smoke_json());
  CHECK(c.grid.dimension == 1);
  CHECK(c.n_max == 2);
  CHECK(c.params.window.kappa == 0.5);
  CHECK(c.params.window.Lambda == 1.0);
  CHECK(c.beta_list.size() == 3);
  CHECK(c.seed == 7);
  CHECK_NOTHROW(c.validate());

  const ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));

  nlohmann::json bad = smoke_json();
  bad["params"]["kappa"] = 1.0;
  try {
    config_from_json(bad).validate();
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("kappa < Lambda") != std::string::npos);
  }
  bad = smoke_json();
  bad["n_max"] = 0;
  CHECK_THROWS(config_from_json(bad).validate());
  bad = smoke_json();
  bad["params"]["P"] = {0.3, 0.0};
  CHECK_THROWS(config_from_json(bad).validate());
  bad = smoke_json();
  bad["beta_list"] = nlohmann::json::array();
  CHECK_THROWS(config_from_json(bad).validate());
  CHECK_THROWS(load_config(kConfigs / "missing.json"));
}

TEST_CASE("smoke run passes quickly") {
  const auto t0 = std::chrono::steady_clock::now();
  const RunReport r = run(load_config(kConfigs / "smoke.json"));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 5.0);
  CHECK(r.pass);
  CHECK(r.failed_checks().empty());
  CHECK(r.basis_dimension == 10);
  for (const char* key : {"inf_spec_h_lambda", "inf_spec_h_ren", "e_lambda_grid", "e_lambda_radial",
                          "gap", "min_semigroup_entry"})
    CHECK(r.summary.count(key) == 1);
  CHECK(r.summary.at("min_semigroup_entry") > 0.0);
}

TEST_CASE("uncoupled run reports negative controls") {
  nlohmann::json j = smoke_json();
  j["params"]["g"] = 0.0;
  const RunReport r = run(config_from_json(j));
  CHECK(r.pass);
  int negatives = 0;
  for (const auto& c : r.checks)
    if (c.expected_negative) {
      ++negatives;
      CHECK(c.pass);
    }
  CHECK(negatives >= 2);
}

TEST_CASE("runs are deterministic apart from timing") {
  const ExperimentConfig c = load_config(kConfigs / "smoke.json");
  nlohmann::json a = to_json(run(c)), b = to_json(run(c));
  a.erase("timing");
  b.erase("timing");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("run directory round trip") {
  const fs::path dir = scratch("run");
  const RunReport r = run(load_config(kConfigs / "smoke.json"));
  write_run(r, dir);
  REQUIRE(fs::exists(dir / "report.json"));
  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["kind"] == "run");
  CHECK(j["volatile"] == nlohmann::json::array({"timing"}));
  CHECK(j["checks"].size() == r.checks.size());
  const std::string table = report(dir);
  std::size_t rows = 0;
  for (const auto& c : r.checks)
    if (table.find(c.name) != std::string::npos) ++rows;
  CHECK(rows == r.checks.size());
  CHECK(table.find("overall: PASS") != std::string::npos);
}

TEST_CASE("sweep writes the trend schema") {
  nlohmann::json j = smoke_json();
  j["sweep"] = {{"variable", "Lambda"}, {"values", {0.75, 1.0}}};
  const ExperimentConfig c = config_from_json(j);
  const SweepResult s = sweep(c, 2);
  REQUIRE(s.trends.size() == 2);
  CHECK(s.trends[0].value == 0.75);
  CHECK(s.trends[1].value == 1.0);
  CHECK(s.trends[1].e_lambda_grid < s.trends[0].e_lambda_grid);

  const fs::path dir = scratch("sweep");
  write_sweep(s, c, dir);
  const std::string csv = slurp(dir / "trends.csv");
  CHECK(csv.substr(0, csv.find('\n')) ==
        "value,inf_spec_h_lambda,inf_spec_h_ren,e_lambda_grid,e_lambda_radial,gap,min_semigroup_entry");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK_NOTHROW(report(dir));

  // sweeping is independent of the worker count
  const SweepResult serial = sweep(c, 1);
  std::ostringstream a, b;
  write_trends_csv(a, s.trends);
  write_trends_csv(b, serial.trends);
  CHECK(a.str() == b.str());
}

TEST_CASE("report on a bad directory names the missing file") {
  const fs::path dir = scratch("empty");
  try {
    report(dir);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("report.json") != std::string::npos);
  }
  std::ofstream(dir / "report.json") << "{ not json";
  CHECK_THROWS_AS(report(dir), std::runtime_error);
}

TEST_CASE("command-line exit codes") {
  const fs::path out = scratch("cli");
  const std::string smoke = (kConfigs / "smoke.json").string();
  CHECK(cli("run " + smoke + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "report.json"));
  CHECK(cli("report " + out.string()) == 0);
  CHECK(cli("run " + smoke + " --out " + out.string() + " --seed 3 --tol-scale 2 --workers 2") == 0);
  CHECK(cli("report " + scratch("cli_empty").string()) == 2);
  CHECK(cli("run " + (kConfigs / "missing.json").string()) == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("--help") == 0);
}
