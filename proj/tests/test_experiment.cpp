#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bbp/errors.hpp"
#include "bbp/experiment.hpp"

using namespace bbp;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_bbp() {
  return {{"experiment", "bbp_lln"},
          {"profile", {{"kind", "uniform"}, {"n", 120}}},
          {"deformation", {{"positions", {0}}, {"a_tilde", {{2.0}}}}},
          {"trials", 30},
          {"seed", 4},
          {"params", {{"j_max", 1}, {"checks", {"top:1"}}}},
          {"tolerances", {{"location", 0.2}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(BBP_LAB_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bbp_lab_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("experiment list is stable and complete") {
    const auto& list = list_experiments();
    std::vector<std::string> names;
    for (const auto& e : list) names.push_back(e.name);
    CHECK(names == std::vector<std::string>{"bbp_lln", "spectral_measure", "fluctuation_ks", "laplace", "identities",
                                            "diagram_suite", "oracle_crosscheck"});
    for (const auto& e : list) {
      CHECK_FALSE(e.description.empty());
      CHECK_FALSE(e.checks.empty());
    }
  }

  TEST_CASE("schema validation") {
    CHECK_NOTHROW(ExperimentConfig::parse(small_bbp()));
    auto bad = small_bbp();
    bad["colour"] = "blue";
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), SchemaError);
    bad = small_bbp();
    bad["params"]["unknown"] = 1;
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), SchemaError);
    bad = small_bbp();
    bad["trials"] = "many";
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), SchemaError);
    bad = small_bbp();
    bad.erase("profile");
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), SchemaError);
    bad = small_bbp();
    bad["experiment"] = "nope";
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), SchemaError);
    bad = small_bbp();
    bad["deformation"]["positions"] = {500};
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), SchemaError);
    bad = small_bbp();
    bad["profile"]["kind"] = "hexagonal";
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), SchemaError);
    bad = small_bbp();
    bad["tolerances"]["location"] = -1.0;
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), SchemaError);
    CHECK_NOTHROW(ExperimentConfig::parse(json{{"experiment", "identities"}}));

    auto complex = small_bbp();
    complex["beta"] = 2;
    complex["deformation"] = {{"positions", {0, 1}}, {"a_tilde", {{2.0, json::array({0.0, 1.0})}, {json::array({0.0, -1.0}), 2.0}}}};
    const auto cfg = ExperimentConfig::parse(complex);
    CHECK(cfg.model().deformation.eigenvalues()(0) == doctest::Approx(3.0));
  }

  TEST_CASE("reports and outputs are deterministic") {
    const auto cfg = ExperimentConfig::parse(small_bbp());
    const auto a = run_experiment(cfg, 1);
    const auto b = run_experiment(cfg, 2);
    CHECK(a.pass());
    CHECK(a.config_hash == b.config_hash);
    CHECK(a.config_hash.size() == 16);
    const fs::path da = scratch("det_a"), db = scratch("det_b");
    write_outputs(a, da);
    write_outputs(b, db);
    for (const char* f : {"summary.csv", "eigenvalues.csv"}) CHECK(slurp(da / f) == slurp(db / f));
    const json report = json::parse(slurp(da / "report.json"));
    CHECK(report.at("pass") == true);
    CHECK(report.at("checks").size() == 1);
    for (const char* key : {"name", "measured", "expected", "tolerance", "pass"}) CHECK(report["checks"][0].contains(key));
    CHECK(report.at("seed") == 4);

    const auto c = run_experiment(cfg, 1, 99);
    CHECK(c.seed == 99);
    CHECK(c.checks[0].measured != a.checks[0].measured);
  }

  TEST_CASE("identities experiment is exact and fast") {
    const auto rep = run_experiment(ExperimentConfig::parse(json{{"experiment", "identities"}}), 1);
    CHECK(rep.pass());
    CHECK(rep.checks.size() >= 5);
    CHECK(rep.wall_seconds < 10.0);
  }

  TEST_CASE("diagram counts match the golden table") {
    const std::string golden = std::string(BBP_SOURCE_DIR) + "/tests/golden/diagram_counts.json";
    for (int k : {4, 6}) {
      const json doc = {{"experiment", "diagram_suite"}, {"params", {{"k_budget", k}, {"s_max", k}, {"golden", golden}}}};
      const auto rep = run_experiment(ExperimentConfig::parse(doc), 1);
      CHECK(rep.pass());
      bool found = false;
      for (const auto& c : rep.checks)
        if (c.name == "golden count table mismatches") found = true;
      CHECK(found);
    }
  }

  TEST_CASE("oracle crosscheck experiment") {
    const json doc = {{"experiment", "oracle_crosscheck"},
                      {"profile", {{"kind", "uniform"}, {"n", 3}}},
                      {"deformation", {{"positions", {1}}, {"a_tilde", {{2.0}}}}},
                      {"params", {{"k_sum", 4}, {"s_max", 2}}}};
    const auto rep = run_experiment(ExperimentConfig::parse(doc), 1);
    CHECK(rep.pass());
    REQUIRE(rep.json_files.size() == 1);
    CHECK(rep.json_files[0].first == "oracle_cache.json");
    auto bad = doc;
    bad["law"] = "rademacher";
    CHECK_THROWS_AS(run_experiment(ExperimentConfig::parse(bad), 1), SchemaError);
  }

  TEST_CASE("command line exit codes") {
    CHECK(run_cli("list") == 0);
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{\"experiment\": \"bbp_lln\", \"oops\": 1}";
    std::ofstream(dir / "broken.json") << "{not json";
    std::ofstream(dir / "good.json") << small_bbp().dump();
    json failing = small_bbp();
    failing["tolerances"]["location"] = 0.0;
    std::ofstream(dir / "failing.json") << failing.dump();
    json domain = small_bbp();
    domain["experiment"] = "fluctuation_ks";
    domain["deformation"]["a_tilde"] = {{0.5}};
    domain.erase("params");
    domain.erase("tolerances");
    std::ofstream(dir / "domain.json") << domain.dump();

    CHECK(run_cli("run " + (dir / "bad.json").string() + " --out " + (dir / "out_bad").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "out_bad"));
    CHECK(run_cli("run " + (dir / "broken.json").string() + " --out " + (dir / "out_broken").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "out_broken"));
    CHECK(run_cli("run " + (dir / "missing.json").string()) == 2);
    CHECK(run_cli("run " + (dir / "domain.json").string() + " --out " + (dir / "out_domain").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "out_domain"));
    CHECK(run_cli("run " + (dir / "good.json").string() + " --threads 2 --out " + (dir / "out_good").string()) == 0);
    CHECK(fs::exists(dir / "out_good" / "report.json"));
    CHECK(fs::exists(dir / "out_good" / "eigenvalues.csv"));
    CHECK(run_cli("run " + (dir / "failing.json").string() + " --out " + (dir / "out_fail").string()) == 1);
    CHECK(run_cli("run " + (dir / "good.json").string() + " --seed 5 --out " + (dir / "out_seed").string()) == 0);
    const json report = json::parse(slurp(dir / "out_seed" / "report.json"));
    CHECK(report.at("seed") == 5);
    CHECK(run_cli("frobnicate") == 2);
  }
}
