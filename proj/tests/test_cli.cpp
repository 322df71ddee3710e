#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string cli = POLYMIX_CLI_PATH;
const std::string configs = POLYMIX_CONFIG_DIR;

fs::path scratch() {
  fs::path d = fs::temp_directory_path() / "polymix_test_cli";
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  const std::string cmd = cli + " " + args + " > " + (scratch() / "stdout.txt").string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const std::string& name, const nlohmann::json& j) {
  fs::path p = scratch() / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

nlohmann::json small_simulation() {
  nlohmann::json j = nlohmann::json::parse(slurp(configs + "/relaxation.json"));
  j["solver"]["steps"] = 40;
  j["solver"]["particles"] = 500;
  j["solver"]["cadence"] = 10;
  return j;
}

} // namespace

TEST_CASE("constants command") {
  fs::path out = scratch() / "constants";
  REQUIRE(run("constants --config " + configs + "/constants.json --out " + out.string()) == 0);
  auto j = nlohmann::json::parse(slurp(out / "constants.json"));
  bool found = false;
  for (const auto& p : j["pairs"])
    if (p["pair"] == nlohmann::json({1, 2}))
      for (const auto& q : p["q_values"])
        if (q["q"] == 2.0) {
          CHECK(q["rho"].get<double>() == Catch::Approx(3.14159265358979 / 4).epsilon(1e-8));
          found = true;
        }
  CHECK(found);

  auto cj = nlohmann::json::parse(slurp(configs + "/constants.json"));
  cj["constants"]["q"] = {1};
  CHECK(run("constants --config " + write_config("q1.json", cj).string() + " --out " + out.string()) == 3);
  CHECK(slurp(scratch() / "stdout.txt").find("divergent") != std::string::npos);
}

TEST_CASE("configuration errors exit with 1") {
  CHECK(run("simulate") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("verify --corrupt nosuchcheck 2") == 1);
  auto j = small_simulation();
  j["solver"]["dtt"] = 0.1;
  CHECK(run("simulate --config " + write_config("typo.json", j).string()) == 1);
  CHECK(slurp(scratch() / "stdout.txt").find("/solver") != std::string::npos);
  j = small_simulation();
  j["mixture"]["gamma"] = {{1, 3}, {3, 1}};
  CHECK(run("simulate --config " + write_config("gamma.json", j).string()) == 1);
  j = small_simulation();
  j["verifier"] = {{"checks", {"kernel_distribution", "made_up"}}};
  CHECK(run("verify --config " + write_config("checks.json", j).string()) == 1);
}

TEST_CASE("solver errors exit with 3") {
  auto j = small_simulation();
  j["solver"]["dt"] = 10.0;
  CHECK(run("simulate --config " + write_config("dt.json", j).string() + " --out " + (scratch() / "dt").string()) == 3);
  CHECK(slurp(scratch() / "stdout.txt").find("reduce dt") != std::string::npos);
}

TEST_CASE("simulate is reproducible") {
  fs::path cfg = write_config("sim.json", small_simulation());
  fs::path a = scratch() / "sim_a", b = scratch() / "sim_b";
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + a.string() + " --check-propagation") == 0);
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + b.string() + " --check-propagation") == 0);
  for (const char* f : {"diagnostics.csv", "final_ensembles.csv", "manifest.json"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK_FALSE(slurp(a / f).empty());
  }
  auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(m["propagation"]["pass"] == true);
  CHECK(slurp(a / "diagnostics.csv").rfind("# polymix", 0) == 0);
  fs::path c = scratch() / "sim_c";
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + c.string() + " --seed 99") == 0);
  CHECK(slurp(a / "final_ensembles.csv") != slurp(c / "final_ensembles.csv"));
}

TEST_CASE("verify passes, mutations fail, output is reproducible") {
  fs::path a = scratch() / "ver_a", b = scratch() / "ver_b", c = scratch() / "ver_c";
  const std::string cfg = configs + "/verify_quick.json";
  REQUIRE(run("verify --config " + cfg + " --out " + a.string()) == 0);
  REQUIRE(run("verify --config " + cfg + " --out " + b.string()) == 0);
  CHECK(slurp(a / "verify_summary.csv") == slurp(b / "verify_summary.csv"));
  CHECK(slurp(a / "verify_report.json") == slurp(b / "verify_report.json"));
  CHECK(run("verify --config " + cfg + " --out " + c.string() + " --corrupt gain_L1 0.001") == 2);
  auto j = nlohmann::json::parse(slurp(c / "verify_report.json"));
  bool some_fail = false;
  for (const auto& r : j["reports"])
    if (r["name"] == "gain_L1" && r["pass"] == false) some_fail = true;
  CHECK(some_fail);
}
