// polymix command-line driver: constants, verify, simulate.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "polymix/config.hpp"
#include "polymix/constants.hpp"
#include "polymix/dsmc.hpp"
#include "polymix/report.hpp"
#include "polymix/suite.hpp"

namespace fs = std::filesystem;
using namespace polymix;

namespace {

enum Exit { ok = 0, config_error = 1, verify_failed = 2, numerical = 3 };

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

RunConfig load(const Common& c, bool required) {
  if (c.config.empty()) {
    if (required) throw ConfigError("--config is required for this command");
    nlohmann::json j = nlohmann::json::object();
    if (c.seed) j["seed"] = *c.seed;
    return parse_config(j);
  }
  return load_config(c.config, c.seed);
}

std::string out_dir(const Common& c, const RunConfig& rc) {
  const std::string d = c.out.empty() ? rc.out_dir : c.out;
  fs::create_directories(d);
  return d;
}

int cmd_constants(const Common& c) {
  const RunConfig rc = load(c, true);
  const ConstantsTable t = constants_table(rc);
  const std::string dir = out_dir(c, rc);
  write_file(dir + "/constants.json", t.data.dump(2) + "\n");
  std::cout << t.text;
  return t.any_divergent ? numerical : ok;
}

int cmd_verify(const Common& c, const std::vector<std::pair<std::string, double>>& corrupt) {
  RunConfig rc = load(c, false);
  SuiteOptions opt = rc.verifier.options;
  for (const auto& [name, factor] : corrupt) {
    if (!is_check_name(name)) throw ConfigError("--corrupt: unknown check '" + name + "'");
    opt.corrupt.factors[name] = factor;
  }
  std::vector<VerificationReport> reps = run_suite(rc.verifier.cases, opt);
  for (auto& r : reps) r.digest = rc.digest;
  const std::string dir = out_dir(c, rc);
  nlohmann::json j = {{"digest", rc.digest}, {"seed", rc.seed}, {"reports", nlohmann::json::array()}};
  if (!corrupt.empty())
    for (const auto& [name, factor] : corrupt) j["corrupt"][name] = jnum(factor);
  for (const auto& r : reps) j["reports"].push_back(to_json(r));
  write_file(dir + "/verify_report.json", j.dump(2) + "\n");
  write_file(dir + "/verify_summary.csv", verify_csv(reps, rc.digest, rc.seed));
  std::size_t failed = 0;
  for (const auto& r : reps) {
    failed += !r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  " << r.label << "  margin " << num(r.margin);
    if (!r.error.empty()) std::cout << "  error: " << r.error;
    std::cout << "\n";
  }
  std::cout << reps.size() - failed << "/" << reps.size() << " checks pass\n";
  return failed ? verify_failed : ok;
}

int cmd_simulate(const Common& c, bool check_prop) {
  const RunConfig rc = load(c, true);
  if (!rc.mixture) throw ConfigError("/mixture: required for simulate");
  if (!rc.distributions) throw ConfigError("/distributions: required for simulate");
  if (!rc.has_solver) throw ConfigError("/solver: required for simulate");
  const SolverConfig& cfg = rc.solver;
  const RunResult res = run(*rc.mixture, rc.specs, *rc.distributions, cfg);
  const std::string dir = out_dir(c, rc);
  write_file(dir + "/diagnostics.csv", diagnostics_csv(res.rows, cfg, rc.digest, rc.seed));
  write_file(dir + "/final_ensembles.csv", ensembles_csv(res.final_state, rc.digest, rc.seed));

  double band = 0.0;
  const double rise = entropy_rise(res.rows, cfg.burn_in_fraction, &band);
  nlohmann::json m = {{"program", "polymix"},
                      {"version", version_string},
                      {"digest", rc.digest},
                      {"seed", rc.seed},
                      {"config", rc.source},
                      {"grid", {{"L", res.grid.L}, {"nv", res.grid.nv}, {"I_max", res.grid.I_max}, {"nI", res.grid.nI}}},
                      {"steps", cfg.n_steps},
                      {"final_time", res.final_state.time},
                      {"conservation_drift", jnum(conservation_drift(res.rows))},
                      {"entropy_rise_over_band", jnum(rise)},
                      {"entropy_band", jnum(band)},
                      {"temperature_spread", jnum(temperature_spread(res.rows.back()))},
                      {"collisions", res.rows.back().collisions},
                      {"overflows", res.rows.back().overflows},
                      {"outputs", {"diagnostics.csv", "final_ensembles.csv", "manifest.json"}}};
  for (const auto& e : res.final_state.ensembles) {
    m["particles"].push_back(e.particles.size());
    m["particle_weight"] = e.weight;
  }
  int code = ok;
  if (check_prop) {
    const ODIBound odi = odi_bound(*rc.mixture, rc.specs, *rc.distributions, cfg.p, cfg.k);
    VerificationReport rep = check_propagation(res.rows, odi, cfg.p, cfg.k, cfg.bias_budget);
    rep.digest = rc.digest;
    rep.seed = rc.seed;
    m["propagation"] = to_json(rep);
    std::cout << (rep.pass ? "PASS " : "FAIL ") << "propagation  " << rep.label << "  max norm " << num(rep.lhs.value)
              << "  log10 bound " << num(rep.rhs_log10) << "\n";
    if (!rep.pass) code = verify_failed;
  }
  write_file(dir + "/manifest.json", m.dump(2) + "\n");
  const DiagnosticsRow& last = res.rows.back();
  std::cout << "steps " << cfg.n_steps << "  time " << num(res.final_state.time) << "  collisions " << last.collisions
            << "  drift " << num(conservation_drift(res.rows)) << "\n";
  return code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"polymix: polyatomic gas mixture constants, inequality verification and particle simulation"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "configuration file (JSON)");
    sub->add_option("--out", common.out, "output directory (overrides the config)");
    sub->add_option("--seed", common.seed, "master seed (overrides the config)");
    sub->add_option("--jobs", common.jobs, "worker threads for Monte Carlo")->check(CLI::PositiveNumber);
  };
  CLI::App* constants = app.add_subcommand("constants", "print the constants of every species pair");
  add_common(constants);
  CLI::App* verify = app.add_subcommand("verify", "run the inequality verification suite");
  add_common(verify);
  std::vector<std::pair<std::string, double>> corrupt;
  verify->add_option("--corrupt", corrupt, "multiply the constant of check NAME by FACTOR")->type_name("NAME FACTOR");
  CLI::App* simulate = app.add_subcommand("simulate", "run the particle solver");
  add_common(simulate);
  bool check_prop = false;
  simulate->add_flag("--check-propagation", check_prop, "compare histogram norms with the propagation bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }
  default_jobs() = common.jobs;
  try {
    if (*constants) return cmd_constants(common);
    if (*verify) return cmd_verify(common, corrupt);
    if (*simulate) return cmd_simulate(common, check_prop);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return config_error;
  } catch (const DivergenceError& e) {
    std::cerr << "divergent: " << e.what() << "\n";
    return numerical;
  } catch (const NonConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return numerical;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config_error;
  }
  return ok;
}
