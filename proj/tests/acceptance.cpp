// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "polymix/config.hpp"
#include "polymix/dsmc.hpp"
#include "polymix/operators.hpp"
#include "polymix/suite.hpp"

using namespace polymix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

MixtureParams pair_mixture(double m2, double gamma, double alpha) {
  return MixtureParams({{1.0, alpha}, {m2, alpha}}, {{1.0, gamma}, {gamma, 1.0}});
}

CollisionConfiguration random_config(Rng& rng) {
  CollisionConfiguration c;
  c.a.v = rng.gaussian3(1.0);
  c.b.v = rng.gaussian3(1.0);
  c.a.I = rng.gamma(1.5);
  c.b.I = rng.gamma(1.0);
  c.sigma = rng.sphere();
  c.r = rng.uniform_open();
  c.R = rng.uniform_open();
  return c;
}

Outcome involution() {
  double worst_back = 0.0, worst_cons = 0.0;
  for (double m2 : {1.0, 3.0}) {
    const PairParams pr = pair_params(pair_mixture(m2, 1.0, 0.5), 0, 1);
    Rng rng(derive_seed(1, fnv1a("acceptance/involution"), static_cast<std::uint64_t>(m2)));
    for (int n = 0; n < 100000; ++n) {
      const CollisionConfiguration c = random_config(rng);
      const CollisionImage img = transform(pr, c);
      const CollisionImage back = transform(pr, img.as_configuration());
      const double xs[] = {c.a.v.x, c.a.v.y, c.a.v.z, c.b.v.x, c.b.v.y, c.b.v.z, c.a.I, c.b.I,
                           c.sigma.x, c.sigma.y, c.sigma.z, c.r, c.R};
      const double ys[] = {back.a.v.x, back.a.v.y, back.a.v.z, back.b.v.x, back.b.v.y, back.b.v.z, back.a.I, back.b.I,
                           back.sigma.x, back.sigma.y, back.sigma.z, back.r, back.R};
      for (int k = 0; k < 13; ++k) worst_back = std::max(worst_back, std::abs(xs[k] - ys[k]) / std::max(1.0, std::abs(xs[k])));
      const Vec3 p0 = pr.m_i * c.a.v + pr.m_j * c.b.v, p1 = pr.m_i * img.a.v + pr.m_j * img.b.v;
      const double pscale = pr.m_i * norm(c.a.v) + pr.m_j * norm(c.b.v);
      const double e0 = pr.m_i * norm2(c.a.v) / 2 + pr.m_j * norm2(c.b.v) / 2 + c.a.I + c.b.I;
      const double e1 = pr.m_i * norm2(img.a.v) / 2 + pr.m_j * norm2(img.b.v) / 2 + img.a.I + img.b.I;
      worst_cons = std::max({worst_cons, norm(p1 - p0) / pscale, std::abs(e1 - e0) / e0});
    }
  }
  return {worst_back <= 1e-12 && worst_cons <= 1e-12,
          "2x1e5 configurations, max round-trip error " + fmt(worst_back) + ", max conservation error " + fmt(worst_cons)};
}

double fd_jacobian(const PairParams& pr, CollisionConfiguration c, StateSide side) {
  Eigen::Matrix4d J;
  ParticleState& s = side == StateSide::first ? c.a : c.b;
  for (int k = 0; k < 4; ++k) {
    double* x = k == 0 ? &s.v.x : k == 1 ? &s.v.y : k == 2 ? &s.v.z : &s.I;
    const double x0 = *x, h = 1e-5 * std::max(1.0, std::abs(x0));
    *x = x0 + h;
    const CollisionImage up = transform(pr, c);
    *x = x0 - h;
    const CollisionImage dn = transform(pr, c);
    *x = x0;
    J(0, k) = (up.a.v.x - dn.a.v.x) / (2 * h);
    J(1, k) = (up.a.v.y - dn.a.v.y) / (2 * h);
    J(2, k) = (up.a.v.z - dn.a.v.z) / (2 * h);
    J(3, k) = (up.a.I - dn.a.I) / (2 * h);
  }
  return std::abs(J.determinant());
}

Outcome jacobians() {
  const PairParams pr = pair_params(pair_mixture(3.0, 1.0, 0.5), 0, 1);
  Rng rng(derive_seed(1, fnv1a("acceptance/jacobian")));
  double worst_fd = 0.0, worst_prod = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const CollisionConfiguration c = random_config(rng);
    for (StateSide side : {StateSide::first, StateSide::second}) {
      const double exact = jacobian_fixed_params(pr, c.r, c.R, side);
      worst_fd = std::max(worst_fd, std::abs(fd_jacobian(pr, c, side) - exact) / exact);
    }
  }
  for (int n = 0; n < 10000; ++n) {
    const CollisionConfiguration c = random_config(rng);
    const double j = jacobian_T(pr, c) * jacobian_T(pr, transform(pr, c).as_configuration());
    worst_prod = std::max(worst_prod, std::abs(j - 1.0));
  }
  return {worst_fd <= 1e-6 && worst_prod <= 1e-10,
          "finite-difference determinants max rel error " + fmt(worst_fd) + " (1e3 points, both states), |J J(T) - 1| max " +
              fmt(worst_prod) + " (1e4 points)"};
}

Outcome measure() {
  bool ok = true;
  std::string d;
  for (double m2 : {1.0, 3.0}) {
    const PairParams pr = pair_params(pair_mixture(m2, 1.0, 0.5), 0, 1);
    auto phi = [&](const CollisionConfiguration& c) {
      const CollisionGeometry g = geometry(pr, c.a, c.b);
      const double hv = norm2(g.V) < 1.0 ? std::pow(1 - norm2(g.V), 3) : 0.0;
      const double he = g.E < 3.0 ? std::pow(1 - g.E / 3.0, 3) : 0.0;
      return hv * he * (1 + 0.5 * c.sigma.x) * (1 + c.r) * (1 + 0.3 * c.R) * (1 + 0.4 * c.a.v.x) * (1 + c.b.I);
    };
    const InvarianceEstimate est = measure_invariance(pr, phi, 1.0, 3.0, 1000000, 3);
    const double z = std::abs(est.pushed.value - est.direct.value) /
                     combined_stderr(est.pushed.std_error, est.direct.std_error);
    ok = ok && z <= 3.0;
    d += (d.empty() ? "" : "; ") + std::string(m2 == 1.0 ? "equal" : "1:3") + " masses pushed " +
         fmt(est.pushed.value) + " direct " + fmt(est.direct.value) + " (" + fmt(z) + " se)";
  }
  return {ok, d + ", n = 1e6"};
}

Outcome rho_values() {
  const MixtureParams mix = pair_mixture(1.0, 0.0, 0.0);
  const KernelSpec s{pair_params(mix, 0, 1), AngularKernel::constant(1.0)};
  const double r = rho(s, 2.0);
  bool diverges = false;
  try {
    rho(s, 1.0);
  } catch (const DivergenceError&) {
    diverges = true;
  }
  const AdmissibilityReport a = admissible_exponents(pair_params(pair_mixture(1.0, 2.0, 0.0), 0, 1), 0.0, 0.0, 1.5);
  const bool ok = std::abs(r - pi / 4) <= 1e-8 && diverges && a.p_max == 2.0;
  return {ok, "rho(q=2) - pi/4 = " + fmt(r - pi / 4) + ", q = 1 " + (diverges ? "divergent" : "NOT flagged") +
                  ", p_max(alpha_i=0, gamma=2) = " + fmt(a.p_max)};
}

Outcome weak_conservation() {
  const MixtureParams mix = pair_mixture(3.0, 1.0, 0.5);
  const KernelSpec sij{pair_params(mix, 0, 1), AngularKernel::constant(1.0 / (4 * pi))};
  const KernelSpec sji = sij.swapped();
  const TestDistribution f = TestDistribution::maxwellian(mix, 0, 1.0, {0.3, 0, 0}, 1.0);
  const TestDistribution g = TestDistribution::maxwellian(mix, 1, 0.8, {-0.2, 0.1, 0}, 2.0);
  SamplerConfig cfg;
  cfg.n_samples = 1000000;
  cfg.seed = 5;
  const MCEstimate one = weak_form(sij, f, g, [](const Vec3&, double) { return 1.0; }, Part::full, cfg);
  bool ok = std::abs(one.value) <= 3 * one.std_error;
  std::string d = "chi=1: " + fmt(one.value);
  const double mi = 1.0, mj = 3.0;
  auto pair_check = [&](const char* tag, const TestFn& ci, const TestFn& cj) {
    SamplerConfig c2 = cfg;
    c2.seed = 6;
    const MCEstimate a = weak_form(sij, f, g, ci, Part::full, cfg);
    const MCEstimate b = weak_form(sji, g, f, cj, Part::full, c2);
    const double z = std::abs(a.value + b.value) / combined_stderr(a.std_error, b.std_error);
    ok = ok && z <= 3.0;
    d += std::string(", ") + tag + " exchange " + fmt(a.value) + " + " + fmt(b.value) + " (" + fmt(z) + " se)";
  };
  pair_check("px", [&](const Vec3& v, double) { return mi * v.x; }, [&](const Vec3& v, double) { return mj * v.x; });
  pair_check("py", [&](const Vec3& v, double) { return mi * v.y; }, [&](const Vec3& v, double) { return mj * v.y; });
  pair_check("energy", [&](const Vec3& v, double I) { return mi * norm2(v) / 2 + I; },
             [&](const Vec3& v, double I) { return mj * norm2(v) / 2 + I; });
  return {ok, d + ", n = 1e6"};
}

Outcome equilibrium() {
  const MixtureParams mix = pair_mixture(3.0, 1.0, 0.5);
  const KernelSpec s{pair_params(mix, 0, 1), AngularKernel::constant(1.0 / (4 * pi))};
  const TestDistribution f = TestDistribution::maxwellian(mix, 0, 1.0, {0.2, 0, 0}, 1.2);
  const TestDistribution g = TestDistribution::maxwellian(mix, 1, 0.5, {0.2, 0, 0}, 1.2);
  double worst = 0.0;
  for (const ParticleState& x : probe_points(20, 7, 4.0, 8.0)) {
    SamplerConfig cfg;
    cfg.n_samples = 1000000;
    cfg.seed = 8;
    const MCEstimate gain = gain_pointwise(s, f, g, x.v, x.I, cfg);
    cfg.seed = 9;
    const MCEstimate nu = collision_frequency(s, g, x.v, x.I, cfg);
    const double fx = f(x.v, x.I);
    const double se = combined_stderr(gain.std_error, fx * nu.std_error);
    worst = std::max(worst, std::abs(gain.value - fx * nu.value) / se);
  }
  return {worst <= 3.0, "20 probe points, n = 1e6 each, max |Q+ - nu f| = " + fmt(worst) + " combined se"};
}

Outcome inequality_suite() {
  SuiteOptions opt;
  const auto cases = curated_cases();
  const auto reps = run_suite(cases, opt);
  std::size_t failed = 0;
  double worst_kernel = inf;
  for (const auto& r : reps) {
    if (!r.pass) {
      ++failed;
      std::cout << "  curated failure: " << r.name << " " << r.label << " margin " << fmt(r.margin) << " "
                << r.error << "\n";
    }
    if (r.name == "kernel_distribution") worst_kernel = std::min(worst_kernel, r.margin);
  }
  std::string missed;
  for (const auto& name : check_names()) {
    SuiteOptions m = opt;
    m.checks = {name};
    m.corrupt = documented_mutation(name);
    bool caught = false;
    for (const auto& c : cases) {
      if (!all_pass(run_case(c, m))) {
        caught = true;
        break;
      }
    }
    if (!caught) missed += " " + name;
  }
  const bool ok = failed == 0 && missed.empty() && worst_kernel >= 0.0;
  return {ok, std::to_string(reps.size() - failed) + "/" + std::to_string(reps.size()) +
                  " curated reports pass, kernel sweep min margin " + fmt(worst_kernel) + ", mutations " +
                  (missed.empty() ? "all caught" : "missed:" + missed)};
}

Outcome constants() {
  const double m = 4.0, mj = 3.0;
  const MCEstimate c = bracket_inv6_mc(m, mj, 1000000, 11);
  const double zc = std::abs(c.value - hat_c(m, mj)) / c.std_error;
  const double zc_exact = std::abs(c.value - bracket_inv6_exact(m, mj)) / c.std_error;
  const PairParams pr = pair_params(MixtureParams({{1.0, 0.0}, {3.0, 0.0}}, {{1.0, 1.0}, {1.0, 1.0}}), 0, 1);
  const double delta = 0.7;
  const MCEstimate v = ball_volume_mc(pr, {{0.1, 0, 0}, 0.0}, delta, 1000000, 12);
  const double zv = std::abs(v.value - ball_volume_stated(pr, delta)) / v.std_error;
  const double zv_exact = std::abs(v.value - ball_volume_exact(pr, delta)) / v.std_error;
  return {zc <= 3.0 && zv <= 3.0,
          "stated c_hat " + fmt(hat_c(m, mj)) + " vs MC " + fmt(c.value) + " (" + fmt(zc) + " se; exact " +
              fmt(bracket_inv6_exact(m, mj)) + " at " + fmt(zc_exact) + " se); stated ball volume " +
              fmt(ball_volume_stated(pr, delta)) + " vs MC " + fmt(v.value) + " (" + fmt(zv) + " se; exact " +
              fmt(ball_volume_exact(pr, delta)) + " at " + fmt(zv_exact) + " se)"};
}

Outcome solver() {
  const RunConfig rc = load_config(std::string(POLYMIX_CONFIG_DIR) + "/relaxation.json");
  const SolverConfig& cfg = rc.solver;
  const RunResult r = run(*rc.mixture, rc.specs, *rc.distributions, cfg);
  const double drift = conservation_drift(r.rows);
  double band = 0.0;
  const double rise = entropy_rise(r.rows, cfg.burn_in_fraction, &band);
  const double spread0 = temperature_spread(r.rows.front());
  const double spread = temperature_spread(r.rows.back());
  const ODIBound odi = odi_bound(*rc.mixture, rc.specs, *rc.distributions, cfg.p, cfg.k);
  const VerificationReport prop = check_propagation(r.rows, odi, cfg.p, cfg.k, cfg.bias_budget);
  const bool ok = drift <= 1e-10 && rise <= 1.0 && spread <= 0.05 && prop.pass;
  return {ok, "drift " + fmt(drift) + ", entropy rise " + fmt(rise) + " x band, temperature spread " + fmt(spread0) +
                  " -> " + fmt(spread) + ", max L2 norm " + fmt(prop.lhs.value) + " vs log10 bound " +
                  fmt(prop.rhs_log10)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  const std::string cli = POLYMIX_CLI_PATH, cfgdir = POLYMIX_CONFIG_DIR;
  const fs::path root = fs::current_path() / "acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  struct Cmd {
    std::string name, args;
    std::vector<std::string> files;
  };
  const std::vector<Cmd> cmds = {
      {"constants", "constants --config " + cfgdir + "/constants.json", {"constants.json"}},
      {"verify", "verify --config " + cfgdir + "/verify_quick.json", {"verify_report.json", "verify_summary.csv"}},
      {"simulate", "simulate --check-propagation --config " + cfgdir + "/equilibrium.json",
       {"diagnostics.csv", "final_ensembles.csv", "manifest.json"}}};
  std::string bad;
  for (const auto& c : cmds)
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / (c.name + std::to_string(rep));
      const std::string line = cli + " " + c.args + " --out " + out.string() + " > " + (out.string() + ".log") + " 2>&1";
      fs::create_directories(out);
      if (std::system(line.c_str()) != 0) bad += " " + c.name + "(exit)";
    }
  std::size_t compared = 0;
  for (const auto& c : cmds)
    for (const auto& f : c.files) {
      const std::string a = slurp(root / (c.name + "0") / f), b = slurp(root / (c.name + "1") / f);
      ++compared;
      if (a.empty() || a != b) bad += " " + c.name + "/" + f;
    }
  return {bad.empty(), std::to_string(compared) + " output files from constants, verify, simulate compared byte-for-byte" +
                           (bad.empty() ? "" : "; differing:" + bad)};
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> all = {
      {1, "involution and conservation", 10, involution},
      {2, "jacobians", 30, jacobians},
      {3, "measure invariance", 120, measure},
      {4, "rho constants and admissibility", 5, rho_values},
      {5, "weak-form conservation", 300, weak_conservation},
      {6, "equilibrium fixed point", 600, equilibrium},
      {7, "inequality suite and mutations", 1800, inequality_suite},
      {8, "constant reproduction", 120, constants},
      {9, "solver relaxation", 900, solver},
      {10, "determinism", 0, determinism},
  };
  int failures = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0.0 || s <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << fmt(s) << " s" << (c.budget_s > 0 ? ", budget " + fmt(c.budget_s) + " s" : "")
              << (in_time ? "" : ", over budget") << "]" << std::endl;
  }
  std::cout << (10 - failures) << "/10 criteria pass" << std::endl;
  return failures == 0 ? 0 : 1;
}
