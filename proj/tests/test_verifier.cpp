#include "catch_amalgamated.hpp"

#include <cmath>
#include <utility>

#include "polymix/suite.hpp"

using namespace polymix;
using Catch::Approx;

namespace {

VerifyCase find_case(const std::string& label) {
  for (const auto& c : curated_cases())
    if (c.label == label) return c;
  throw std::runtime_error("no curated case " + label);
}

SuiteOptions small(const std::string& check) {
  SuiteOptions o;
  o.n_samples = 20000;
  o.n_outer = 20000;
  o.kernel_points = 20000;
  o.n_probe = 4;
  o.checks = {check};
  return o;
}

} // namespace

TEST_CASE("report margin and pass rule") {
  VerificationReport r;
  r.lhs = {1.0, 0.1, 10, 0, 0};
  r.rhs = {0.8, 0.0, 0, 0, 0};
  r.finalize();
  CHECK(r.margin == Approx(-0.2));
  CHECK(r.pass);
  r.rhs.value = 0.6;
  r.finalize();
  CHECK_FALSE(r.pass);
  r.error = "boom";
  r.finalize();
  CHECK_FALSE(r.pass);
  CHECK(std::isnan(r.margin));
}

TEST_CASE("check names and mutations") {
  CHECK(check_names().size() == 10);
  CHECK(is_check_name("gain_Linf"));
  CHECK_FALSE(is_check_name("gain"));
  for (const auto& n : check_names()) CHECK(documented_mutation(n).factors.count(n) == 1);
  SuiteOptions o;
  o.checks = {"nope"};
  CHECK_THROWS_AS(run_suite(curated_cases(), o), ConfigError);
}

TEST_CASE("kernel distribution bound is tight at gamma = 0 and holds pointwise") {
  MixtureParams tight({{1, 0}, {3, 0}}, {{1, 0}, {0, 1}});
  VerificationReport t = verify_kernel_distribution(pair_params(tight, 0, 1), 2.0, 50000, 3);
  CHECK(t.pass);
  CHECK(t.rhs.value / t.lhs.value == Approx(1.0).epsilon(1e-12));
  // gamma = 1, equal masses: worst slack about 1.47, the mutation scales it by 0.5
  MixtureParams mix({{1, 0}, {1, 0}}, {{1, 1}, {1, 1}});
  PairParams pr = pair_params(mix, 0, 1);
  VerificationReport r = verify_kernel_distribution(pr, 2.0, 50000, 3);
  CHECK(r.pass);
  CHECK(r.rhs.value / r.lhs.value < 2.0);
  CHECK_FALSE(verify_kernel_distribution(pr, 2.0, 50000, 3, 0.25).pass);
  MixtureParams m0({{1, 0}, {1, 0}}, {{1, 0}, {0, 1}});
  VerificationReport z = verify_kernel_distribution(pair_params(m0, 0, 1), 2.0, 1000, 3);
  CHECK(z.lhs.value == 1.0);
  CHECK(z.rhs.value == 1.0);
}

TEST_CASE("averaging bound orientation is enforced") {
  VerifyCase vc = find_case("gamma1-1to3");
  CHECK_THROWS_AS(verify_averaging_bound(vc.spec(), {Sign::plus, NormOver::second, false}, 2.0, vc.chi, vc.fixed, 100, 1),
                  DomainError);
}

TEST_CASE("curated case passes and documented mutations fail") {
  const std::pair<const char*, const char*> runs[] = {{"averaging_L1", "gamma1-1to3"},
                                                      {"gain_L1", "gamma1-1to3"},
                                                      {"bilinear_gain", "gamma1-1to3"},
                                                      {"bilinear_loss", "gamma0-equal"}};
  for (const auto& [check, label] : runs) {
    VerifyCase vc = find_case(label);
    SuiteOptions o = small(check);
    auto reps = run_case(vc, o);
    REQUIRE_FALSE(reps.empty());
    INFO(check);
    CHECK(all_pass(reps));
    o.corrupt = documented_mutation(check);
    CHECK_FALSE(all_pass(run_case(vc, o)));
  }
}

TEST_CASE("lower bounds at gamma = 0") {
  VerifyCase vc = find_case("gamma0-equal");
  SuiteOptions o = small("lower_bound");
  auto reps = run_case(vc, o);
  REQUIRE(reps.size() == 1);
  CHECK(reps[0].pass);
  o.corrupt = documented_mutation("lower_bound");
  CHECK_FALSE(run_case(vc, o)[0].pass);

  LowerBoundConstants lb = lower_bound_constants(vc.spec(), vc.g);
  // gamma = 0: L1 = 1, L2 = mass / 2
  CHECK(lb.L1 == 1.0);
  CHECK(lb.L2 == Approx(vc.g.mass() / 2));
  CHECK(lb.log_K_level == Approx(4 * entropy_abs(vc.g) / vc.g.mass()));
  CHECK(std::pow(lb.delta, 5) ==
        Approx(15.0 / (64 * pi) * vc.spec().pair.mu / 4.0 * vc.g.mass() * std::exp(-lb.log_K_level)));
}

TEST_CASE("inadmissible exponent reports divergence") {
  VerifyCase vc = find_case("gamma2-equal");
  vc.mix = MixtureParams({{1, 0}, {1, 0}}, {{1, 2}, {2, 1}});
  vc.f = TestDistribution::maxwellian(vc.mix, 0, 1, {}, 1);
  vc.g = TestDistribution::maxwellian(vc.mix, 1, 1, {}, 1);
  vc.chi = vc.f;
  SuiteOptions o = small("gain_L1");
  auto reps = run_case(vc, o);
  REQUIRE_FALSE(reps.empty());
  for (const auto& r : reps) {
    CHECK_FALSE(r.pass);
    CHECK(r.error.find("inadmissible") != std::string::npos);
  }
}

TEST_CASE("bilinear and propagation constants") {
  VerifyCase vc = find_case("gamma1-1to3");
  BilinearConstants bc = bilinear_constants(vc.spec(), vc.f, vc.g, 2.0, 0.0);
  CHECK(bc.eps > 0.0);
  CHECK(bc.log_B > 0.0);
  CHECK(bc.f_Lp == Approx(norm_Lp(vc.f, 2.0, 0.5)));
  std::vector<std::vector<KernelSpec>> specs(2, std::vector<KernelSpec>(2));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) specs[i][j] = {pair_params(vc.mix, i, j), AngularKernel::constant(1.0)};
  ODIBound o = odi_bound(vc.mix, specs, {vc.f, vc.g}, 2.0, 0.0);
  CHECK(o.A > 0.0);
  CHECK(o.F0_Lp_pow == Approx(std::pow(norm_Lp(vc.f, 2, 0), 2) + std::pow(norm_Lp(vc.g, 2, 0), 2)));
  CHECK(o.log_bound_Lp >= std::log(o.F0_Lp_pow));
  CHECK_FALSE(o.linf_available);
}

TEST_CASE("stated constants against Monte Carlo") {
  MCEstimate c = bracket_inv6_mc(4.0, 3.0, 200000, 2);
  CHECK(std::abs(c.value - bracket_inv6_exact(4.0, 3.0)) <= 4 * c.std_error);
  CHECK(std::abs(c.value - hat_c(4.0, 3.0)) > 10 * c.std_error);

  MixtureParams mix({{1, 0}, {3, 0}}, {{1, 1}, {1, 1}});
  PairParams pr = pair_params(mix, 0, 1);
  MCEstimate v = ball_volume_mc(pr, {{0.1, 0, 0}, 0.0}, 0.7, 200000, 2);
  CHECK(std::abs(v.value - ball_volume_exact(pr, 0.7)) <= 4 * v.std_error);
  CHECK(ball_volume_exact(pr, 0.7) / ball_volume_stated(pr, 0.7) == Approx(std::sqrt(2 * pr.m / pr.mu)));
}
