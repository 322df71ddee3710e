#include "catch_amalgamated.hpp"

#include <cmath>

#include "polymix/distributions.hpp"
#include "polymix/validation.hpp"

using namespace polymix;
using Catch::Approx;

namespace {

MixtureParams mix_of(double alpha) { return MixtureParams({{1, alpha}, {3, alpha}}, {{1, 1}, {1, 1}}); }

} // namespace

TEST_CASE("maxwellian mass, second moment and L2 norm") {
  for (double alpha : {0.0, 0.5, 2.0}) {
    MixtureParams mix = mix_of(alpha);
    const double n = 0.7, T = 1.3, m1 = 3.0;
    TestDistribution f = TestDistribution::maxwellian(mix, 1, n, {0.2, -0.1, 0.4}, T);
    CHECK(f.mass() == n);
    CHECK(norm_L1(f, 0.0) == Approx(n).epsilon(1e-8));
    CHECK(norm_L1(f, 2.0) == Approx(maxwellian_moment2(f)).epsilon(1e-8));
    const double gauss2 = std::pow(m1 / (4 * pi * T), 1.5);
    const double gam2 = std::tgamma(2 * alpha + 1) / (std::pow(std::tgamma(alpha + 1), 2) * std::pow(2.0, 2 * alpha + 1) * T);
    CHECK(norm_Lp(f, 2.0, 0.0) == Approx(n * std::sqrt(gauss2 * gam2)).epsilon(1e-7));
  }
}

TEST_CASE("maxwellian entropy") {
  MixtureParams mix = mix_of(0.0);
  const double n = 2.0, T = 0.8, m0 = 1.0;
  TestDistribution f = TestDistribution::maxwellian(mix, 0, n, {}, T);
  const double exact = n * (std::log(n) + 1.5 * std::log(m0 / (2 * pi * T)) - 2.5 - std::log(T));
  CHECK(entropy_signed(f) == Approx(exact).epsilon(1e-8));
  MCEstimate h = entropy_H(f, 200000, 3);
  CHECK(std::abs(h.value - entropy_abs(f)) <= 4 * h.std_error);
}

TEST_CASE("bump norms and sampling") {
  MixtureParams mix = mix_of(0.0);
  TestDistribution b = TestDistribution::bump(mix, 0, {0.5, 0, 0}, 2.0, 1.0, 0.4);
  CHECK(b.mass() == Approx(0.4 * pi * pi / 2));
  CHECK(norm_L1(b, 0.0) == Approx(b.mass()).epsilon(1e-6));
  CHECK(norm_Lp(b, 3.0, 0.0) == Approx(0.4 * std::cbrt(pi * pi / 2)));
  CHECK(entropy_signed(b) == Approx(b.mass() * std::log(0.4)));
  MCEstimate w = weighted_L1(b, 2.0, 200000, 5);
  CHECK(std::abs(w.value - norm_L1(b, 2.0)) <= 4 * w.std_error);
  CHECK_THROWS_AS(TestDistribution::bump(mix, 0, {}, 0.5, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(b({0, 0, 0}, -1.0), DomainError);
}

TEST_CASE("mixture of two maxwellians") {
  MixtureParams mix = mix_of(0.5);
  Maxwellian a{1.0, {0.5, 0, 0}, 1.0}, c{1.0, {-1.0, 0, 0}, 2.0};
  TestDistribution f = TestDistribution::mixture_of_two(mix, 0, a, c, 0.25, 0.75);
  CHECK(f.mass() == 1.0);
  CHECK(norm_L1(f, 0.0) == Approx(1.0).epsilon(1e-7));
  MCEstimate w = weighted_L1(f, 2.0, 200000, 9);
  CHECK(std::abs(w.value - norm_L1(f, 2.0)) <= 4 * w.std_error);
}

TEST_CASE("bracket integral constant") {
  // int (1 + a|v|^2 + I/m)^{-3} dv dI = pi^2 m a^{-3/2} / 2 with a = m_j / 2m
  for (auto [m, mj] : {std::pair{2.0, 1.0}, std::pair{4.0, 3.0}}) {
    const double a = mj / (2 * m);
    CHECK(bracket_inv6_exact(m, mj) == Approx(pi * pi * m * std::pow(a, -1.5) / 2));
    CHECK(bracket_inv6_exact(m, mj) / hat_c(m, mj) == Approx(2 * std::sqrt(2.0)));
  }
}

TEST_CASE("ensembles and histograms") {
  MixtureParams mix = mix_of(0.0);
  TestDistribution f = TestDistribution::maxwellian(mix, 0, 2.0, {0.3, 0, 0}, 1.0);
  ParticleEnsemble e = sample(f, 20000, 1);
  CHECK(e.mass() == Approx(2.0));
  Vec3 mean;
  for (const auto& p : e.particles) mean += p.v;
  mean *= 1.0 / e.particles.size();
  CHECK(mean.x == Approx(0.3).margin(0.03));

  HistogramGrid g = default_grid(1.0, 1.0, 8, 8);
  g.clip_tolerance = 1e-3;
  HistogramDensity h = histogram(e, g);
  CHECK(h.total + h.clipped == Approx(2.0));
  HistogramGrid tiny = g;
  tiny.L = 0.5;
  CHECK_THROWS_AS(histogram(e, tiny), DomainError);

  ParticleEnsemble one;
  one.weight = 0.5;
  one.particles.assign(10, ParticleState{{0.1, 0.1, 0.1}, 0.1});
  const double vol = g.bin_volume();
  CHECK(histogram_Lp(one, g, 1.0, 4.0, 2.0, 0.0) == Approx(5.0 / vol * std::sqrt(vol)));
  CHECK(histogram_entropy(histogram(one, g)) == Approx(5.0 * std::log(5.0 / vol)));
}

TEST_CASE("initial data validation") {
  MixtureParams mix = mix_of(0.0);
  std::vector<TestDistribution> F = {TestDistribution::maxwellian(mix, 0, 1, {}, 1),
                                     TestDistribution::maxwellian(mix, 1, 1, {}, 1)};
  ValidationReport ok = validate_initial_data(mix, F);
  CHECK(ok.admissible);
  CHECK(ok.moment_order == 2.0);
  F[1] = TestDistribution::maxwellian(mix, 1, -1, {}, 1);
  ValidationReport bad = validate_initial_data(mix, F);
  CHECK_FALSE(bad.admissible);
  CHECK(bad.failures.size() == 2);
  CHECK_FALSE(validate_initial_data(mix, std::vector<TestDistribution>{F[0]}).admissible);

  std::vector<ParticleEnsemble> E = {sample(F[0], 1000, 1), sample(F[0], 1000, 2)};
  E[1].species = 1;
  CHECK(validate_initial_data(mix, E).admissible);
  E[1].particles[3].I = -1.0;
  CHECK_FALSE(validate_initial_data(mix, E).admissible);
}
