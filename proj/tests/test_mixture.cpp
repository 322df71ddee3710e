#include "catch_amalgamated.hpp"

#include "polymix/mixture.hpp"

using namespace polymix;
using Catch::Approx;

TEST_CASE("triangle and full gamma inputs agree") {
  MixtureParams full({{1, 0}, {3, 0.5}}, {{1, 0.5}, {0.5, 2}});
  MixtureParams tri({{1, 0}, {3, 0.5}}, {{1, 0.5}, {2}});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(full.gamma(i, j) == tri.gamma(i, j));
  CHECK(full.total_mass() == 4.0);
  CHECK(full.gamma_bar() == 1.0);
  CHECK(full.gamma_barbar() == 2.0);
  CHECK(full.omega_moment_order() == 3.0);
}

TEST_CASE("invalid mixtures are rejected") {
  CHECK_THROWS_AS(MixtureParams({}, {}), ConfigError);
  CHECK_THROWS_AS(MixtureParams({{0, 0}}, {{1}}), ConfigError);
  CHECK_THROWS_AS(MixtureParams({{1, -1}}, {{1}}), ConfigError);
  CHECK_THROWS_AS(MixtureParams({{1, 0}}, {{2.5}}), ConfigError);
  CHECK_THROWS_AS(MixtureParams({{1, 0}, {1, 0}}, {{1, 0.5}, {0.4, 1}}), ConfigError);
  CHECK_THROWS_AS(MixtureParams({{1, 0}, {1, 0}}, {{0, 0}, {0, 1}}), ConfigError);
  CHECK_NOTHROW(MixtureParams({{1, 0}, {1, 0}}, {{1, 0}, {0, 1}}));
}

TEST_CASE("pair parameters") {
  MixtureParams mix({{1, 0}, {3, 0.5}}, {{1, 1}, {1, 1}});
  PairParams p = pair_params(mix, 0, 1);
  CHECK(p.mu == Approx(0.75));
  CHECK(p.s_bar == Approx(0.25));
  CHECK(p.m == 4.0);
  PairParams q = p.swapped();
  CHECK(q.m_i == 3.0);
  CHECK(q.alpha_i == 0.5);
  CHECK_THROWS_AS(pair_params(mix, 0, 2), DomainError);
}

TEST_CASE("bracket") {
  CHECK(bracket(2.0, 4.0, {1, 0, 0}, 0.0) == Approx(std::sqrt(1.25)));
  CHECK(bracket(1.0, 2.0, {0, 0, 0}, 2.0) == Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(bracket(1.0, 2.0, {0, 0, 0}, -1.0), DomainError);
}

TEST_CASE("admissible exponents") {
  MixtureParams mix({{1, 0}, {1, 0}}, {{2, 2}, {2, 2}});
  PairParams p = pair_params(mix, 0, 1);
  AdmissibilityReport r = admissible_exponents(p, 0.0, 0.0, 1.5);
  CHECK(r.admissible);
  CHECK(r.p_max == 2.0);
  CHECK(r.binding == "energy");
  CHECK_FALSE(admissible_exponents(p, 0.0, 0.0, 2.0).admissible);
  CHECK(admissible_exponents(p, 1.0, 0.0, 100.0).admissible);
  CHECK(std::isinf(admissible_exponents(p, 1.0, 0.0, 3.0).p_max));
  CHECK_THROWS_AS(admissible_exponents(p, 0.0, 0.0, 0.5), DomainError);
}
