#ifndef POLYMIX_VALIDATION_HPP
#define POLYMIX_VALIDATION_HPP

#include <cmath>
#include <string>
#include <vector>

#include "polymix/distributions.hpp"
#include "polymix/mixture.hpp"

namespace polymix {

struct ValidationReport {
  bool admissible = true;
  std::vector<std::string> failures;
  std::vector<double> masses;
  std::vector<double> moments; // L1 moment of order (2 + gamma_barbar - gamma_bar)^+
  double moment_order = 0.0;

  void fail(std::string why) {
    admissible = false;
    failures.push_back(std::move(why));
  }
};

namespace detail {

inline std::string species_label(std::size_t i) { return "species " + std::to_string(i + 1) + ": "; }

// sample-doubling check: the moment over the first half and over all
// particles must agree to `tol` relative
inline bool moment_stable(const ParticleEnsemble& e, double m_i, double m, double k, double tol, double& value) {
  const std::size_t n = e.particles.size();
  double half = 0.0, all = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const auto& p = e.particles[a];
    double w = std::pow(bracket_sq(m_i, m, p.v, p.I), k / 2.0);
    all += w;
    if (a < n / 2) half += w;
  }
  value = e.weight * all;
  if (!std::isfinite(value)) return false;
  if (n < 2) return true;
  const double mean_all = all / static_cast<double>(n), mean_half = half / static_cast<double>(n / 2);
  return std::abs(mean_half - mean_all) <= tol * mean_all;
}

} // namespace detail

inline ValidationReport validate_initial_data(const MixtureParams& mix, const std::vector<TestDistribution>& F0) {
  ValidationReport rep;
  rep.moment_order = mix.omega_moment_order();
  if (F0.size() != mix.size()) {
    rep.fail("initial data must have one distribution per species");
    return rep;
  }
  for (std::size_t i = 0; i < F0.size(); ++i) {
    const auto& d = F0[i];
    const std::string tag = detail::species_label(i);
    if (d.species() != i) rep.fail(tag + "distribution belongs to another species");
    if (!d.nonnegative()) rep.fail(tag + "nonnegativity violated");
    const double M = d.mass();
    rep.masses.push_back(M);
    if (!(M > 0.0) || !std::isfinite(M)) {
      rep.fail(tag + "mass must be strictly positive and finite");
      rep.moments.push_back(std::nan(""));
      continue;
    }
    double mom = std::nan("");
    if (d.nonnegative()) {
      mom = norm_L1(d, rep.moment_order);
      if (!std::isfinite(mom)) rep.fail(tag + "L1 moment of order " + std::to_string(rep.moment_order) + " is not finite");
    }
    rep.moments.push_back(mom);
  }
  return rep;
}

inline ValidationReport validate_initial_data(const MixtureParams& mix, const std::vector<ParticleEnsemble>& F0,
                                              double stability_tol = 0.1) {
  ValidationReport rep;
  rep.moment_order = mix.omega_moment_order();
  if (F0.size() != mix.size()) {
    rep.fail("initial data must have one ensemble per species");
    return rep;
  }
  for (std::size_t i = 0; i < F0.size(); ++i) {
    const auto& e = F0[i];
    const std::string tag = detail::species_label(i);
    if (!(e.weight >= 0.0)) rep.fail(tag + "nonnegativity violated (negative particle weight)");
    const double M = e.mass();
    rep.masses.push_back(M);
    if (!(M > 0.0) || !std::isfinite(M)) {
      rep.fail(tag + "mass must be strictly positive and finite");
      rep.moments.push_back(std::nan(""));
      continue;
    }
    bool bad_state = false;
    for (const auto& p : e.particles)
      if (!(p.I >= 0.0) || !std::isfinite(p.I) || !std::isfinite(norm2(p.v))) bad_state = true;
    if (bad_state) {
      rep.fail(tag + "particle with invalid velocity or internal energy");
      rep.moments.push_back(std::nan(""));
      continue;
    }
    double mom = 0.0;
    if (!detail::moment_stable(e, mix.species(i).mass, mix.total_mass(), rep.moment_order, stability_tol, mom))
      rep.fail(tag + "L1 moment of order " + std::to_string(rep.moment_order) + " unstable under sample doubling");
    rep.moments.push_back(mom);
  }
  return rep;
}

} // namespace polymix

#endif // POLYMIX_VALIDATION_HPP
