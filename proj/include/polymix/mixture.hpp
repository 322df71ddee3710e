#ifndef POLYMIX_MIXTURE_HPP
#define POLYMIX_MIXTURE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "polymix/core.hpp"

namespace polymix {

struct SpeciesParams {
  double mass = 1.0;
  double alpha = 0.0;
};

class MixtureParams {
 public:
  MixtureParams() = default;

  // gamma may be a full P x P matrix or an upper triangle (row i holding
  // entries j = i..P-1); the triangle is mirrored.
  MixtureParams(std::vector<SpeciesParams> species, std::vector<std::vector<double>> gamma)
      : species_(std::move(species)) {
    const std::size_t P = species_.size();
    if (P == 0) throw ConfigError("mixture needs at least one species");
    for (std::size_t i = 0; i < P; ++i) {
      const auto& s = species_[i];
      if (!(s.mass > 0.0) || !std::isfinite(s.mass))
        throw ConfigError("species " + std::to_string(i + 1) + ": mass must be positive");
      if (!(s.alpha > -1.0) || !std::isfinite(s.alpha))
        throw ConfigError("species " + std::to_string(i + 1) + ": alpha must exceed -1");
    }
    if (gamma.size() != P) throw ConfigError("gamma must have one row per species");
    gamma_.assign(P, std::vector<double>(P, 0.0));
    bool triangle = true;
    for (std::size_t i = 0; i < P; ++i) triangle = triangle && gamma[i].size() == P - i;
    bool full = true;
    for (std::size_t i = 0; i < P; ++i) full = full && gamma[i].size() == P;
    if (!full && !triangle) throw ConfigError("gamma must be a full matrix or an upper triangle");
    for (std::size_t i = 0; i < P; ++i) {
      for (std::size_t j = i; j < P; ++j) {
        double g = full ? gamma[i][j] : gamma[i][j - i];
        if (full && std::abs(gamma[i][j] - gamma[j][i]) > 0.0)
          throw ConfigError("gamma must be symmetric (entries " + std::to_string(i + 1) + "," +
                            std::to_string(j + 1) + ")");
        if (!(g >= 0.0 && g <= 2.0))
          throw ConfigError("gamma entries must lie in [0,2]");
        gamma_[i][j] = gamma_[j][i] = g;
      }
    }
    total_mass_ = 0.0;
    for (const auto& s : species_) total_mass_ += s.mass;
    gamma_bar_ = std::numeric_limits<double>::infinity();
    gamma_barbar_ = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      double gi = *std::max_element(gamma_[i].begin(), gamma_[i].end());
      if (!(gi > 0.0))
        throw ConfigError("species " + std::to_string(i + 1) + ": max_j gamma_ij must be positive");
      gamma_bar_ = std::min(gamma_bar_, gi);
      gamma_barbar_ = std::max(gamma_barbar_, gi);
    }
  }

  std::size_t size() const { return species_.size(); }
  const SpeciesParams& species(std::size_t i) const { return species_.at(i); }
  const std::vector<SpeciesParams>& all_species() const { return species_; }
  double gamma(std::size_t i, std::size_t j) const { return gamma_.at(i).at(j); }
  double total_mass() const { return total_mass_; }
  double gamma_bar() const { return gamma_bar_; }
  double gamma_barbar() const { return gamma_barbar_; }
  // order of the L1 moment required for membership in the admissible set
  double omega_moment_order() const { return std::max(0.0, 2.0 + gamma_barbar_ - gamma_bar_); }

 private:
  std::vector<SpeciesParams> species_;
  std::vector<std::vector<double>> gamma_;
  double total_mass_ = 0.0;
  double gamma_bar_ = 0.0;
  double gamma_barbar_ = 0.0;
};

struct PairParams {
  std::size_t i = 0, j = 0;
  double m_i = 1.0, m_j = 1.0;
  double alpha_i = 0.0, alpha_j = 0.0;
  double mu = 0.5;
  double s_bar = 0.5;
  double gamma = 0.0;
  double m = 1.0; // total mixture mass

  PairParams swapped() const {
    PairParams p = *this;
    std::swap(p.i, p.j);
    std::swap(p.m_i, p.m_j);
    std::swap(p.alpha_i, p.alpha_j);
    return p;
  }
};

inline PairParams pair_params(const MixtureParams& mix, std::size_t i, std::size_t j) {
  if (i >= mix.size() || j >= mix.size()) throw DomainError("pair_params: species index out of range");
  PairParams p;
  p.i = i;
  p.j = j;
  p.m_i = mix.species(i).mass;
  p.m_j = mix.species(j).mass;
  p.alpha_i = mix.species(i).alpha;
  p.alpha_j = mix.species(j).alpha;
  p.mu = p.m_i * p.m_j / (p.m_i + p.m_j);
  p.s_bar = std::min(p.m_i, p.m_j) / (p.m_i + p.m_j);
  p.gamma = mix.gamma(i, j);
  p.m = mix.total_mass();
  return p;
}

inline double bracket_sq(double m_i, double m, const Vec3& v, double I) {
  return 1.0 + m_i * norm2(v) / (2.0 * m) + I / m;
}

inline double bracket(double m_i, double m, const Vec3& v, double I) {
  if (I < 0.0) throw DomainError("bracket: negative internal energy");
  return std::sqrt(bracket_sq(m_i, m, v, I));
}

inline double bracket(const MixtureParams& mix, std::size_t i, const Vec3& v, double I) {
  return bracket(mix.species(i).mass, mix.total_mass(), v, I);
}

struct AdmissibilityReport {
  bool admissible = false;
  bool energy_condition = false;   // (gamma/2 - alpha_i) p < 1 + gamma/2
  bool exchange_condition = false; // p (1 + alpha_i + alpha_j) > -1
  double p_max = std::numeric_limits<double>::infinity(); // exclusive
  std::string binding;            // "energy", "exchange" or "none"
};

inline AdmissibilityReport admissible_exponents(const PairParams& pair, double alpha_i, double alpha_j,
                                                double p) {
  if (!(p >= 1.0)) throw DomainError("admissible_exponents: p must be >= 1");
  const double g = pair.gamma;
  AdmissibilityReport r;
  r.energy_condition = std::isinf(p) ? !(g / 2.0 - alpha_i > 0.0) : (g / 2.0 - alpha_i) * p < 1.0 + g / 2.0;
  r.exchange_condition = std::isinf(p) ? !(1.0 + alpha_i + alpha_j < 0.0) : p * (1.0 + alpha_i + alpha_j) > -1.0;
  r.admissible = r.energy_condition && r.exchange_condition;
  r.binding = "none";
  if (alpha_i < g / 2.0) {
    r.p_max = (1.0 + g / 2.0) / (g / 2.0 - alpha_i);
    r.binding = "energy";
  }
  if (alpha_i + alpha_j < -1.0) {
    double pm = -1.0 / (1.0 + alpha_i + alpha_j);
    if (pm < r.p_max) {
      r.p_max = pm;
      r.binding = "exchange";
    }
  }
  return r;
}

} // namespace polymix

#endif // POLYMIX_MIXTURE_HPP
