#ifndef POLYMIX_CONSTANTS_HPP
#define POLYMIX_CONSTANTS_HPP

#include <sstream>
#include <string>

#include "polymix/config.hpp"
#include "polymix/report.hpp"

namespace polymix {

struct ConstantsTable {
  nlohmann::json data;
  std::string text;
  bool any_divergent = false;
};

inline std::string pair_name(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

inline double log10_or_nan(double x) { return x > 0.0 ? std::log10(x) : std::numeric_limits<double>::quiet_NaN(); }

inline ConstantsTable constants_table(const RunConfig& rc) {
  if (!rc.mixture) throw ConfigError("/mixture: missing required key 'mixture'");
  const MixtureParams& mix = *rc.mixture;
  const std::size_t P = mix.size();
  ConstantsTable t;
  std::ostringstream tx;
  tx.precision(8);
  t.data["digest"] = rc.digest;
  t.data["seed"] = rc.seed;
  t.data["p"] = rc.constants.p;
  t.data["k"] = rc.constants.k;
  t.data["pairs"] = nlohmann::json::array();
  const bool have_f = rc.distributions.has_value();
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = 0; j < P; ++j) {
      const KernelSpec& s = rc.specs[i][j];
      nlohmann::json pj;
      pj["pair"] = {i + 1, j + 1};
      pj["gamma"] = s.pair.gamma;
      pj["angular"] = s.angular.describe();
      pj["upper"] = s.upper.describe();
      pj["lower"] = s.lower.describe();
      tx << "pair " << pair_name(i, j) << "  gamma " << s.pair.gamma << "  b " << s.angular.describe() << "\n";
      for (double q : rc.constants.q) {
        nlohmann::json qj;
        qj["q"] = jnum(q);
        try {
          const double r = rho(s, q);
          qj["rho"] = jnum(r);
          qj["c"] = jnum(c_gain_from_rho(s.pair, q, r));
          qj["rho_closed_form"] = s.upper.is_constant() ? jnum(rho_closed_form(s, q)) : nlohmann::json(nullptr);
          tx << "  q " << q << "  rho " << r << "  c " << c_gain_from_rho(s.pair, q, r) << "\n";
        } catch (const DivergenceError& e) {
          t.any_divergent = true;
          qj["rho"] = "divergent";
          qj["reason"] = e.what();
          tx << "  q " << q << "  rho divergent: " << e.what() << "\n";
        }
        pj["q_values"].push_back(qj);
      }
      pj["hat_c"] = {{"stated", hat_c(s.pair.m, s.pair.m_j)}, {"exact", bracket_inv6_exact(s.pair.m, s.pair.m_j)}};
      if (have_f) {
        const auto& F = *rc.distributions;
        try {
          const LowerBoundConstants lb = lower_bound_constants(s, F[j]);
          pj["lower_bound"] = {{"L1", lb.L1},           {"L2", lb.L2},       {"delta", lb.delta},
                               {"log_K", lb.log_K_level}, {"c_lb_tilde", lb.c_lb_tilde}, {"c_lb", lb.c_lb},
                               {"entropy_abs", lb.H}};
          tx << "  c_lb[f_" << j + 1 << "] " << lb.c_lb << "  delta " << lb.delta << "\n";
        } catch (const Error& e) {
          pj["lower_bound"] = {{"error", e.what()}};
        }
        try {
          const BilinearConstants bc = bilinear_constants(s, F[i], F[j], rc.constants.p, rc.constants.k);
          pj["bilinear"] = {{"C1_ij", bc.C1_ij},
                            {"C1_ji", bc.C1_ji},
                            {"C2_ij", bc.C2_ij},
                            {"C2_ji", bc.C2_ji},
                            {"eps", bc.eps},
                            {"eps_tilde", bc.eps_tilde},
                            {"split_level", jnum(bc.split_level)},
                            {"b_inf_Linf", bc.b_inf_Linf},
                            {"log10_K", jnum(bc.log_K / std::log(10.0))},
                            {"log10_K_closing", jnum(bc.log_K_closing / std::log(10.0))},
                            {"log10_B", jnum(bc.log_B / std::log(10.0))},
                            {"notes", bc.notes}};
          tx << "  C1 " << bc.C1_ij << " / " << bc.C1_ji << "  C2 " << bc.C2_ij << " / " << bc.C2_ji
             << "  log10 B " << bc.log_B / std::log(10.0) << "\n";
        } catch (const DivergenceError& e) {
          t.any_divergent = true;
          pj["bilinear"] = {{"divergent", e.what()}};
          tx << "  bilinear constants divergent: " << e.what() << "\n";
        } catch (const Error& e) {
          pj["bilinear"] = {{"error", e.what()}};
        }
      }
      t.data["pairs"].push_back(pj);
    }
  if (have_f) {
    try {
      const ODIBound o = odi_bound(mix, rc.specs, *rc.distributions, rc.constants.p, rc.constants.k);
      t.data["odi"] = {{"A", o.A},
                       {"log10_B", jnum(o.log_B / std::log(10.0))},
                       {"F0_Lp_pow", o.F0_Lp_pow},
                       {"log10_bound_Lp", jnum(o.log_bound_Lp / std::log(10.0))},
                       {"linf_available", o.linf_available}};
      if (o.linf_available)
        t.data["odi"]["log10_bound_Linf"] = jnum(o.log_bound_Linf / std::log(10.0));
      else
        t.data["odi"]["linf_reason"] = o.linf_reason;
      tx << "A " << o.A << "  log10 B " << o.log_B / std::log(10.0) << "  log10 bound " << o.log_bound_Lp / std::log(10.0)
         << "\n";
    } catch (const DivergenceError& e) {
      t.any_divergent = true;
      t.data["odi"] = {{"divergent", e.what()}};
    } catch (const Error& e) {
      t.data["odi"] = {{"error", e.what()}};
    }
  }
  t.text = tx.str();
  return t;
}

} // namespace polymix

#endif // POLYMIX_CONSTANTS_HPP
