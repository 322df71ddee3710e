#ifndef POLYMIX_DSMC_HPP
#define POLYMIX_DSMC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "polymix/collision.hpp"
#include "polymix/distributions.hpp"
#include "polymix/kernel.hpp"
#include "polymix/validation.hpp"
#include "polymix/verifier.hpp"

namespace polymix {

struct SolverConfig {
  double dt = 0.005;
  std::uint64_t n_steps = 1000;
  std::vector<std::size_t> particles{10000}; // one entry per species, or a single shared count
  double majorant_inflation = 1.2;
  double max_collision_probability = 0.5;
  double max_overflow_fraction = 1e-2; // of candidate pairs
  std::uint64_t seed = 1;
  std::uint64_t cadence = 10;
  HistogramGrid grid;
  bool auto_grid = true;
  double p = 2.0, k = 0.0;           // tracked histogram L^p_k norm
  std::vector<double> moment_orders{0.0, 2.0};
  double burn_in_fraction = 0.05;
  double bias_budget = 0.1;          // relative allowance on histogram norms

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("solver: dt must be positive");
    if (n_steps == 0) throw ConfigError("solver: n_steps must be positive");
    if (particles.empty()) throw ConfigError("solver: particles must be given");
    for (auto n : particles)
      if (n < 2) throw ConfigError("solver: at least two particles per species");
    if (!(majorant_inflation > 1.0)) throw ConfigError("solver: majorant_inflation must exceed 1");
    if (!(max_collision_probability > 0.0 && max_collision_probability <= 1.0))
      throw ConfigError("solver: max_collision_probability must lie in (0,1]");
    if (cadence == 0) throw ConfigError("solver: cadence must be positive");
    if (!(p >= 1.0) || std::isinf(p)) throw ConfigError("solver: p must be finite and >= 1");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) throw ConfigError("solver: burn_in_fraction must lie in [0,1)");
  }
};

struct SpeciesDiagnostics {
  double mass = 0.0;
  Vec3 momentum;
  double energy = 0.0;      // kinetic + internal
  double temperature = 0.0;
  std::vector<double> moments;    // L^1_k for each moment order
  std::vector<double> moment_se;  // sampling standard error of each moment
  double entropy = 0.0;
  double entropy_se = 0.0;
  double lp_norm = 0.0;           // histogram L^p_k
};

struct DiagnosticsRow {
  std::uint64_t step = 0;
  double time = 0.0;
  std::vector<SpeciesDiagnostics> species;
  Vec3 momentum;
  double momentum_scale = 0.0; // sum of m |v| w, for relative drift
  double energy = 0.0;
  double entropy = 0.0;
  double entropy_se = 0.0;
  double lp_pow = 0.0;         // sum_i ||f_i||^p
  double common_temperature = 0.0;
  std::uint64_t collisions = 0;
  std::uint64_t overflows = 0;
};

struct SimulationState {
  std::vector<ParticleEnsemble> ensembles;
  double time = 0.0;
  std::uint64_t step = 0;
  std::vector<std::vector<std::uint64_t>> collisions; // per unordered pair, stored at [min][max]
  std::vector<std::vector<std::uint64_t>> candidates;
  std::vector<std::vector<double>> inflation;
  std::uint64_t overflows = 0;
  std::uint64_t total_candidates = 0;
};

namespace detail {

// sigma with density proportional to b(u_hat . sigma) by rejection; needs bounded b
inline Vec3 draw_sigma(const AngularKernel& b, const Vec3& u_hat, Rng& rng) {
  const double top = b.linf();
  if (!std::isfinite(top) || !(top > 0.0)) throw SolverError("particle solver needs a bounded, nonzero angular kernel");
  for (int tries = 0; tries < 1000000; ++tries) {
    const Vec3 s = rng.sphere();
    const double x = norm2(u_hat) == 0.0 ? s.z : dot(u_hat, s);
    if (rng.uniform() * top <= b(x)) return s;
  }
  throw SolverError("angular rejection sampling did not terminate");
}

inline double max_bracket_sq(const ParticleEnsemble& e, double m_i, double m) {
  double mx = 1.0;
  for (const auto& p : e.particles) mx = std::max(mx, bracket_sq(m_i, m, p.v, p.I));
  return mx;
}

} // namespace detail

// C_ij = ||b||_1 * int int b~ d_ij dr dR with the model b~ = 1
inline double collision_constant(const KernelSpec& s) {
  return s.angular.l1() * d_normalizer(s.alpha_i(), s.alpha_j());
}

inline SimulationState initial_state(const MixtureParams& mix, const std::vector<TestDistribution>& F0,
                                     const SolverConfig& cfg) {
  cfg.validate();
  const ValidationReport v = validate_initial_data(mix, F0);
  if (!v.admissible) {
    std::string msg = "initial data not admissible:";
    for (const auto& f : v.failures) msg += " " + f + ";";
    throw DomainError(msg);
  }
  const std::size_t P = mix.size();
  if (cfg.particles.size() != 1 && cfg.particles.size() != P)
    throw ConfigError("solver: particles must list one count per species or a single count");
  // equal particle weights keep inter-species collisions conservative
  double w = 0.0;
  for (std::size_t i = 0; i < P; ++i) {
    const double n = static_cast<double>(cfg.particles.size() == 1 ? cfg.particles[0] : cfg.particles[i]);
    w = std::max(w, F0[i].mass() / n);
  }
  SimulationState st;
  for (std::size_t i = 0; i < P; ++i) {
    const auto n = static_cast<std::size_t>(std::max(2.0, std::round(F0[i].mass() / w)));
    ParticleEnsemble e = sample(F0[i], n, derive_seed(cfg.seed, fnv1a("dsmc_init"), i));
    e.weight = w;
    st.ensembles.push_back(std::move(e));
  }
  st.collisions.assign(P, std::vector<std::uint64_t>(P, 0));
  st.candidates.assign(P, std::vector<std::uint64_t>(P, 0));
  st.inflation.assign(P, std::vector<double>(P, 1.0));
  return st;
}

// One NTC step. specs[i][j] is the kernel of the ordered pair (i, j); each
// unordered pair is processed once with specs[i][j], i <= j.
inline void step(SimulationState& st, const MixtureParams& mix, const std::vector<std::vector<KernelSpec>>& specs,
                 const SolverConfig& cfg) {
  const std::size_t P = st.ensembles.size();
  const double m = mix.total_mass();
  std::vector<double> bmax(P);
  for (std::size_t i = 0; i < P; ++i) bmax[i] = detail::max_bracket_sq(st.ensembles[i], mix.species(i).mass, m);

  // majorant rates and the per-particle collision probability guard
  std::vector<std::vector<double>> kmax(P, std::vector<double>(P, 0.0));
  double worst_prob = 0.0;
  for (std::size_t i = 0; i < P; ++i) {
    double rate = 0.0;
    for (std::size_t j = 0; j < P; ++j) {
      const std::size_t a = std::min(i, j), b = std::max(i, j);
      const KernelSpec& s = specs[a][b];
      kmax[i][j] = collision_constant(s) * std::pow(bmax[a] * bmax[b], s.pair.gamma / 2.0) * st.inflation[a][b];
      rate += st.ensembles[j].mass() * kmax[i][j];
    }
    worst_prob = std::max(worst_prob, rate * cfg.dt);
  }
  if (worst_prob > cfg.max_collision_probability) {
    std::ostringstream os;
    os << "majorant collision probability per particle " << worst_prob << " exceeds "
       << cfg.max_collision_probability << "; reduce dt to at most "
       << cfg.dt * cfg.max_collision_probability / worst_prob;
    throw SolverError(os.str());
  }

  Rng rng(derive_seed(cfg.seed, fnv1a("dsmc_step"), st.step));
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = i; j < P; ++j) {
      const KernelSpec& s = specs[i][j];
      if (kmax[i][j] == 0.0) continue;
      auto& A = st.ensembles[i].particles;
      auto& B = st.ensembles[j].particles;
      const double w = st.ensembles[j].weight;
      const double na = static_cast<double>(A.size()), nb = static_cast<double>(B.size());
      const double pairs = i == j ? 0.5 * na * (na - 1.0) : na * nb;
      const double expected = pairs * w * kmax[i][j] * cfg.dt;
      auto n_cand = static_cast<std::uint64_t>(std::floor(expected));
      if (rng.uniform() < expected - std::floor(expected)) ++n_cand;
      const double C = collision_constant(s);
      bool inflated = false;
      for (std::uint64_t c = 0; c < n_cand; ++c) {
        const std::size_t ia = rng.below(A.size());
        std::size_t ib = rng.below(B.size());
        if (i == j) {
          ib = rng.below(A.size() - 1);
          if (ib >= ia) ++ib;
        }
        ParticleState& x = A[ia];
        ParticleState& y = B[ib];
        const CollisionGeometry geo = geometry(s.pair, x, y);
        if (!(geo.E > 0.0)) continue;
        const double ratio = C * velocity_energy_factor(s.pair, geo.E) / kmax[i][j];
        if (ratio > 1.0) {
          ++st.overflows;
          if (!inflated) {
            st.inflation[i][j] *= cfg.majorant_inflation;
            inflated = true;
          }
        } else if (rng.uniform() >= ratio) {
          continue;
        }
        CollisionConfiguration cc;
        cc.a = x;
        cc.b = y;
        const double un = norm(geo.u);
        cc.sigma = detail::draw_sigma(s.angular, un > 0.0 ? (1.0 / un) * geo.u : Vec3{}, rng);
        cc.r = rng.beta(s.alpha_i() + 1.0, s.alpha_j() + 1.0);
        cc.R = rng.beta(1.5, s.alpha_i() + s.alpha_j() + 2.0);
        const CollisionImage img = transform(s.pair, cc);
        x = img.a;
        y = img.b;
        ++st.collisions[i][j];
      }
      st.candidates[i][j] += n_cand;
      st.total_candidates += n_cand;
    }
  if (st.total_candidates > 1000 &&
      static_cast<double>(st.overflows) > cfg.max_overflow_fraction * static_cast<double>(st.total_candidates)) {
    std::ostringstream os;
    os << "majorant overflow in " << st.overflows << " of " << st.total_candidates
       << " candidate pairs; reduce dt (suggested dt " << cfg.dt / 2.0 << ")";
    throw SolverError(os.str());
  }
  st.time += cfg.dt;
  ++st.step;
}

inline DiagnosticsRow diagnose(const SimulationState& st, const MixtureParams& mix, const SolverConfig& cfg,
                               const HistogramGrid& grid) {
  DiagnosticsRow row;
  row.step = st.step;
  row.time = st.time;
  const double m = mix.total_mass();
  const std::size_t P = st.ensembles.size();
  double total_mass = 0.0;
  for (std::size_t i = 0; i < P; ++i) {
    const auto& e = st.ensembles[i];
    const double mi = mix.species(i).mass;
    for (const auto& p : e.particles) row.momentum += (e.weight * mi) * p.v;
    total_mass += mi * e.mass();
  }
  const Vec3 u = (1.0 / total_mass) * row.momentum;
  double thermal = 0.0, dof = 0.0;
  for (std::size_t i = 0; i < P; ++i) {
    const auto& e = st.ensembles[i];
    const double mi = mix.species(i).mass, al = mix.species(i).alpha, w = e.weight;
    const double n = static_cast<double>(e.particles.size());
    SpeciesDiagnostics d;
    d.mass = e.mass();
    double th = 0.0, log_I = 0.0;
    std::vector<double> s1(cfg.moment_orders.size(), 0.0), s2(cfg.moment_orders.size(), 0.0);
    for (const auto& p : e.particles) {
      d.momentum += (w * mi) * p.v;
      d.energy += w * (0.5 * mi * norm2(p.v) + p.I);
      row.momentum_scale += w * mi * norm(p.v);
      th += 0.5 * mi * norm2(p.v - u) + p.I;
      if (al != 0.0) log_I += std::log(p.I);
      const double b2 = bracket_sq(mi, m, p.v, p.I);
      for (std::size_t q = 0; q < cfg.moment_orders.size(); ++q) {
        const double x = std::pow(b2, cfg.moment_orders[q] / 2.0);
        s1[q] += x;
        s2[q] += x * x;
      }
    }
    d.temperature = th / (n * (2.5 + al));
    thermal += w * th;
    dof += w * n * (2.5 + al);
    for (std::size_t q = 0; q < s1.size(); ++q) {
      d.moments.push_back(w * s1[q]);
      const double mean = s1[q] / n, var = std::max(0.0, s2[q] / n - mean * mean);
      d.moment_se.push_back(w * std::sqrt(var * n));
    }
    const HistogramDensity h = histogram(e, grid);
    // entropy relative to the I^alpha reference measure
    d.entropy = histogram_entropy(h) - al * w * log_I;
    {
      const double vol = grid.bin_volume();
      double a1 = 0.0, a2 = 0.0;
      for (double x : h.mass)
        if (x > 0.0) {
          const double l = std::log(x / vol), pb = x / h.total;
          a1 += pb * l;
          a2 += pb * l * l;
        }
      d.entropy_se = h.total * std::sqrt(std::max(0.0, a2 - a1 * a1) / n);
    }
    d.lp_norm = histogram_Lp(h, mi, m, cfg.p, cfg.k);
    row.energy += d.energy;
    row.entropy += d.entropy;
    row.entropy_se = std::hypot(row.entropy_se, d.entropy_se);
    row.lp_pow += std::pow(d.lp_norm, cfg.p);
    row.species.push_back(std::move(d));
  }
  row.common_temperature = thermal / dof;
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = i; j < P; ++j) row.collisions += st.collisions[i][j];
  row.overflows = st.overflows;
  return row;
}

inline HistogramGrid solver_grid(const MixtureParams& mix, const std::vector<TestDistribution>& F0,
                                 const SolverConfig& cfg) {
  if (!cfg.auto_grid) return cfg.grid;
  double T = 0.0, m_min = inf;
  for (std::size_t i = 0; i < F0.size(); ++i) {
    T = std::max(T, F0[i].temperature_scale());
    m_min = std::min(m_min, mix.species(i).mass);
  }
  HistogramGrid g = default_grid(T, m_min, cfg.grid.nv, cfg.grid.nI);
  g.clip_tolerance = cfg.grid.clip_tolerance;
  return g;
}

struct RunResult {
  std::vector<DiagnosticsRow> rows;
  SimulationState final_state;
  HistogramGrid grid;
};

inline RunResult run(const MixtureParams& mix, const std::vector<std::vector<KernelSpec>>& specs,
                     const std::vector<TestDistribution>& F0, const SolverConfig& cfg) {
  const std::size_t P = mix.size();
  if (specs.size() != P) throw ConfigError("solver: one kernel row per species");
  for (const auto& row : specs)
    if (row.size() != P) throw ConfigError("solver: one kernel per species pair");
  RunResult out;
  out.grid = solver_grid(mix, F0, cfg);
  SimulationState st = initial_state(mix, F0, cfg);
  out.rows.push_back(diagnose(st, mix, cfg, out.grid));
  for (std::uint64_t n = 0; n < cfg.n_steps; ++n) {
    step(st, mix, specs, cfg);
    if (st.step % cfg.cadence == 0 || st.step == cfg.n_steps) out.rows.push_back(diagnose(st, mix, cfg, out.grid));
  }
  out.final_state = std::move(st);
  return out;
}

// ---------------------------------------------------------------------------
// Series checks

// largest relative drift of total momentum and energy against the first row
inline double conservation_drift(const std::vector<DiagnosticsRow>& rows) {
  if (rows.empty()) return 0.0;
  const auto& r0 = rows.front();
  double worst = 0.0;
  for (const auto& r : rows) {
    worst = std::max(worst, norm(r.momentum - r0.momentum) / std::max(r0.momentum_scale, 1e-300));
    worst = std::max(worst, std::abs(r.energy - r0.energy) / std::abs(r0.energy));
  }
  return worst;
}

// largest rise of the entropy above its running minimum after burn-in,
// in units of the combined noise 3 sqrt(2) se
inline double entropy_rise(const std::vector<DiagnosticsRow>& rows, double burn_in_fraction, double* band = nullptr) {
  if (rows.empty()) return 0.0;
  const double t_end = rows.back().time;
  double running = inf, rise = -inf, se = 0.0;
  for (const auto& r : rows) {
    if (r.time < burn_in_fraction * t_end) continue;
    se = std::max(se, r.entropy_se);
    running = std::min(running, r.entropy);
    rise = std::max(rise, r.entropy - running);
  }
  const double b = 3.0 * std::sqrt(2.0) * se;
  if (band) *band = b;
  return b > 0.0 ? rise / b : (rise > 0.0 ? inf : 0.0);
}

inline double temperature_spread(const DiagnosticsRow& r) {
  double worst = 0.0;
  for (const auto& s : r.species)
    worst = std::max(worst, std::abs(s.temperature - r.common_temperature) / r.common_temperature);
  return worst;
}

// max over time of the histogram (sum_i ||f_i||^p)^{1/p} against
// max{ ||F_0||, (B/A)^{1/p} } plus the relative bias budget
inline VerificationReport check_propagation(const std::vector<DiagnosticsRow>& rows, const ODIBound& odi, double p,
                                            double k, double bias_budget = 0.1) {
  VerificationReport rep;
  rep.name = "propagation";
  rep.label = "p=" + detail::fmt(p) + " k=" + detail::fmt(k);
  if (rows.empty()) {
    rep.error = "empty diagnostics";
    rep.finalize();
    return rep;
  }
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::pow(r.lp_pow, 1.0 / p));
  const double initial = std::max(std::pow(odi.F0_Lp_pow, 1.0 / p), std::pow(rows.front().lp_pow, 1.0 / p));
  const double log_bound = std::max(std::log(initial), odi.log_bound_Lp / p);
  rep.lhs = exact_estimate(worst);
  rep.rhs = exact_estimate(std::exp(log_bound) + bias_budget * initial);
  rep.rhs_log10 = log_bound / std::log(10.0);
  rep.notes = "initial " + detail::fmt(initial) + ", log10 (B/A)^(1/p) " +
              detail::fmt((odi.log_B - std::log(odi.A)) / p / std::log(10.0)) + ", bias budget " +
              detail::fmt(bias_budget);
  rep.finalize();
  return rep;
}

} // namespace polymix

#endif // POLYMIX_DSMC_HPP
