#ifndef POLYMIX_DISTRIBUTIONS_HPP
#define POLYMIX_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "polymix/collision.hpp"
#include "polymix/core.hpp"
#include "polymix/mc.hpp"
#include "polymix/mixture.hpp"
#include "polymix/quadrature.hpp"
#include "polymix/random.hpp"

namespace polymix {

struct Maxwellian {
  double density = 1.0;
  Vec3 bulk;
  double temperature = 1.0;
};

// Constant height on the 4-ball |v - c|^2 + (I - c_I)^2 <= radius^2.
struct Bump {
  Vec3 center_v;
  double center_I = 1.0;
  double radius = 1.0;
  double height = 1.0;
};

struct MixtureOfTwo {
  Maxwellian first;
  Maxwellian second;
  double w_first = 0.5;
  double w_second = 0.5;
};

inline double bump_measure(double radius) { return pi * pi * std::pow(radius, 4) / 2.0; }

class TestDistribution {
 public:
  using Form = std::variant<Maxwellian, Bump, MixtureOfTwo>;

  TestDistribution(std::size_t species, double m_i, double alpha, double m_total, Form form)
      : species_(species), m_i_(m_i), alpha_(alpha), m_(m_total), form_(std::move(form)) {
    if (!(m_i_ > 0.0) || !(alpha_ > -1.0) || !(m_ >= m_i_)) throw DomainError("distribution: bad species parameters");
    auto check_max = [](const Maxwellian& mx) {
      if (!(mx.temperature > 0.0) || !std::isfinite(mx.temperature))
        throw DomainError("maxwellian: temperature must be positive");
      if (!std::isfinite(mx.density)) throw DomainError("maxwellian: density must be finite");
    };
    if (auto* mx = std::get_if<Maxwellian>(&form_)) check_max(*mx);
    if (auto* b = std::get_if<Bump>(&form_)) {
      if (!(b->radius > 0.0)) throw DomainError("bump: radius must be positive");
      if (!(b->center_I >= b->radius)) throw DomainError("bump: support must lie in I >= 0 (center_I >= radius)");
    }
    if (auto* mt = std::get_if<MixtureOfTwo>(&form_)) {
      check_max(mt->first);
      check_max(mt->second);
    }
  }

  static TestDistribution maxwellian(const MixtureParams& mix, std::size_t i, double n, Vec3 u0, double T) {
    return {i, mix.species(i).mass, mix.species(i).alpha, mix.total_mass(), Maxwellian{n, u0, T}};
  }
  static TestDistribution bump(const MixtureParams& mix, std::size_t i, Vec3 c, double cI, double radius,
                               double height) {
    return {i, mix.species(i).mass, mix.species(i).alpha, mix.total_mass(), Bump{c, cI, radius, height}};
  }
  static TestDistribution mixture_of_two(const MixtureParams& mix, std::size_t i, Maxwellian a, Maxwellian b,
                                         double wa, double wb) {
    return {i, mix.species(i).mass, mix.species(i).alpha, mix.total_mass(), MixtureOfTwo{a, b, wa, wb}};
  }

  std::size_t species() const { return species_; }
  double m_i() const { return m_i_; }
  double alpha() const { return alpha_; }
  double m_total() const { return m_; }
  const Form& form() const { return form_; }

  TestDistribution scaled(double c) const {
    TestDistribution d = *this;
    if (auto* mx = std::get_if<Maxwellian>(&d.form_)) mx->density *= c;
    if (auto* b = std::get_if<Bump>(&d.form_)) b->height *= c;
    if (auto* mt = std::get_if<MixtureOfTwo>(&d.form_)) {
      mt->w_first *= c;
      mt->w_second *= c;
    }
    return d;
  }

  double bracket(const Vec3& v, double I) const { return std::sqrt(bracket_sq(m_i_, m_, v, I)); }

  double operator()(const Vec3& v, double I) const {
    if (I < 0.0) throw DomainError("distribution: negative internal energy");
    if (auto* mx = std::get_if<Maxwellian>(&form_)) return maxwellian_value(*mx, v, I);
    if (auto* b = std::get_if<Bump>(&form_)) {
      double r2 = norm2(v - b->center_v) + (I - b->center_I) * (I - b->center_I);
      return r2 <= b->radius * b->radius ? b->height : 0.0;
    }
    const auto& mt = std::get<MixtureOfTwo>(form_);
    return mt.w_first * maxwellian_value(mt.first, v, I) + mt.w_second * maxwellian_value(mt.second, v, I);
  }

  double mass() const {
    if (auto* mx = std::get_if<Maxwellian>(&form_)) return mx->density;
    if (auto* b = std::get_if<Bump>(&form_)) return b->height * bump_measure(b->radius);
    const auto& mt = std::get<MixtureOfTwo>(form_);
    return mt.w_first * mt.first.density + mt.w_second * mt.second.density;
  }

  bool nonnegative() const {
    if (auto* mx = std::get_if<Maxwellian>(&form_)) return mx->density >= 0.0;
    if (auto* b = std::get_if<Bump>(&form_)) return b->height >= 0.0;
    const auto& mt = std::get<MixtureOfTwo>(form_);
    return mt.w_first * mt.first.density >= 0.0 && mt.w_second * mt.second.density >= 0.0;
  }

  bool full_support() const { return !std::holds_alternative<Bump>(form_); }

  // largest temperature scale, used for histogram boxes and proposals
  double temperature_scale() const {
    if (auto* mx = std::get_if<Maxwellian>(&form_)) return mx->temperature;
    if (auto* b = std::get_if<Bump>(&form_)) return std::max(b->center_I + b->radius, 1e-300);
    const auto& mt = std::get<MixtureOfTwo>(form_);
    return std::max(mt.first.temperature, mt.second.temperature);
  }

  // draw from d / mass; requires positive mass
  ParticleState draw(Rng& rng) const {
    if (auto* mx = std::get_if<Maxwellian>(&form_)) return draw_maxwellian(*mx, rng);
    if (auto* b = std::get_if<Bump>(&form_)) {
      double g[4];
      double n2 = 0.0;
      do {
        n2 = 0.0;
        for (double& x : g) {
          x = rng.normal();
          n2 += x * x;
        }
      } while (!(n2 > 0.0));
      double s = b->radius * std::pow(rng.uniform(), 0.25) / std::sqrt(n2);
      ParticleState p;
      p.v = b->center_v + s * Vec3{g[0], g[1], g[2]};
      p.I = b->center_I + s * g[3];
      return p;
    }
    const auto& mt = std::get<MixtureOfTwo>(form_);
    double a = mt.w_first * mt.first.density, c = mt.w_second * mt.second.density;
    return rng.uniform() * (a + c) < a ? draw_maxwellian(mt.first, rng) : draw_maxwellian(mt.second, rng);
  }

 private:
  std::size_t species_;
  double m_i_, alpha_, m_;
  Form form_;

  double maxwellian_value(const Maxwellian& mx, const Vec3& v, double I) const {
    const double T = mx.temperature;
    double gauss = std::pow(m_i_ / (2.0 * pi * T), 1.5) * std::exp(-m_i_ * norm2(v - mx.bulk) / (2.0 * T));
    double gam;
    if (I == 0.0) gam = alpha_ == 0.0 ? 1.0 / T : (alpha_ < 0.0 ? inf_value() : 0.0);
    else gam = std::exp(alpha_ * std::log(I) - I / T - quad::lgamma(alpha_ + 1.0) - (alpha_ + 1.0) * std::log(T));
    return mx.density * gauss * gam;
  }

  static double inf_value() { return std::numeric_limits<double>::infinity(); }

  ParticleState draw_maxwellian(const Maxwellian& mx, Rng& rng) const {
    ParticleState p;
    p.v = mx.bulk + rng.gaussian3(std::sqrt(mx.temperature / m_i_));
    p.I = rng.gamma(alpha_ + 1.0, mx.temperature);
    return p;
  }
};

// ---------------------------------------------------------------------------
// Deterministic integration over (v, I) on the support of d, exploiting
// axial symmetry of every integrand built from d and the bracket.

namespace detail {

inline Vec3 axis_of(const Vec3& u) {
  double n = norm(u);
  return n > 0.0 ? (1.0 / n) * u : Vec3{0.0, 0.0, 1.0};
}

inline Vec3 perpendicular(const Vec3& a) {
  Vec3 t = std::abs(a.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  Vec3 p = t - dot(t, a) * a;
  return (1.0 / norm(p)) * p;
}

// 2 pi int_0^inf int_{-1}^{1} fn(center + s(mu a + sqrt(1-mu^2) e), I) s^2 dmu ds
// y^alpha e^{-y} below 1e-260 (either end): subnormal shell values stall the adaptive rules
inline bool negligible_energy(double alpha, double y) { return alpha * std::log(y) - y < -600.0; }

template <class F>
double velocity_shell(const Vec3& center, const Vec3& axis, double scale, bool mu_free, F&& fn, double I,
                      double smax = -1.0) {
  const Vec3 a = axis_of(axis);
  const Vec3 e = perpendicular(a);
  auto at = [&](double s, double mu) {
    double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    return fn(center + s * (mu * a + st * e), I);
  };
  auto over_mu = [&](double s) {
    if (mu_free) return 2.0 * at(s, 0.0) * s * s;
    return quad::gk([&](double mu) { return at(s, mu); }, -1.0, 1.0, 1e-11, 10) * s * s;
  };
  double val;
  if (smax >= 0.0) {
    if (smax == 0.0) return 0.0;
    val = quad::gk(over_mu, 0.0, smax, 1e-11, 12);
  } else {
    val = scale * quad::half_line([&](double t) { return over_mu(scale * t); }, 1e-11);
  }
  return 2.0 * pi * val;
}

} // namespace detail

template <class F>
double integrate_vI(const TestDistribution& d, F&& raw) {
  // values this small only feed the relative-error tests of the adaptive rules
  auto fn = [&](const Vec3& v, double I) {
    const double x = raw(v, I);
    return std::abs(x) < 1e-200 ? 0.0 : x;
  };
  if (auto* mx = std::get_if<Maxwellian>(&d.form())) {
    const double T = mx->temperature;
    const double vs = std::sqrt(T / d.m_i());
    const bool mu_free = norm(mx->bulk) == 0.0;
    const double al = d.alpha();
    return T * quad::half_line(
                   [&](double y) {
                     if (detail::negligible_energy(al, y)) return 0.0;
                     return detail::velocity_shell(mx->bulk, mx->bulk, vs, mu_free, fn, T * y);
                   },
                   1e-10);
  }
  if (auto* b = std::get_if<Bump>(&d.form())) {
    const double rho = b->radius;
    const bool mu_free = norm(b->center_v) == 0.0;
    auto slice = [&](double I) {
      double h2 = rho * rho - (I - b->center_I) * (I - b->center_I);
      return detail::velocity_shell(b->center_v, b->center_v, 1.0, mu_free, fn, I, std::sqrt(std::max(0.0, h2)));
    };
    return quad::tanh_sinh(slice, b->center_I - rho, b->center_I + rho, 1e-10);
  }
  const auto& mt = std::get<MixtureOfTwo>(d.form());
  const Vec3 u1 = mt.first.bulk, u2 = mt.second.bulk;
  if (norm(cross(u1, u2)) > 1e-14 * (1.0 + norm(u1) * norm(u2)))
    throw DomainError("mixture-of-two quadrature requires collinear bulk velocities");
  Vec3 axis = norm(u1) > 0.0 ? u1 : u2;
  const double T = std::max(mt.first.temperature, mt.second.temperature);
  const double vs = std::sqrt(T / d.m_i());
  // centered at the origin, symmetric about the common bulk axis
  const bool mu_free = norm(axis) == 0.0;
  const double al = d.alpha();
  return T * quad::half_line(
                 [&](double y) {
                   if (detail::negligible_energy(al, y)) return 0.0;
                   return detail::velocity_shell(Vec3{}, axis, vs, mu_free, fn, T * y);
                 },
                 1e-10);
}

// ---------------------------------------------------------------------------
// Oracle-quality norms (deterministic quadrature)

// || d <.>^k ||_{L1}
inline double norm_L1(const TestDistribution& d, double k) {
  if (d.mass() == 0.0) return 0.0;
  return integrate_vI(d, [&](const Vec3& v, double I) {
    double f = std::abs(d(v, I));
    return f == 0.0 ? 0.0 : f * std::pow(bracket_sq(d.m_i(), d.m_total(), v, I), k / 2.0);
  });
}

// || d ||_{L^p_k} = ( int (|d| <.>^k)^p )^{1/p}
inline double norm_Lp(const TestDistribution& d, double p, double k) {
  if (!(p >= 1.0) || std::isinf(p)) throw DomainError("norm_Lp: p must be finite and >= 1");
  if (d.mass() == 0.0) return 0.0;
  if (auto* b = std::get_if<Bump>(&d.form()); b && k == 0.0)
    return std::abs(b->height) * std::pow(bump_measure(b->radius), 1.0 / p);
  double v = integrate_vI(d, [&](const Vec3& vv, double I) {
    double f = std::abs(d(vv, I));
    return f == 0.0 ? 0.0 : std::pow(f * std::pow(bracket_sq(d.m_i(), d.m_total(), vv, I), k / 2.0), p);
  });
  return std::pow(v, 1.0 / p);
}

inline double norm_Lp_pow(const TestDistribution& d, double p, double k) { return std::pow(norm_Lp(d, p, k), p); }

// int d |log d|
inline double entropy_abs(const TestDistribution& d) {
  if (auto* b = std::get_if<Bump>(&d.form())) return d.mass() * std::abs(std::log(std::abs(b->height)));
  if (d.mass() == 0.0) return 0.0;
  return integrate_vI(d, [&](const Vec3& v, double I) {
    double f = d(v, I);
    return f > 0.0 ? f * std::abs(std::log(f)) : 0.0;
  });
}

// int d log d
inline double entropy_signed(const TestDistribution& d) {
  if (auto* b = std::get_if<Bump>(&d.form())) return d.mass() * std::log(b->height);
  if (d.mass() == 0.0) return 0.0;
  return integrate_vI(d, [&](const Vec3& v, double I) {
    double f = d(v, I);
    return f > 0.0 ? f * std::log(f) : 0.0;
  });
}

// closed-form moment of order 2 for a Maxwellian
inline double maxwellian_moment2(const TestDistribution& d) {
  const auto& mx = std::get<Maxwellian>(d.form());
  const double T = mx.temperature, m = d.m_total(), mi = d.m_i();
  return mx.density * (1.0 + (mi * norm2(mx.bulk) + 3.0 * T) / (2.0 * m) + (d.alpha() + 1.0) * T / m);
}

// || <.>^{-6} ||_{L1} as displayed in the source (constant of the bilinear estimates)
inline double hat_c(double m, double m_j) { return pi * pi / 2.0 * std::pow(m, 2.5) / std::pow(m_j, 1.5); }

// the same integral evaluated exactly: int (1 + m_j|v|^2/2m + I/m)^{-3} dv dI
inline double bracket_inv6_exact(double m, double m_j) {
  return std::sqrt(2.0) * pi * pi * std::pow(m, 2.5) / std::pow(m_j, 1.5);
}

// ---------------------------------------------------------------------------
// Monte Carlo estimates by sampling from the distribution itself

inline MCEstimate weighted_L1(const TestDistribution& d, double k, std::uint64_t n, std::uint64_t seed) {
  if (!(k >= 0.0)) throw DomainError("weighted_L1: k must be >= 0");
  const double M = d.mass();
  if (M == 0.0) return exact_estimate(0.0);
  if (!(M > 0.0)) throw DomainError("weighted_L1: negative distribution");
  return mc_mean(n, seed, fnv1a("weighted_L1"), [&](Rng& rng) {
    ParticleState p = d.draw(rng);
    return M * std::pow(bracket_sq(d.m_i(), d.m_total(), p.v, p.I), k / 2.0);
  });
}

inline MCEstimate weighted_Lp(const TestDistribution& d, double p, double k, std::uint64_t n = 1u << 20,
                              std::uint64_t seed = 1) {
  if (!(k >= 0.0)) throw DomainError("weighted_Lp: k must be >= 0");
  if (auto* mt = std::get_if<MixtureOfTwo>(&d.form())) {
    if (norm(cross(mt->first.bulk, mt->second.bulk)) > 0.0) {
      // non-collinear bulks: importance sampling from d, delta method for the root
      const double M = d.mass();
      MCEstimate s = mc_mean(n, seed, fnv1a("weighted_Lp"), [&](Rng& rng) {
        ParticleState x = d.draw(rng);
        double f = d(x.v, x.I);
        return M * std::pow(f, p - 1.0) * std::pow(bracket_sq(d.m_i(), d.m_total(), x.v, x.I), k * p / 2.0);
      });
      MCEstimate out = s;
      out.value = std::pow(s.value, 1.0 / p);
      out.std_error = out.value / (p * s.value) * s.std_error;
      return out;
    }
  }
  return exact_estimate(norm_Lp(d, p, k));
}

inline MCEstimate entropy_H(const TestDistribution& d, std::uint64_t n, std::uint64_t seed) {
  const double M = d.mass();
  if (M == 0.0) return exact_estimate(0.0);
  if (!(M > 0.0)) throw DomainError("entropy_H: negative distribution");
  return mc_mean(n, seed, fnv1a("entropy_H"), [&](Rng& rng) {
    ParticleState x = d.draw(rng);
    double f = d(x.v, x.I);
    return f > 0.0 ? M * std::abs(std::log(f)) : 0.0;
  });
}

struct EntropyBudget {
  double signed_entropy = 0.0; // sum_i int f_i log f_i
  double moment2 = 0.0;        // || F ||_{L1_2}
  double hat_c_max = 0.0;
  double budget = 0.0;
};

inline EntropyBudget entropy_budget(const std::vector<TestDistribution>& F) {
  if (F.empty()) throw DomainError("entropy_budget: empty family");
  EntropyBudget b;
  for (const auto& f : F) {
    b.signed_entropy += entropy_signed(f);
    b.moment2 += norm_L1(f, 2.0);
    b.hat_c_max = std::max(b.hat_c_max, hat_c(f.m_total(), f.m_i()));
  }
  const double P = static_cast<double>(F.size());
  b.budget = b.signed_entropy + 2.0 * std::pow(P, 0.25) * std::pow(b.hat_c_max, 0.25) * std::pow(b.moment2, 0.75);
  return b;
}

// ---------------------------------------------------------------------------
// Particle ensembles and histograms

struct ParticleEnsemble {
  std::size_t species = 0;
  std::vector<ParticleState> particles;
  double weight = 1.0;

  double mass() const { return weight * static_cast<double>(particles.size()); }
};

inline ParticleEnsemble sample(const TestDistribution& d, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample: n must be positive");
  const double M = d.mass();
  if (!(M > 0.0)) throw DomainError("sample: distribution must have positive mass");
  ParticleEnsemble e;
  e.species = d.species();
  e.weight = M / static_cast<double>(n);
  e.particles.resize(n);
  const std::uint64_t nblocks = (n + mc_block_size - 1) / mc_block_size;
  for_blocks(nblocks, [&](std::uint64_t b) {
    Rng rng(derive_seed(seed, fnv1a("sample") + d.species(), b));
    const std::size_t lo = b * mc_block_size, hi = std::min<std::size_t>(n, lo + mc_block_size);
    for (std::size_t k = lo; k < hi; ++k) e.particles[k] = d.draw(rng);
  });
  return e;
}

struct HistogramGrid {
  double L = 6.0;    // velocity box [-L, L]^3
  int nv = 16;       // bins per velocity axis
  double I_max = 30; // energy range [0, I_max]
  int nI = 16;
  double clip_tolerance = 1e-6;

  double bin_volume() const {
    double h = 2.0 * L / nv;
    return h * h * h * (I_max / nI);
  }
  std::size_t size() const { return static_cast<std::size_t>(nv) * nv * nv * nI; }
};

inline HistogramGrid default_grid(double T_max, double m_min, int nv = 16, int nI = 16) {
  HistogramGrid g;
  g.L = 6.0 * std::sqrt(T_max / m_min);
  g.I_max = 30.0 * T_max;
  g.nv = nv;
  g.nI = nI;
  return g;
}

struct HistogramDensity {
  HistogramGrid grid;
  std::vector<double> mass; // per-bin weight
  double total = 0.0;
  double clipped = 0.0;

  Vec3 center_v(std::size_t idx) const {
    const int nv = grid.nv, nI = grid.nI;
    std::size_t r = idx / nI;
    int iz = static_cast<int>(r % nv);
    r /= nv;
    int iy = static_cast<int>(r % nv);
    int ix = static_cast<int>(r / nv);
    double h = 2.0 * grid.L / nv;
    return {-grid.L + (ix + 0.5) * h, -grid.L + (iy + 0.5) * h, -grid.L + (iz + 0.5) * h};
  }
  double center_I(std::size_t idx) const {
    int iI = static_cast<int>(idx % grid.nI);
    return (iI + 0.5) * grid.I_max / grid.nI;
  }
};

inline HistogramDensity histogram(const ParticleEnsemble& e, const HistogramGrid& g) {
  if (g.nv <= 0 || g.nI <= 0 || !(g.L > 0.0) || !(g.I_max > 0.0)) throw DomainError("histogram: empty grid");
  HistogramDensity h;
  h.grid = g;
  h.mass.assign(g.size(), 0.0);
  const double hv = 2.0 * g.L / g.nv, hI = g.I_max / g.nI;
  std::size_t clipped = 0;
  for (const auto& p : e.particles) {
    int ix = static_cast<int>(std::floor((p.v.x + g.L) / hv));
    int iy = static_cast<int>(std::floor((p.v.y + g.L) / hv));
    int iz = static_cast<int>(std::floor((p.v.z + g.L) / hv));
    int iI = static_cast<int>(std::floor(p.I / hI));
    if (ix < 0 || iy < 0 || iz < 0 || iI < 0 || ix >= g.nv || iy >= g.nv || iz >= g.nv || iI >= g.nI) {
      ++clipped;
      continue;
    }
    std::size_t idx = ((static_cast<std::size_t>(ix) * g.nv + iy) * g.nv + iz) * g.nI + iI;
    h.mass[idx] += e.weight;
  }
  h.clipped = e.weight * static_cast<double>(clipped);
  h.total = e.weight * static_cast<double>(e.particles.size() - clipped);
  if (h.clipped > g.clip_tolerance * (h.total + h.clipped))
    throw DomainError("histogram: clipped mass " + std::to_string(h.clipped) + " exceeds tolerance; enlarge the box");
  return h;
}

// || . ||_{L^p_k} of the step function, bracket evaluated at bin centers
inline double histogram_Lp(const HistogramDensity& h, double m_i, double m, double p, double k) {
  if (!(p >= 1.0)) throw DomainError("histogram_Lp: p must be >= 1");
  const double vol = h.grid.bin_volume();
  double s = 0.0;
  for (std::size_t idx = 0; idx < h.mass.size(); ++idx) {
    if (h.mass[idx] == 0.0) continue;
    double f = h.mass[idx] / vol;
    double w = k == 0.0 ? 1.0 : std::pow(bracket_sq(m_i, m, h.center_v(idx), h.center_I(idx)), k / 2.0);
    s += std::pow(f * w, p) * vol;
  }
  return std::pow(s, 1.0 / p);
}

inline double histogram_Lp(const ParticleEnsemble& e, const HistogramGrid& g, double m_i, double m, double p,
                           double k) {
  return histogram_Lp(histogram(e, g), m_i, m, p, k);
}

// int f log f of the step function
inline double histogram_entropy(const HistogramDensity& h) {
  const double vol = h.grid.bin_volume();
  double s = 0.0;
  for (double w : h.mass)
    if (w > 0.0) s += w * std::log(w / vol);
  return s;
}

} // namespace polymix

#endif // POLYMIX_DISTRIBUTIONS_HPP
