#ifndef POLYMIX_OPERATORS_HPP
#define POLYMIX_OPERATORS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

#include "polymix/collision.hpp"
#include "polymix/distributions.hpp"
#include "polymix/kernel.hpp"
#include "polymix/mc.hpp"
#include "polymix/random.hpp"

namespace polymix {

using TestFn = std::function<double(const Vec3&, double)>;

enum class Scheme { from_distribution, uniform_box, beta_exchange };

struct SamplerConfig {
  std::uint64_t n_samples = 100000;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::from_distribution;
  // beta_exchange: exponents of the (r, R) reference density
  double exchange_alpha_i = 0.0;
  double exchange_alpha_j = 0.0;
  // uniform_box: [-box_v, box_v]^3 x [0, box_I]
  double box_v = 6.0;
  double box_I = 30.0;
  KernelPart kernel = KernelPart::model;

  void validate() const {
    if (n_samples < 1) throw DomainError("sampler: n_samples must be >= 1");
    if (scheme == Scheme::beta_exchange && (!(exchange_alpha_i > -1.0) || !(exchange_alpha_j > -1.0)))
      throw DomainError("sampler: beta_exchange exponents must exceed -1");
    if (!(box_v > 0.0) || !(box_I > 0.0)) throw DomainError("sampler: box must have positive size");
  }
};

enum class Part { gain, loss, full };
enum class Sign { plus, minus };

// ---------------------------------------------------------------------------
// (sigma, r, R) draws. `weight` is d_ij(r,R) divided by the density of (r,R).

struct ExchangeDraw {
  double r, R, weight;
};

class ExchangeSampler {
 public:
  ExchangeSampler(double alpha_i, double alpha_j, const SamplerConfig& cfg, double r_shift = 0.0)
      : ai_(alpha_i), aj_(alpha_j), shift_(r_shift), uniform_(cfg.scheme == Scheme::uniform_box) {
    if (uniform_) return;
    ri_ = cfg.scheme == Scheme::beta_exchange ? cfg.exchange_alpha_i : alpha_i;
    rj_ = cfg.scheme == Scheme::beta_exchange ? cfg.exchange_alpha_j : alpha_j;
    ri_ += r_shift;
    if (!(ri_ > -1.0)) throw DivergenceError("exchange sampler: r exponent <= -1");
    norm_ = quad::beta_fn(ri_ + 1.0, rj_ + 1.0) * quad::beta_fn(1.5, ri_ + rj_ - r_shift + 2.0);
  }

  // the target is r^shift * d_ij(r, R)
  ExchangeDraw draw(Rng& rng) const {
    if (uniform_) {
      double r = rng.uniform_open(), R = rng.uniform_open();
      double w = d_weight(ai_, aj_, r, R);
      if (shift_ != 0.0) w *= std::pow(r, shift_);
      return {r, R, w};
    }
    double x = rng.gamma(ri_ + 1.0, 1.0), y = rng.gamma(rj_ + 1.0, 1.0);
    double r = x / (x + y), rc = y / (x + y);
    double R = rng.beta(1.5, ri_ + rj_ - shift_ + 2.0);
    double w = norm_;
    const double ei = ai_ + shift_ - ri_, ej = aj_ - rj_;
    if (ei != 0.0) w *= std::pow(r, ei);
    if (ej != 0.0) w *= std::pow(rc, ej);
    if (ei + ej != 0.0) w *= std::pow(1.0 - R, ei + ej);
    return {r, R, w};
  }

 private:
  double ai_, aj_, shift_;
  bool uniform_;
  double ri_ = 0.0, rj_ = 0.0, norm_ = 1.0;
};

// Proposal over (v, I) for integrals weighted by a target density.
// ratio(x) = target(x) / proposal density(x).
class StateProposal {
 public:
  static StateProposal of(const TestDistribution& d, const SamplerConfig& cfg, bool defensive) {
    StateProposal p(d);
    if (cfg.scheme == Scheme::uniform_box) {
      p.box_ = true;
      p.box_v_ = cfg.box_v;
      p.box_I_ = cfg.box_I;
      return p;
    }
    if (defensive || !d.full_support()) p.add_wide();
    return p;
  }

  ParticleState draw(Rng& rng) const {
    if (box_) {
      ParticleState s;
      s.v = {box_v_ * (2.0 * rng.uniform() - 1.0), box_v_ * (2.0 * rng.uniform() - 1.0),
             box_v_ * (2.0 * rng.uniform() - 1.0)};
      s.I = box_I_ * rng.uniform();
      return s;
    }
    if (wide_ && rng.uniform() >= w_main_) return wide_->draw(rng);
    return target_.draw(rng);
  }

  double density(const ParticleState& s) const {
    if (box_) {
      if (std::abs(s.v.x) > box_v_ || std::abs(s.v.y) > box_v_ || std::abs(s.v.z) > box_v_ || s.I > box_I_ || s.I < 0.0)
        return 0.0;
      return 1.0 / (8.0 * box_v_ * box_v_ * box_v_ * box_I_);
    }
    double dens = w_main_ * std::abs(target_(s.v, s.I)) / std::abs(mass_);
    if (wide_) dens += (1.0 - w_main_) * (*wide_)(s.v, s.I);
    return dens;
  }

  double ratio(const ParticleState& s) const {
    if (!box_ && !wide_) return mass_;
    const double dens = density(s);
    return dens > 0.0 ? target_(s.v, s.I) / dens : 0.0;
  }

  double mass() const { return mass_; }

 private:
  explicit StateProposal(const TestDistribution& d) : target_(d), mass_(d.mass()) {}

  void add_wide() {
    Vec3 c;
    if (auto* b = std::get_if<Bump>(&target_.form())) c = b->center_v;
    if (auto* mx = std::get_if<Maxwellian>(&target_.form())) c = mx->bulk;
    const double T = 2.0 * target_.temperature_scale();
    wide_.emplace(target_.species(), target_.m_i(), 0.0, target_.m_total(), Maxwellian{1.0, c, T});
    w_main_ = 0.5;
  }

  TestDistribution target_;
  double mass_;
  std::optional<TestDistribution> wide_;
  double w_main_ = 1.0;
  bool box_ = false;
  double box_v_ = 0.0, box_I_ = 0.0;
};

namespace detail {

inline double exchange_factor(const KernelSpec& spec, KernelPart part, double r, double R) {
  if (part == KernelPart::upper) return spec.upper(r, R);
  if (part == KernelPart::lower) return spec.lower(r, R);
  return 1.0;
}

// (I/I')^alpha with the conventions 0^0 = 1
inline double energy_ratio(double I, double Ip, double alpha) {
  if (alpha == 0.0) return 1.0;
  if (I == Ip) return 1.0;
  return std::pow(I / Ip, alpha);
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline std::uint64_t stream(const char* tag) { return fnv1a(tag); }

} // namespace detail

// nu_ij[g](v, I)
inline MCEstimate collision_frequency(const KernelSpec& spec, const TestDistribution& g, const Vec3& v, double I,
                                      const SamplerConfig& cfg) {
  cfg.validate();
  if (I < 0.0) throw DomainError("collision_frequency: negative internal energy");
  if (g.mass() == 0.0) return exact_estimate(0.0);
  const ExchangeSampler ex(spec.alpha_i(), spec.alpha_j(), cfg);
  const StateProposal prop = StateProposal::of(g, cfg, false);
  return mc_mean(cfg.n_samples, cfg.seed, detail::stream("collision_frequency"), [&](Rng& rng) {
    const ParticleState b = prop.draw(rng);
    const Vec3 sigma = rng.sphere();
    const ExchangeDraw e = ex.draw(rng);
    const CollisionGeometry geo = geometry(spec.pair, {v, I}, b);
    const double w = prop.ratio(b);
    if (w == 0.0) return 0.0;
    return w * 4.0 * pi * e.weight * spec.angular(cos_angle(geo.u, sigma)) *
           detail::exchange_factor(spec, cfg.kernel, e.r, e.R) * velocity_energy_factor(spec.pair, geo.E);
  });
}

// Q+_ij(f, g)(v, I)
inline MCEstimate gain_pointwise(const KernelSpec& spec, const TestDistribution& f, const TestDistribution& g,
                                 const Vec3& v, double I, const SamplerConfig& cfg) {
  cfg.validate();
  if (I < 0.0) throw DomainError("gain_pointwise: negative internal energy");
  if (f.mass() == 0.0 || g.mass() == 0.0) return exact_estimate(0.0);
  const ExchangeSampler ex(spec.alpha_i(), spec.alpha_j(), cfg);
  const StateProposal prop = StateProposal::of(g, cfg, !g.full_support());
  const ParticleState a{v, I};
  return mc_mean(cfg.n_samples, cfg.seed, detail::stream("gain_pointwise"), [&](Rng& rng) {
    const ParticleState b = prop.draw(rng);
    const Vec3 sigma = rng.sphere();
    const ExchangeDraw e = ex.draw(rng);
    const CollisionGeometry geo = geometry(spec.pair, a, b);
    if (!(geo.E > 0.0)) return detail::nan();
    const double dens = prop.density(b);
    if (!(dens > 0.0)) return 0.0;
    const CollisionImage img = transform(spec.pair, {a, b, sigma, e.r, e.R});
    const double fp = f(img.a.v, img.a.I);
    if (fp == 0.0) return 0.0;
    const double gp = g(img.b.v, img.b.I);
    if (gp == 0.0) return 0.0;
    const double kern = spec.angular(cos_angle(geo.u, sigma)) * detail::exchange_factor(spec, cfg.kernel, e.r, e.R) *
                        velocity_energy_factor(spec.pair, geo.E);
    return fp * gp * detail::energy_ratio(I, img.a.I, spec.alpha_i()) *
           detail::energy_ratio(b.I, img.b.I, spec.alpha_j()) * kern * 4.0 * pi * e.weight / dens;
  });
}

// Weak form of Q_ij(f, g) against chi; `loss` is int Q- chi (positive) and
// `full` is gain minus loss. The (v,I), (v*,I*) pair is drawn from f and g.
inline MCEstimate weak_form(const KernelSpec& spec, const TestDistribution& f, const TestDistribution& g,
                            const TestFn& chi, Part part, const SamplerConfig& cfg) {
  cfg.validate();
  if (f.mass() == 0.0 || g.mass() == 0.0) return exact_estimate(0.0);
  const ExchangeSampler ex(spec.alpha_i(), spec.alpha_j(), cfg);
  const StateProposal pf = StateProposal::of(f, cfg, false);
  const StateProposal pg = StateProposal::of(g, cfg, false);
  return mc_mean(cfg.n_samples, cfg.seed, detail::stream("weak_form"), [&](Rng& rng) {
    const ParticleState a = pf.draw(rng);
    const ParticleState b = pg.draw(rng);
    const Vec3 sigma = rng.sphere();
    const ExchangeDraw e = ex.draw(rng);
    const CollisionGeometry geo = geometry(spec.pair, a, b);
    if (!(geo.E > 0.0)) return detail::nan();
    const double w = pf.ratio(a) * pg.ratio(b);
    if (w == 0.0) return 0.0;
    const double kern = spec.angular(cos_angle(geo.u, sigma)) * detail::exchange_factor(spec, cfg.kernel, e.r, e.R) *
                        velocity_energy_factor(spec.pair, geo.E);
    if (kern == 0.0) return 0.0;
    double c = 0.0;
    if (part == Part::loss) {
      c = chi(a.v, a.I);
    } else {
      const CollisionImage img = transform(spec.pair, {a, b, sigma, e.r, e.R});
      c = chi(img.a.v, img.a.I);
      if (part == Part::full) c -= chi(a.v, a.I);
    }
    return w * kern * 4.0 * pi * e.weight * c;
  });
}

// The gain weak form integrated in the original variables, int Q+_ij(f,g) chi dv dI,
// with f and g evaluated at post-collision states. Equal to the gain part of
// weak_form through the pre/post change of variables.
inline MCEstimate weak_form_gain_direct(const KernelSpec& spec, const TestDistribution& f, const TestDistribution& g,
                                        const TestFn& chi, const SamplerConfig& cfg) {
  cfg.validate();
  if (f.mass() == 0.0 || g.mass() == 0.0) return exact_estimate(0.0);
  const ExchangeSampler ex(spec.alpha_i(), spec.alpha_j(), cfg);
  const StateProposal pf = StateProposal::of(f, cfg, true);
  const StateProposal pg = StateProposal::of(g, cfg, true);
  return mc_mean(cfg.n_samples, cfg.seed, detail::stream("weak_form_gain_direct"), [&](Rng& rng) {
    const ParticleState a = pf.draw(rng);
    const ParticleState b = pg.draw(rng);
    const Vec3 sigma = rng.sphere();
    const ExchangeDraw e = ex.draw(rng);
    const CollisionGeometry geo = geometry(spec.pair, a, b);
    if (!(geo.E > 0.0)) return detail::nan();
    const double dens = pf.density(a) * pg.density(b);
    if (!(dens > 0.0)) return 0.0;
    const double c = chi(a.v, a.I);
    if (c == 0.0) return 0.0;
    const CollisionImage img = transform(spec.pair, {a, b, sigma, e.r, e.R});
    const double fp = f(img.a.v, img.a.I);
    if (fp == 0.0) return 0.0;
    const double gp = g(img.b.v, img.b.I);
    if (gp == 0.0) return 0.0;
    const double kern = spec.angular(cos_angle(geo.u, sigma)) * detail::exchange_factor(spec, cfg.kernel, e.r, e.R) *
                        velocity_energy_factor(spec.pair, geo.E);
    return fp * gp * detail::energy_ratio(a.I, img.a.I, spec.alpha_i()) *
           detail::energy_ratio(b.I, img.b.I, spec.alpha_j()) * kern * c * 4.0 * pi * e.weight / dens;
  });
}

// One draw of the averaging operator integrand at the pre-collision pair (a, b);
// the sampler must carry the r^{-gamma/(2q)} shift.
inline double averaging_draw(const KernelSpec& spec, const AngularKernel& bsign, const TestFn& chi,
                             const ParticleState& a, const ParticleState& b, const ExchangeSampler& ex, Rng& rng) {
  const Vec3 sigma = rng.sphere();
  const ExchangeDraw e = ex.draw(rng);
  const CollisionGeometry geo = geometry(spec.pair, a, b);
  if (!(geo.E > 0.0)) return detail::nan();
  const double bv = bsign(cos_angle(geo.u, sigma));
  if (bv == 0.0) return 0.0;
  const CollisionImage img = transform(spec.pair, {a, b, sigma, e.r, e.R});
  return chi(img.a.v, img.a.I) * bv * spec.upper(e.r, e.R) * 4.0 * pi * e.weight;
}

inline ExchangeSampler averaging_sampler(const KernelSpec& spec, double q, const SamplerConfig& cfg) {
  rho_check(spec, q);
  const double shift = std::isinf(q) ? 0.0 : -spec.pair.gamma / (2.0 * q);
  return ExchangeSampler(spec.alpha_i(), spec.alpha_j(), cfg, shift);
}

inline AngularKernel signed_angular(const KernelSpec& spec, Sign s) {
  return spec.angular.restricted(s == Sign::plus ? AngularSide::plus : AngularSide::minus);
}

// S^{+-}_ij(chi)(v, I, v*, I*)
inline MCEstimate averaging_S(const KernelSpec& spec, Sign sign, const TestFn& chi, double q,
                              const ParticleState& a, const ParticleState& b, const SamplerConfig& cfg) {
  cfg.validate();
  const ExchangeSampler ex = averaging_sampler(spec, q, cfg);
  const AngularKernel bs = signed_angular(spec, sign);
  return mc_mean(cfg.n_samples, cfg.seed, detail::stream("averaging_S"),
                 [&](Rng& rng) { return averaging_draw(spec, bs, chi, a, b, ex, rng); });
}

// Invariance of dmu = I^alpha_i I*^alpha_j d_ij(r,R) dsigma dr dR dv dv* dI dI*
// under the collision map: int phi(T x) dmu(x) against int phi(x) dmu(x).
// phi must vanish unless |V| <= a and E <= b (center velocity and pair energy),
// both kept by the map, so phi and phi o T share that support. x is drawn with
// V uniform in |V| <= a, g = v - v* uniform in mu|g|^2/2 <= b, I,I* uniform in
// [0, b]. `diff` is the paired difference of the two integrands.
struct InvarianceEstimate {
  MCEstimate pushed, direct, diff;
};

inline InvarianceEstimate measure_invariance(const PairParams& pair,
                                             const std::function<double(const CollisionConfiguration&)>& phi,
                                             double a, double b, std::uint64_t n, std::uint64_t seed) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("measure_invariance: support bounds must be positive");
  const double M = pair.m_i + pair.m_j;
  const double G = std::sqrt(2.0 * b / pair.mu);
  const double ball = 4.0 * pi / 3.0;
  const double vol = ball * a * a * a * ball * G * G * G * b * b * 4.0 * pi;
  auto draw = [&](Rng& rng) {
    CollisionConfiguration c;
    const Vec3 V = (a * std::cbrt(rng.uniform())) * rng.sphere();
    const Vec3 g = (G * std::cbrt(rng.uniform())) * rng.sphere();
    c.a.v = V + (pair.m_j / M) * g;
    c.b.v = V - (pair.m_i / M) * g;
    c.a.I = b * rng.uniform();
    c.b.I = b * rng.uniform();
    c.sigma = rng.sphere();
    c.r = rng.uniform_open();
    c.R = rng.uniform_open();
    return c;
  };
  auto weight = [&](const CollisionConfiguration& c) {
    return vol * detail::energy_ratio(c.a.I, 1.0, pair.alpha_i) * detail::energy_ratio(c.b.I, 1.0, pair.alpha_j) *
           d_weight(pair.alpha_i, pair.alpha_j, c.r, c.R);
  };
  auto pushed_at = [&](const CollisionConfiguration& c) {
    if (!(geometry(pair, c.a, c.b).E > 0.0)) return 0.0;
    return phi(transform(pair, c).as_configuration());
  };
  const std::uint64_t s = detail::stream("measure_invariance");
  InvarianceEstimate out;
  out.pushed = mc_mean(n, seed, s, [&](Rng& rng) {
    const auto c = draw(rng);
    return weight(c) * pushed_at(c);
  });
  out.direct = mc_mean(n, seed, s, [&](Rng& rng) {
    const auto c = draw(rng);
    return weight(c) * phi(c);
  });
  out.diff = mc_mean(n, seed, s, [&](Rng& rng) {
    const auto c = draw(rng);
    return weight(c) * (pushed_at(c) - phi(c));
  });
  return out;
}

} // namespace polymix

#endif // POLYMIX_OPERATORS_HPP
