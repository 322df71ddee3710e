#ifndef POLYMIX_KERNEL_HPP
#define POLYMIX_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "polymix/collision.hpp"
#include "polymix/core.hpp"
#include "polymix/mixture.hpp"
#include "polymix/quadrature.hpp"

namespace polymix {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Angular part b(x), x = u.sigma/|u| in [-1,1]

struct AngularConstant {
  double value = 1.0;
};

// Piecewise-linear interpolation of equispaced samples on [-1,1].
struct AngularTable {
  std::vector<double> samples;
};

// scale * (1 - x)^exponent on [lo, hi], zero elsewhere.
struct AngularTruncatedPower {
  double scale = 1.0;
  double exponent = 0.0;
  double lo = -1.0;
  double hi = 1.0;
};

enum class AngularSide { both, plus, minus }; // plus: x >= 0, minus: x < 0
enum class LevelCut { none, above, at_or_below };

class AngularKernel {
 public:
  using Form = std::variant<AngularConstant, AngularTable, AngularTruncatedPower>;

  AngularKernel() : form_(AngularConstant{1.0}) {}
  explicit AngularKernel(Form f) : form_(std::move(f)) { check(); }

  static AngularKernel constant(double c) { return AngularKernel(AngularConstant{c}); }
  static AngularKernel table(std::vector<double> s) { return AngularKernel(AngularTable{std::move(s)}); }
  static AngularKernel truncated_power(double scale, double exponent, double lo = -1.0, double hi = 1.0) {
    return AngularKernel(AngularTruncatedPower{scale, exponent, lo, hi});
  }

  const Form& form() const { return form_; }
  AngularSide side() const { return side_; }
  LevelCut cut() const { return cut_; }
  double level() const { return level_; }

  AngularKernel restricted(AngularSide s) const {
    AngularKernel k = *this;
    k.side_ = s;
    return k;
  }
  AngularKernel level_cut(LevelCut c, double M) const {
    AngularKernel k = *this;
    k.cut_ = c;
    k.level_ = M;
    return k;
  }
  AngularKernel scaled(double f) const {
    AngularKernel k = *this;
    k.factor_ *= f;
    return k;
  }

  double operator()(double x) const {
    if (side_ == AngularSide::plus && x < 0.0) return 0.0;
    if (side_ == AngularSide::minus && x >= 0.0) return 0.0;
    double y = raw(x);
    if (cut_ == LevelCut::above && !(y > level_)) return 0.0;
    if (cut_ == LevelCut::at_or_below && y > level_) return 0.0;
    return factor_ * y;
  }

  // 2 pi times the integral over [-1,1] of the restricted kernel
  double l1() const {
    auto [a, b] = window();
    return 2.0 * pi * factor_ * integral(a, b);
  }

  double linf() const {
    auto [a, b] = window();
    if (!(b > a)) return 0.0;
    double s = sup_on(a, b);
    if (cut_ == LevelCut::at_or_below) s = std::min(s, level_);
    if (cut_ == LevelCut::above && !(s > level_)) s = 0.0;
    return factor_ * s;
  }

  bool bounded() const { return std::isfinite(linf()); }

  // mass of the unrestricted kernel above level M, as an integral over [-1,1]
  double tail_mass(double M) const {
    AngularKernel k = *this;
    k.cut_ = LevelCut::above;
    k.level_ = M;
    auto [a, b] = window();
    return k.integral(a, b);
  }

  std::string describe() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, AngularConstant>) os << "constant(" << f.value << ")";
          else if constexpr (std::is_same_v<T, AngularTable>) os << "table(" << f.samples.size() << " samples)";
          else os << "truncated-power(" << f.scale << "*(1-x)^" << f.exponent << " on [" << f.lo << "," << f.hi << "])";
        },
        form_);
    return os.str();
  }

 private:
  Form form_;
  AngularSide side_ = AngularSide::both;
  LevelCut cut_ = LevelCut::none;
  double level_ = 0.0;
  double factor_ = 1.0;

  void check() const {
    if (auto* c = std::get_if<AngularConstant>(&form_)) {
      if (!(c->value >= 0.0) || !std::isfinite(c->value)) throw DomainError("angular constant must be >= 0");
    } else if (auto* t = std::get_if<AngularTable>(&form_)) {
      if (t->samples.size() < 2) throw DomainError("angular table needs at least 2 samples");
      for (double s : t->samples)
        if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("angular table samples must be >= 0");
    } else if (auto* tp = std::get_if<AngularTruncatedPower>(&form_)) {
      const auto& p = *tp;
      if (!(p.scale >= 0.0)) throw DomainError("truncated-power scale must be >= 0");
      if (!(p.exponent > -1.0)) throw DomainError("truncated-power exponent must exceed -1 (integrability)");
      if (!(p.lo >= -1.0 && p.hi <= 1.0 && p.lo < p.hi)) throw DomainError("truncated-power cutoffs must satisfy -1 <= lo < hi <= 1");
    }
  }

  std::pair<double, double> window() const {
    if (side_ == AngularSide::plus) return {0.0, 1.0};
    if (side_ == AngularSide::minus) return {-1.0, 0.0};
    return {-1.0, 1.0};
  }

  double raw(double x) const {
    if (auto* c = std::get_if<AngularConstant>(&form_)) return c->value;
    if (auto* t = std::get_if<AngularTable>(&form_)) {
      const auto& s = t->samples;
      const double h = 2.0 / static_cast<double>(s.size() - 1);
      double pos = (std::clamp(x, -1.0, 1.0) + 1.0) / h;
      std::size_t k = std::min(static_cast<std::size_t>(pos), s.size() - 2);
      double w = pos - static_cast<double>(k);
      return (1.0 - w) * s[k] + w * s[k + 1];
    }
    const auto& p = std::get<AngularTruncatedPower>(form_);
    if (x < p.lo || x > p.hi) return 0.0;
    if (p.exponent == 0.0) return p.scale;
    double d = 1.0 - x;
    if (d <= 0.0) return p.exponent < 0.0 ? inf : 0.0;
    return p.scale * std::pow(d, p.exponent);
  }

  double sup_on(double a, double b) const {
    if (auto* c = std::get_if<AngularConstant>(&form_)) return c->value;
    if (auto* t = std::get_if<AngularTable>(&form_)) {
      const auto& s = t->samples;
      const double h = 2.0 / static_cast<double>(s.size() - 1);
      double m = std::max(raw(a), raw(b));
      for (std::size_t k = 0; k < s.size(); ++k) {
        double x = -1.0 + h * static_cast<double>(k);
        if (x >= a && x <= b) m = std::max(m, s[k]);
      }
      return m;
    }
    const auto& p = std::get<AngularTruncatedPower>(form_);
    double lo = std::max(a, p.lo), hi = std::min(b, p.hi);
    if (!(hi > lo)) return 0.0;
    return std::max(raw(lo), raw(hi));
  }

  // integral over [a,b] of the raw kernel restricted by the level cut
  double integral(double a, double b) const {
    if (!(b > a)) return 0.0;
    if (auto* c = std::get_if<AngularConstant>(&form_)) {
      bool keep = cut_ == LevelCut::none || (cut_ == LevelCut::above ? c->value > level_ : c->value <= level_);
      return keep ? c->value * (b - a) : 0.0;
    }
    if (auto* t = std::get_if<AngularTable>(&form_)) {
      const auto& s = t->samples;
      const double h = 2.0 / static_cast<double>(s.size() - 1);
      double total = 0.0;
      for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        double x0 = -1.0 + h * static_cast<double>(k), x1 = x0 + h;
        double lo = std::max(a, x0), hi = std::min(b, x1);
        if (!(hi > lo)) continue;
        total += linear_piece(lo, hi, raw_linear(s[k], s[k + 1], x0, h, lo), raw_linear(s[k], s[k + 1], x0, h, hi));
      }
      return total;
    }
    const auto& p = std::get<AngularTruncatedPower>(form_);
    double lo = std::max(a, p.lo), hi = std::min(b, p.hi);
    if (!(hi > lo)) return 0.0;
    if (cut_ != LevelCut::none) {
      // the set {k > M} is an interval adjacent to the end where k is largest
      double M = level_;
      double xc;
      if (p.exponent == 0.0 || M <= 0.0 || p.scale == 0.0) {
        bool above = p.scale > M;
        bool keep = cut_ == LevelCut::above ? above : !above;
        return keep ? power_integral(p, lo, hi) : 0.0;
      }
      xc = 1.0 - std::pow(M / p.scale, 1.0 / p.exponent);
      xc = std::clamp(xc, lo, hi);
      bool increasing = p.exponent < 0.0;
      double above = increasing ? power_integral(p, xc, hi) : power_integral(p, lo, xc);
      return cut_ == LevelCut::above ? above : power_integral(p, lo, hi) - above;
    }
    return power_integral(p, lo, hi);
  }

  static double raw_linear(double y0, double y1, double x0, double h, double x) {
    return y0 + (y1 - y0) * (x - x0) / h;
  }

  double linear_piece(double x0, double x1, double y0, double y1) const {
    if (cut_ == LevelCut::none) return 0.5 * (y0 + y1) * (x1 - x0);
    const double M = level_;
    auto trap = [](double a, double b, double ya, double yb) { return 0.5 * (ya + yb) * (b - a); };
    double above = 0.0;
    if (y0 > M && y1 > M) {
      above = trap(x0, x1, y0, y1);
    } else if (y0 > M || y1 > M) {
      double xc = x0 + (M - y0) * (x1 - x0) / (y1 - y0);
      above = y0 > M ? trap(x0, xc, y0, M) : trap(xc, x1, M, y1);
    }
    return cut_ == LevelCut::above ? above : trap(x0, x1, y0, y1) - above;
  }

  static double power_integral(const AngularTruncatedPower& p, double a, double b) {
    if (!(b > a)) return 0.0;
    const double e1 = p.exponent + 1.0;
    return p.scale * (std::pow(1.0 - a, e1) - std::pow(1.0 - b, e1)) / e1;
  }
};

struct AngularSplit {
  AngularKernel b1;
  AngularKernel binf;
  double eps = 0.0;
  double level = inf;
};

inline std::pair<AngularKernel, AngularKernel> forward_backward(const AngularKernel& k) {
  return {k.restricted(AngularSide::plus), k.restricted(AngularSide::minus)};
}

// Level truncation b1 = k 1{k > M}, binf = k 1{k <= M}. Bounded kernels are
// left whole (M = sup k, b1 = 0); otherwise M is the smallest level whose
// tail mass is at most eps / (4 pi), found by bisection.
inline AngularSplit split_angular(const AngularKernel& k, double eps) {
  if (!(eps > 0.0)) throw DomainError("split_angular: eps must be positive");
  AngularSplit s;
  s.eps = eps;
  if (k.bounded()) {
    s.level = k.linf();
  } else {
    const double target = eps / (4.0 * pi);
    double lo = 0.0, hi = 1.0;
    while (k.tail_mass(hi) > target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) throw DomainError("split_angular: no admissible level");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (k.tail_mass(mid) > target ? lo : hi) = mid;
    }
    s.level = hi;
  }
  s.b1 = k.level_cut(LevelCut::above, s.level);
  s.binf = k.level_cut(LevelCut::at_or_below, s.level);
  return s;
}

// ---------------------------------------------------------------------------
// Energy-exchange bounds: coef * r^a (1-r)^b R^c (1-R)^d

struct ExchangeBound {
  double coef = 1.0;
  double r_pow = 0.0;
  double one_minus_r_pow = 0.0;
  double R_pow = 0.0;
  double one_minus_R_pow = 0.0;

  static ExchangeBound constant(double c) { return {c, 0.0, 0.0, 0.0, 0.0}; }
  static ExchangeBound product_power(double c, double a, double b, double cR, double dR) {
    return {c, a, b, cR, dR};
  }

  bool is_constant() const {
    return r_pow == 0.0 && one_minus_r_pow == 0.0 && R_pow == 0.0 && one_minus_R_pow == 0.0;
  }

  double operator()(double r, double R) const { return eval(r, 1.0 - r, R, 1.0 - R); }

  double eval(double r, double rc, double R, double Rc) const {
    double v = coef;
    if (r_pow != 0.0) v *= std::pow(r, r_pow);
    if (one_minus_r_pow != 0.0) v *= std::pow(rc, one_minus_r_pow);
    if (R_pow != 0.0) v *= std::pow(R, R_pow);
    if (one_minus_R_pow != 0.0) v *= std::pow(Rc, one_minus_R_pow);
    return v;
  }

  // species interchange maps r to 1 - r
  ExchangeBound swapped() const { return {coef, one_minus_r_pow, r_pow, R_pow, one_minus_R_pow}; }

  double sup() const {
    if (r_pow < 0.0 || one_minus_r_pow < 0.0 || R_pow < 0.0 || one_minus_R_pow < 0.0) return inf;
    auto part = [](double a, double b) {
      if (a == 0.0 && b == 0.0) return 1.0;
      double x = a / (a + b);
      return std::pow(x, a) * std::pow(1.0 - x, b);
    };
    return coef * part(r_pow, one_minus_r_pow) * part(R_pow, one_minus_R_pow);
  }

  // || b ||_{L1(d_ij dr dR)}
  double d_norm(double alpha_i, double alpha_j) const {
    return coef * quad::beta_fn(alpha_i + r_pow + 1.0, alpha_j + one_minus_r_pow + 1.0) *
           quad::beta_fn(1.5 + R_pow, alpha_i + alpha_j + 2.0 + one_minus_R_pow);
  }

  std::string describe() const {
    std::ostringstream os;
    if (is_constant()) os << "constant(" << coef << ")";
    else os << coef << "*r^" << r_pow << "*(1-r)^" << one_minus_r_pow << "*R^" << R_pow << "*(1-R)^" << one_minus_R_pow;
    return os.str();
  }
};

// ---------------------------------------------------------------------------

inline double d_weight(double alpha_i, double alpha_j, double r, double R) {
  auto pw = [](double x, double e) {
    if (e == 0.0) return 1.0;
    if (x == 0.0) return e < 0.0 ? inf : 0.0;
    return std::pow(x, e);
  };
  return pw(r, alpha_i) * pw(1.0 - r, alpha_j) * pw(1.0 - R, alpha_i + alpha_j + 1.0) * std::sqrt(R);
}

// integral of d_ij over [0,1]^2
inline double d_normalizer(double alpha_i, double alpha_j) {
  return quad::beta_fn(alpha_i + 1.0, alpha_j + 1.0) * quad::beta_fn(1.5, alpha_i + alpha_j + 2.0);
}

struct KernelSpec {
  PairParams pair;
  AngularKernel angular;
  ExchangeBound upper = ExchangeBound::constant(1.0);
  ExchangeBound lower = ExchangeBound::constant(1.0);

  double alpha_i() const { return pair.alpha_i; }
  double alpha_j() const { return pair.alpha_j; }

  KernelSpec swapped() const { return {pair.swapped(), angular, upper.swapped(), lower.swapped()}; }
  KernelSpec with_angular(AngularKernel a) const {
    KernelSpec s = *this;
    s.angular = std::move(a);
    return s;
  }

  // lower <= b~ = 1 <= upper on a dense grid, so the model kernel sits between the bounds
  void validate() const {
    for (int a = 1; a < 40; ++a)
      for (int b = 1; b < 40; ++b) {
        double r = a / 40.0, R = b / 40.0;
        if (lower(r, R) > 1.0 + 1e-14 || upper(r, R) < 1.0 - 1e-14)
          throw DomainError("kernel: exchange bounds must satisfy lower <= 1 <= upper");
      }
  }
};

enum class KernelPart { upper, lower, model };

inline double velocity_energy_factor(const PairParams& pair, double E) {
  if (pair.gamma == 0.0) return 1.0;
  return std::pow(E / pair.m, pair.gamma / 2.0);
}

inline double cos_angle(const Vec3& u, const Vec3& sigma) {
  double un = norm(u);
  return un > 0.0 ? dot(u, sigma) / un : 0.0;
}

inline double kernel_eval(const KernelSpec& spec, const CollisionConfiguration& c, KernelPart which) {
  const CollisionGeometry g = geometry(spec.pair, c.a, c.b);
  double bt = 1.0;
  if (which == KernelPart::upper) bt = spec.upper(c.r, c.R);
  else if (which == KernelPart::lower) bt = spec.lower(c.r, c.R);
  return spec.angular(cos_angle(g.u, c.sigma)) * bt * velocity_energy_factor(spec.pair, g.E);
}

// Endpoint exponents of the rho integrand.
struct RhoExponents {
  double r0, r1, R0, R1;
};

inline RhoExponents rho_exponents(const KernelSpec& spec, double q) {
  const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
  const double g = spec.pair.gamma;
  const auto& u = spec.upper;
  return {spec.alpha_i() + u.r_pow - (1.0 + g / 2.0) * iq, spec.alpha_j() + u.one_minus_r_pow, 0.5 + u.R_pow,
          spec.alpha_i() + spec.alpha_j() + 1.0 + u.one_minus_R_pow - iq};
}

inline void rho_check(const KernelSpec& spec, double q) {
  if (!(q >= 1.0)) throw DomainError("rho: q must be >= 1");
  const RhoExponents e = rho_exponents(spec, q);
  if (!(e.r0 > -1.0))
    throw DivergenceError("rho diverges at r = 0: condition 1/q < (1+alpha_i)/(1+gamma/2) fails");
  if (!(e.R1 > -1.0)) throw DivergenceError("rho diverges at R = 1: condition 1/q < alpha_i+alpha_j+2 fails");
  if (!(e.r1 > -1.0) || !(e.R0 > -1.0)) throw DivergenceError("rho diverges: exchange bound not integrable");
}

// Closed form, valid for product-power upper bounds.
inline double rho_closed_form(const KernelSpec& spec, double q) {
  rho_check(spec, q);
  const RhoExponents e = rho_exponents(spec, q);
  return spec.upper.coef * quad::beta_fn(e.r0 + 1.0, e.r1 + 1.0) * quad::beta_fn(e.R0 + 1.0, e.R1 + 1.0);
}

// Nested adaptive quadrature with endpoint power stretching.
inline double rho(const KernelSpec& spec, double q) {
  rho_check(spec, q);
  const RhoExponents e = rho_exponents(spec, q);
  const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
  const double g = spec.pair.gamma;
  const double ai = spec.alpha_i(), aj = spec.alpha_j();
  auto pw = [](double x, double p) { return p == 0.0 ? 1.0 : std::pow(x, p); };
  auto inner = [&](double R, double Rc) {
    auto fr = [&](double r, double rc) {
      return pw(r, ai - (1.0 + g / 2.0) * iq) * pw(rc, aj) * spec.upper.eval(r, rc, R, Rc);
    };
    return quad::unit_interval(fr, e.r0, e.r1, 1e-12);
  };
  auto outer = [&](double R, double Rc) {
    return pw(Rc, ai + aj + 1.0 - iq) * std::sqrt(R) * inner(R, Rc);
  };
  // the exchange bound enters both integrals; its R-exponents are folded in
  // through spec.upper.eval, the stretch uses the combined exponents
  return quad::unit_interval(outer, e.R0, e.R1, 1e-12);
}

inline double c_gain_from_rho(const PairParams& pair, double q, double rho_value) {
  const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
  return std::pow(2.0, pair.gamma * iq / 2.0) * std::pow(pair.s_bar, -(3.0 + pair.gamma) * iq) * rho_value;
}

inline double c_gain(const KernelSpec& spec, double q) { return c_gain_from_rho(spec.pair, q, rho(spec, q)); }

} // namespace polymix

#endif // POLYMIX_KERNEL_HPP
