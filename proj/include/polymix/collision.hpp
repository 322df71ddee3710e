#ifndef POLYMIX_COLLISION_HPP
#define POLYMIX_COLLISION_HPP

#include <cmath>

#include "polymix/core.hpp"
#include "polymix/mixture.hpp"

namespace polymix {

struct ParticleState {
  Vec3 v;
  double I = 0.0;
};

struct CollisionGeometry {
  Vec3 V; // center-of-mass velocity
  Vec3 u; // relative velocity v - v*
  double E = 0.0;
};

struct CollisionConfiguration {
  ParticleState a; // species i
  ParticleState b; // species j
  Vec3 sigma{0.0, 0.0, 1.0};
  double r = 0.5;
  double R = 0.5;
};

enum CollisionFlag : unsigned {
  flag_none = 0u,
  flag_zero_relative_velocity = 1u, // sigma' := sigma
  flag_zero_internal_energy = 2u,   // r' := 1/2
};

struct CollisionImage {
  ParticleState a;
  ParticleState b;
  Vec3 sigma;
  double r = 0.5;
  double R = 0.5;
  unsigned flags = flag_none;

  CollisionConfiguration as_configuration() const { return {a, b, sigma, r, R}; }
};

inline CollisionGeometry geometry(const PairParams& pair, const ParticleState& a, const ParticleState& b) {
  CollisionGeometry g;
  const double M = pair.m_i + pair.m_j;
  g.V = (pair.m_i / M) * a.v + (pair.m_j / M) * b.v;
  g.u = a.v - b.v;
  g.E = pair.mu * norm2(g.u) / 2.0 + a.I + b.I;
  return g;
}

inline Vec3 unit_or_throw(Vec3 s) {
  double n = norm(s);
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("sigma must be a nonzero finite vector");
  if (std::abs(n - 1.0) > 1e-12) s *= 1.0 / n;
  return s;
}

inline CollisionImage transform(const PairParams& pair, const CollisionConfiguration& c) {
  if (c.a.I < 0.0 || c.b.I < 0.0) throw DomainError("transform: negative internal energy");
  if (!(c.r >= 0.0 && c.r <= 1.0 && c.R >= 0.0 && c.R <= 1.0))
    throw DomainError("transform: r and R must lie in [0,1]");
  const Vec3 sigma = unit_or_throw(c.sigma);
  const CollisionGeometry g = geometry(pair, c.a, c.b);
  if (!(g.E > 0.0)) throw DegenerateCollision("transform: zero total energy, sigma' undefined");

  const double M = pair.m_i + pair.m_j;
  const double E = g.E;
  const double w = std::sqrt(2.0 * c.R * E / pair.mu);

  CollisionImage out;
  out.a.v = g.V + (pair.m_j / M) * w * sigma;
  out.b.v = g.V - (pair.m_i / M) * w * sigma;
  out.a.I = c.r * (1.0 - c.R) * E;
  out.b.I = (1.0 - c.r) * (1.0 - c.R) * E;

  const double un = norm(g.u);
  if (un > 0.0) {
    out.sigma = (1.0 / un) * g.u;
  } else {
    out.sigma = sigma;
    out.flags |= flag_zero_relative_velocity;
  }
  out.R = pair.mu * norm2(g.u) / (2.0 * E);
  const double Isum = c.a.I + c.b.I;
  if (Isum > 0.0) {
    out.r = c.a.I / Isum;
  } else {
    out.r = 0.5;
    out.flags |= flag_zero_internal_energy;
  }
  return out;
}

inline double jacobian_T(const PairParams& pair, const CollisionConfiguration& c) {
  const CollisionImage img = transform(pair, c);
  const double R = c.R, Rp = img.R;
  if (!(R > 0.0 && R < 1.0)) throw SingularJacobian("jacobian_T: R must lie in (0,1)");
  if (!(Rp > 0.0 && Rp < 1.0)) throw SingularJacobian("jacobian_T: R' must lie in (0,1)");
  return (1.0 - R) * std::sqrt(R) / ((1.0 - Rp) * std::sqrt(Rp));
}

// |d(v',I')/d(v,I)| (first) or |d(v',I')/d(v*,I*)| (second) at fixed (sigma, r, R)
enum class StateSide { first, second };

inline double jacobian_fixed_params(const PairParams& pair, double r, double R, StateSide which) {
  if (!(r > 0.0 && r <= 1.0) || !(R >= 0.0 && R < 1.0))
    throw SingularJacobian("jacobian_fixed_params: r(1-R) vanishes");
  const double M = pair.m_i + pair.m_j;
  const double frac = (which == StateSide::first ? pair.m_i : pair.m_j) / M;
  return frac * frac * frac * r * (1.0 - R);
}

} // namespace polymix

#endif // POLYMIX_COLLISION_HPP
