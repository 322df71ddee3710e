#ifndef POLYMIX_QUADRATURE_HPP
#define POLYMIX_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "polymix/core.hpp"

namespace polymix::quad {

inline double beta_fn(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DivergenceError("Beta function with nonpositive argument");
  return boost::math::beta(a, b);
}

inline double tgamma(double x) { return boost::math::tgamma(x); }
inline double lgamma(double x) { return boost::math::lgamma(x); }

// Adaptive Gauss-Kronrod on a finite interval.
template <class F>
double gk(F&& f, double a, double b, double tol = 1e-11, unsigned depth = 18) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, depth, tol, &err);
}

// Finite interval, tolerant of integrable endpoint singularities.
template <class F>
double tanh_sinh(F&& f, double a, double b, double tol = 1e-11) {
  static thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
  return ts.integrate(f, a, b, tol);
}

// [0, inf), tolerant of an integrable singularity at 0.
template <class F>
double half_line(F&& f, double tol = 1e-11) {
  static thread_local boost::math::quadrature::exp_sinh<double> es(12);
  return es.integrate(f, tol);
}

// Integral over (0,1) of f where f(x) ~ x^e0 near 0 and ~ (1-x)^e1 near 1.
// f is called as f(x, 1 - x) with the complement computed without cancellation.
// Tanh-sinh keeps double-exponential convergence for algebraic endpoint terms.
// A fresh integrator per call: nested calls would otherwise share lazily
// grown abscissa tables.
template <class F>
double unit_interval(F&& f, double e0, double e1, double tol = 1e-11) {
  if (!(e0 > -1.0) || !(e1 > -1.0)) throw DivergenceError("unit_interval: endpoint exponent <= -1");
  boost::math::quadrature::tanh_sinh<double> ts(10, 1e-200);
  auto g = [&](double x, double xc) {
    // xc < 0: distance to 0 is -xc; xc > 0: distance to 1 is xc
    const double lo = xc < 0.0 ? -xc : x;
    const double hi = xc > 0.0 ? xc : 1.0 - x;
    if (lo <= 0.0 || hi <= 0.0) return 0.0;
    return f(lo, hi);
  };
  return ts.integrate(g, 0.0, 1.0, tol);
}

} // namespace polymix::quad

#endif // POLYMIX_QUADRATURE_HPP
