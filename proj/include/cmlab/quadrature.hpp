#pragma once

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

// Thin wrappers over boost quadrature used by the density oracles and tests.
namespace cmlab::quad {

/// Adaptive Gauss-Kronrod on a finite interval.
template <class F>
double integrate(F f, double lo, double hi, double tol = 1e-11, unsigned depth = 15) {
  if (!(hi > lo)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, depth, tol);
}

/// Integral over [lo, inf) for integrands with exponential decay.
template <class F>
double integrate_tail(F f, double lo, double tol = 1e-11) {
  // Split so the finite part is handled by Gauss-Kronrod, which copes with
  // mild endpoint singularities better than exp_sinh near lo.
  double mid = lo + 1.0;
  double head = integrate(f, lo, mid, tol);
  boost::math::quadrature::exp_sinh<double> es;
  double tail = es.integrate([&](double x) { return f(mid + x); }, 0.0,
                             std::numeric_limits<double>::infinity(), tol);
  return head + tail;
}

/// Integral over a finite interval with integrable endpoint singularities.
template <class F>
double integrate_singular(F f, double lo, double hi, double tol = 1e-11) {
  if (!(hi > lo)) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, lo, hi, tol);
}

}  // namespace cmlab::quad
