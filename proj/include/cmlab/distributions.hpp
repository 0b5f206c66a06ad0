#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "cmlab/error.hpp"
#include "cmlab/quadrature.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

struct GaussianKernels {
  double pdf;
  double tail;
  double mills;
};

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Upper tail 1 - Phi(x), computed without cancellation.
inline double normal_tail(double x) { return 0.5 * std::erfc(x / kSqrt2); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

/// Mills ratio tail/pdf. Uses the Laplace continued fraction for large x
/// where both tail and pdf underflow together.
inline double mills_ratio(double x) {
  if (x <= 5.0) {
    double p = normal_pdf(x);
    return p > 0.0 ? normal_tail(x) / p : std::numeric_limits<double>::infinity();
  }
  // M(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), modified Lentz.
  constexpr double tiny = 1e-300;
  double f = x, c = x, d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = x + k * d;
    if (d == 0.0) d = tiny;
    c = x + k / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

inline GaussianKernels gaussian_kernels(double x) {
  return {normal_pdf(x), normal_tail(x), mills_ratio(x)};
}

// ---------------------------------------------------------------------------
// Scalar laws

struct ScalarLaw {
  enum class Kind { normal, uniform01, chi, chi_sq, beta };
  Kind kind = Kind::normal;
  int k = 1;
  double a = 1.0;
  double b = 1.0;

  static ScalarLaw normal() { return {Kind::normal, 1, 1.0, 1.0}; }
  static ScalarLaw uniform01() { return {Kind::uniform01, 1, 1.0, 1.0}; }
  static ScalarLaw chi(int k) { return {Kind::chi, k, 1.0, 1.0}; }
  static ScalarLaw chi_sq(int k) { return {Kind::chi_sq, k, 1.0, 1.0}; }
  static ScalarLaw beta(double a, double b) { return {Kind::beta, 1, a, b}; }
};

inline double sample_scalar(const ScalarLaw& law, RngStream& rng) {
  switch (law.kind) {
    case ScalarLaw::Kind::normal:
      return rng.normal();
    case ScalarLaw::Kind::uniform01:
      return rng.uniform();
    case ScalarLaw::Kind::chi:
      detail::require(law.k >= 1, "chi: k must be >= 1");
      return rng.chi(law.k);
    case ScalarLaw::Kind::chi_sq:
      detail::require(law.k >= 1, "chi_sq: k must be >= 1");
      return rng.chi_square(law.k);
    case ScalarLaw::Kind::beta:
      detail::require(law.a > 0.0 && law.b > 0.0, "beta: a and b must be positive");
      return rng.beta(law.a, law.b);
  }
  throw parameter_error("unknown scalar law");
}

inline double chi_pdf(int k, double x) {
  if (x <= 0.0) return 0.0;
  double h = 0.5 * k;
  return std::exp((k - 1) * std::log(x) - 0.5 * x * x - (h - 1.0) * std::log(2.0) -
                  std::lgamma(h));
}

inline double chi_cdf(int k, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * k, 0.5 * x * x);
}

inline double chi_sq_cdf(int k, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * k, 0.5 * x);
}

// ---------------------------------------------------------------------------
// Inverse Gaussian (first passage of B(t) + mu t to level y)

inline double ig_density(double mu, double y, double t, bool size_biased) {
  detail::require(mu > 0.0 && y > 0.0, "ig_density: mu and y must be positive");
  if (t <= 0.0) return 0.0;
  double e = y - mu * t;
  double f = std::exp(std::log(y) - 0.5 * std::log(2.0 * std::numbers::pi * t * t * t) -
                      e * e / (2.0 * t));
  return size_biased ? f * (mu / y) * t : f;
}

inline double ig_cdf(double mu, double y, double t, bool size_biased) {
  detail::require(mu > 0.0 && y > 0.0, "ig_cdf: mu and y must be positive");
  if (t <= 0.0) return 0.0;
  double st = std::sqrt(t);
  double lead = normal_cdf((mu * t - y) / st);
  // exp(2 mu y) * tail((y + mu t)/sqrt t), rewritten to avoid overflow.
  double refl = normal_pdf((y - mu * t) / st) * mills_ratio((y + mu * t) / st);
  return size_biased ? lead - refl : lead + refl;
}

/// Inverse Gaussian draw with mean y/mu and shape y^2. The size-biased law is
/// the independent sum T + chi_1^2 / mu^2.
inline double sample_ig(double mu, double y, bool size_biased, RngStream& rng) {
  detail::require(mu > 0.0 && y > 0.0, "sample_ig: mu and y must be positive");
  double m = y / mu;
  double lambda = y * y;
  double z = rng.normal();
  double q = m * z * z / (2.0 * lambda);
  double x = m / (1.0 + q + std::sqrt(q * (q + 2.0)));
  double t = rng.uniform() * (m + x) <= m ? x : m * m / x;
  if (size_biased) {
    double w = rng.normal();
    t += w * w / (mu * mu);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Zenith increments and line crossings

/// E[(c - V/sqrt(s))_+^2] for V standard normal.
inline double truncated_second_moment(double c, double s) {
  detail::require(s > 0.0, "truncated_second_moment: s must be positive");
  double d = c * std::sqrt(s);
  if (d >= -5.0) return ((d * d + 1.0) * normal_cdf(d) + d * normal_pdf(d)) / s;
  double x = -d;
  double r;
  if (x < 10.0) {
    r = (1.0 + x * x) * mills_ratio(x) - x;
  } else {
    // Asymptotic series of (1 + x^2) M(x) - x; the leading terms cancel.
    double x2 = x * x;
    double term = 2.0 / (x2 * x);
    r = 0.0;
    for (int n = 1; n < 40; ++n) {
      r += term;
      double next = -term * (2.0 * n + 2.0) * (2.0 * n + 1.0) / (2.0 * n * x2);
      if (std::abs(next) < 1e-17 * std::abs(r) || std::abs(next) > std::abs(term)) break;
      term = next;
    }
  }
  return normal_pdf(x) * r / s;
}

/// Density of the increment (sigma_b - sigma_a, B(sigma_b) - B(sigma_a)) of
/// the zenith process on its continuous part; total mass 1 - b/a.
inline double zenith_density(double a, double b, double s, double z) {
  detail::require(b > 0.0 && a > b, "zenith_density: need 0 < b < a");
  if (s <= 0.0 || z < b * s || z > a * s) return 0.0;
  double m = z / s;
  double c = std::sqrt(std::max((a - m) * (m - b), 0.0));
  double rs = std::sqrt(s);
  return 2.0 * b / a * truncated_second_moment(c, s) * normal_pdf(z / rs) / rs;
}

/// Probability that a Brownian bridge from (s,x) to (t,y) crosses u -> a u + b.
inline double bridge_crossing_prob(double s, double t, double a, double b, double x, double y) {
  if (!(s < t)) throw range_error("bridge_crossing_prob: need s < t");
  double p = std::max(a * s + b - x, 0.0);
  double q = std::max(a * t + b - y, 0.0);
  return std::exp(-2.0 * p * q / (t - s));
}

// ---------------------------------------------------------------------------
// Fixed-time densities of the majorant at t = 1

/// Joint density of (K'(1), I(1), K(1)-B(1)).
inline double f3_density(double a, double b, double y) {
  if (a <= 0.0 || b <= 0.0 || y <= 0.0) return 0.0;
  double s = a + b + y;
  return 4.0 * y * s * normal_pdf(s);
}

/// Joint density of (K'(1), I(1), K(1)-B(1), 1/G_1, D_1).
inline double f5_density(double a, double b, double y, double v, double w) {
  if (a <= 0.0 || b <= 0.0 || y <= 0.0 || v <= 1.0 || w <= 1.0) return 0.0;
  double v1 = v - 1.0, w1 = w - 1.0;
  double pre = std::sqrt(2.0 / (std::pow(std::numbers::pi, 3) * v1 * v1 * v1 * w1 * w1 * w1));
  double e = b * b * v + 2.0 * a * b + a * a * w + y * y * (w * v - 1.0) / (v1 * w1);
  if (!(e < 1500.0)) return 0.0;  // exp underflows; also avoids inf * 0
  return pre * a * b * y * y * (w * v - 1.0) * std::exp(-0.5 * e);
}

/// Conditional density of D_1 - 1 given (K'(1), I(1), K(1)-B(1)) = (a, b, y).
inline double d1_conditional_density(double a, double b, double y, double t) {
  double s = a + b + y;
  return a / s * ig_density(a, y, t, false) + (b + y) / s * ig_density(a, y, t, true);
}

inline double d1_conditional_cdf(double a, double b, double y, double t) {
  double s = a + b + y;
  return a / s * ig_cdf(a, y, t, false) + (b + y) / s * ig_cdf(a, y, t, true);
}

/// P(K'(1) in [a0,a1], I(1) in [b0,b1], K(1)-B(1) in [y0,y1]). The a and b
/// integrals of f3 are done in closed form, y by quadrature. Infinite upper
/// edges are allowed; negative lower edges are clamped to 0.
inline double f3_box_probability(double a0, double a1, double b0, double b1, double y0, double y1,
                                 double tol = 1e-12) {
  a0 = std::max(a0, 0.0);
  b0 = std::max(b0, 0.0);
  y0 = std::max(y0, 0.0);
  if (!(a1 > a0 && b1 > b0 && y1 > y0)) return 0.0;
  auto tail = [](double x) { return std::isinf(x) ? 0.0 : normal_tail(x); };
  auto inner = [&](double y) {
    return 4.0 * y *
           (tail(a0 + b0 + y) - tail(a1 + b0 + y) - tail(a0 + b1 + y) + tail(a1 + b1 + y));
  };
  if (std::isinf(y1)) return quad::integrate_tail(inner, y0, tol);
  return quad::integrate(inner, y0, y1, tol);
}

/// Marginal density of (1/G_1, D_1): f5 integrated over (a, b, y) in closed
/// form, (sqrt(q) - atan(sqrt(q))) / (pi q^2) with q = v w - 1.
inline double f5_vw_density(double v, double w) {
  if (v <= 1.0 || w <= 1.0) return 0.0;
  double q = v * w - 1.0;
  if (!std::isfinite(q)) return 0.0;
  double x = std::sqrt(q);
  double num;
  if (x < 1e-2) {
    double x2 = x * x;
    num = x * x2 * (1.0 / 3.0 - x2 * (1.0 / 5.0 - x2 * (1.0 / 7.0 - x2 / 9.0)));
  } else {
    num = x - std::atan(x);
  }
  return num / (std::numbers::pi * q * q);
}

/// Mass of the zenith density h^{a,b} over s in [s0,s1] and z/s in [m0,m1].
inline double zenith_box_probability(double a, double b, double s0, double s1, double m0, double m1,
                                     double tol = 1e-10) {
  m0 = std::max(m0, b);
  m1 = std::min(m1, a);
  s0 = std::max(s0, 0.0);
  if (!(m1 > m0 && s1 > s0)) return 0.0;
  // For fixed slope m the integrand decays like exp(-m^2 s / 2), so s goes
  // inside; s = u^2 removes the s^{-1/2} singularity at 0.
  double u0 = std::sqrt(s0), u1 = std::sqrt(s1);
  auto inner = [&](double m) {
    auto f = [&](double u) {
      double h = zenith_density(a, b, u * u, m * u * u);
      return h > 0.0 ? 2.0 * u * u * u * h : 0.0;
    };
    if (std::isinf(u1)) return quad::integrate_tail(f, u0, tol);
    return quad::integrate(f, u0, u1, tol);
  };
  return quad::integrate(inner, m0, m1, tol);
}

// ---------------------------------------------------------------------------
// Meander and Williams laws

/// Density 4 t tail(t) of the reversed meander endpoint.
inline double meander_end_pdf(double t) { return t > 0.0 ? 4.0 * t * normal_tail(t) : 0.0; }

inline double meander_end_cdf(double x) {
  if (x <= 0.0) return 0.0;
  double tail = normal_tail(x);
  return 2.0 * x * x * tail + 1.0 - 2.0 * tail - 2.0 * x * normal_pdf(x);
}

/// CDF u^2 of beta(2,1).
inline double beta21_cdf(double u) { return u <= 0.0 ? 0.0 : (u >= 1.0 ? 1.0 : u * u); }

/// CDF of chi_3^2 beta_{1,2}^2, the law of mu^2 sigma_mu. Closed form from
/// mixing the first-passage law of level M ~ Exp(2) at unit drift.
inline double williams_time_cdf(double x) {
  if (x <= 0.0) return 0.0;
  double r = std::sqrt(x);
  return std::clamp(1.0 - 2.0 * (1.0 + x) * normal_tail(r) + 2.0 * r * normal_pdf(r), 0.0, 1.0);
}

/// CDF of chi_3^2 beta_{1,2}, the law of mu B(sigma_mu) = M + T_M at mu = 1.
inline double williams_value_cdf(double x) {
  if (x <= 0.0) return 0.0;
  return quad::integrate(
      [x](double m) {
        double s = x - m;
        if (s <= 0.0) return 0.0;
        double rs = std::sqrt(s);
        return 2.0 * std::exp(-2.0 * m) * normal_tail((2.0 * m - x) / rs) + 2.0 * normal_tail(x / rs);
      },
      0.0, x, 1e-11);
}

/// Density of the convex-minorant faces of BES(3, mu) in (slope, duration).
inline double bessel_face_intensity(double mu, double alpha, double t) {
  if (alpha <= 0.0 || alpha >= mu || t <= 0.0) return 0.0;
  double rt = std::sqrt(t);
  return normal_pdf(rt * (mu - alpha)) / rt;
}

}  // namespace cmlab
