#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <queue>
#include <vector>

#include "cmlab/distributions.hpp"
#include "cmlab/error.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

/// A path sampled on the uniform grid t0, t0 + dt, ..., t0 + n dt.
struct GridPath {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;
  std::optional<double> drift_tag;

  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
  double horizon() const { return time(steps()); }

  /// Linear interpolation; t is clamped to the grid span.
  double at(double t) const {
    double x = (t - t0) / dt;
    if (x <= 0.0) return values.front();
    std::size_t n = steps();
    if (x >= static_cast<double>(n)) return values.back();
    auto i = static_cast<std::size_t>(x);
    double f = x - static_cast<double>(i);
    return values[i] + f * (values[i + 1] - values[i]);
  }
};

using Vec3 = std::array<double, 3>;

namespace detail {

inline void check_grid(std::size_t n, double T) {
  require(n >= 1, "grid needs at least one step");
  require(T > 0.0, "horizon must be positive");
}

inline double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

/// Brownian bridge on the grid from 0 to 0, one coordinate. Pinned
/// construction: W(t) - (t/T) W(T).
inline void fill_zero_bridge(std::vector<double>& out, std::size_t n, double dt, RngStream& rng) {
  out.assign(n + 1, 0.0);
  double sd = std::sqrt(dt);
  for (std::size_t i = 1; i <= n; ++i) out[i] = out[i - 1] + sd * rng.normal();
  double end = out[n];
  for (std::size_t i = 0; i <= n; ++i) out[i] -= end * static_cast<double>(i) / static_cast<double>(n);
  out[n] = 0.0;
}

/// Unit vector drawn from the von Mises-Fisher law on the sphere with mean
/// direction e1 and concentration kappa.
inline Vec3 sample_vmf_direction(double kappa, RngStream& rng) {
  double w;
  if (kappa < 1e-8) {
    w = 2.0 * rng.uniform() - 1.0;
  } else {
    double u = rng.uniform();
    w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
    w = std::clamp(w, -1.0, 1.0);
  }
  double phi = 2.0 * std::numbers::pi * rng.uniform();
  double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  return {w, s * std::cos(phi), s * std::sin(phi)};
}

inline Vec3 sample_uniform_direction(RngStream& rng) { return sample_vmf_direction(0.0, rng); }

}  // namespace detail

inline GridPath sample_bm(std::size_t n, double T, double mu, RngStream& rng) {
  detail::check_grid(n, T);
  GridPath p{0.0, T / static_cast<double>(n), std::vector<double>(n + 1, 0.0), mu};
  double sd = std::sqrt(p.dt);
  double m = mu * p.dt;
  for (std::size_t i = 1; i <= n; ++i) p.values[i] = p.values[i - 1] + m + sd * rng.normal();
  return p;
}

inline GridPath sample_bridge(std::size_t n, double T, double x, double y, RngStream& rng) {
  detail::check_grid(n, T);
  GridPath p{0.0, T / static_cast<double>(n), {}, std::nullopt};
  detail::fill_zero_bridge(p.values, n, p.dt, rng);
  for (std::size_t i = 0; i <= n; ++i)
    p.values[i] += x + (y - x) * static_cast<double>(i) / static_cast<double>(n);
  p.values.front() = x;
  p.values.back() = y;
  return p;
}

/// Three-dimensional Bessel bridge from x at time 0 to y at time a.
///
/// Realized as the norm of a 3D Brownian bridge from (x,0,0) to y*e, where
/// the direction e follows the von Mises-Fisher law with concentration x*y/a.
/// That is the conditional law of the endpoint direction given its norm, so
/// the norm is exactly the Bessel bridge.
inline GridPath sample_bessel_bridge(double a, double x, double y, std::size_t n, RngStream& rng) {
  detail::check_grid(n, a);
  if (x < 0.0 || y < 0.0) throw parameter_error("sample_bessel_bridge: endpoints must be >= 0");
  Vec3 e = detail::sample_vmf_direction(x * y / a, rng);
  GridPath p{0.0, a / static_cast<double>(n), std::vector<double>(n + 1, 0.0), std::nullopt};
  std::array<std::vector<double>, 3> c;
  for (auto& v : c) detail::fill_zero_bridge(v, n, p.dt, rng);
  for (std::size_t i = 0; i <= n; ++i) {
    double f = static_cast<double>(i) / static_cast<double>(n);
    Vec3 v{c[0][i] + (1.0 - f) * x + f * y * e[0], c[1][i] + f * y * e[1], c[2][i] + f * y * e[2]};
    p.values[i] = detail::norm3(v);
  }
  p.values.front() = x;
  p.values.back() = y;
  return p;
}

/// Standard Brownian excursion on [0,1].
inline GridPath sample_excursion(std::size_t n, RngStream& rng) {
  detail::require(n >= 2, "sample_excursion: need n >= 2");
  return sample_bessel_bridge(1.0, 0.0, 0.0, n, rng);
}

/// Radial part of a dim-dimensional Brownian motion started at radius r0.
///
/// With drift mu > 0 (dim 3 only) the drift vector has magnitude mu and a
/// uniformly random direction, which makes the radial part the BES(3, mu)
/// diffusion for every starting radius.
inline GridPath sample_bessel(int dim, double r0, double mu, std::size_t n, double T,
                              RngStream& rng) {
  detail::check_grid(n, T);
  if (dim != 3 && dim != 5) throw parameter_error("sample_bessel: dim must be 3 or 5");
  if (dim == 5 && mu != 0.0) throw parameter_error("sample_bessel: drift requires dim 3");
  if (r0 < 0.0 || mu < 0.0) throw parameter_error("sample_bessel: r0 and mu must be >= 0");
  GridPath p{0.0, T / static_cast<double>(n), std::vector<double>(n + 1, 0.0), mu};
  std::array<double, 5> x{r0, 0.0, 0.0, 0.0, 0.0};
  std::array<double, 5> drift{};
  if (mu > 0.0) {
    Vec3 e = r0 > 0.0 ? detail::sample_uniform_direction(rng) : Vec3{1.0, 0.0, 0.0};
    for (int k = 0; k < 3; ++k) drift[k] = mu * e[k] * p.dt;
  }
  double sd = std::sqrt(p.dt);
  p.values[0] = r0;
  for (std::size_t i = 1; i <= n; ++i) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      x[k] += drift[k] + sd * rng.normal();
      s += x[k] * x[k];
    }
    p.values[i] = std::sqrt(s);
  }
  return p;
}

/// Path from 0 that first reaches y at time T: y minus a BES(3) bridge from y to 0.
inline GridPath sample_fp_bridge(double T, double y, std::size_t n, RngStream& rng) {
  detail::check_grid(n, T);
  detail::require(y > 0.0, "sample_fp_bridge: level must be positive");
  GridPath p = sample_bessel_bridge(T, y, 0.0, n, rng);
  for (double& v : p.values) v = y - v;
  p.values.front() = 0.0;
  p.values.back() = y;
  return p;
}

/// One marginal Z(t) of the BES(3) bridge from x at 0 to y at a.
inline double sample_bessel_bridge_marginal(double a, double x, double y, double t, RngStream& rng) {
  detail::require(a > 0.0 && t >= 0.0 && t <= a, "bessel bridge marginal: need 0 <= t <= a");
  Vec3 e = detail::sample_vmf_direction(x * y / a, rng);
  double f = t / a;
  double sd = std::sqrt(t * (a - t) / a);
  Vec3 v{(1.0 - f) * x + f * y * e[0] + sd * rng.normal(), f * y * e[1] + sd * rng.normal(),
         f * y * e[2] + sd * rng.normal()};
  return detail::norm3(v);
}

/// E|N_3(m e1, s^2 I)|, the mean of a noncentral chi_3 scaled by s.
inline double noncentral_chi3_mean(double m, double s) {
  m = std::abs(m);
  if (s <= 0.0) return m;
  if (m < 1e-8 * s) return 2.0 * s * std::sqrt(2.0 / std::numbers::pi);
  return s * std::sqrt(2.0 / std::numbers::pi) * std::exp(-m * m / (2.0 * s * s)) +
         (m + s * s / m) * std::erf(m / (s * kSqrt2));
}

/// Sample of inf_{v >= 0} |r e1 + W(v)| for a 3D Brownian motion W.
///
/// The path is simulated exactly on a doubling skeleton and refined by Levy
/// midpoint displacement, only where a Gaussian bound says the infimum could
/// still be beaten. Short segments close to their endpoints' norm scale are
/// finished with the Brownian-bridge minimum law. By time inversion this is
/// also the minslope of a BES(3) bridge from 0 to r on [0,1].
inline double sample_bes3_infimum(double r, RngStream& rng, double k_sigma = 5.0,
                                  double leaf = 1e-3) {
  detail::require(r > 0.0, "sample_bes3_infimum: start must be positive");
  struct Node {
    double sa, sb;
    Vec3 xa, xb;
  };
  std::vector<Node> nodes;
  auto seg_dist = [](const Vec3& a, const Vec3& b) {
    Vec3 d{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    double dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    if (dd == 0.0) return detail::norm3(a);
    double t = -(a[0] * d[0] + a[1] * d[1] + a[2] * d[2]) / dd;
    t = std::clamp(t, 0.0, 1.0);
    return detail::norm3({a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]});
  };

  double best = r;
  std::vector<std::pair<double, Vec3>> skel{{0.0, {r, 0.0, 0.0}}};
  double s = 0.0, step = 0.25;
  Vec3 x{r, 0.0, 0.0};
  for (int guard = 0; guard < 4096; ++guard) {
    double sd = std::sqrt(step);
    for (auto& c : x) c += sd * rng.normal();
    s += step;
    skel.emplace_back(s, x);
    double nx = detail::norm3(x);
    best = std::min(best, nx);
    // Transience: once far away relative to the running minimum, the chance
    // of coming back below it is best/|x|.
    if (s > 1.0 && best < 1e-9 * nx) break;
    step = s;
  }

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  auto push = [&](double sa, const Vec3& xa, double sb, const Vec3& xb) {
    double lb = seg_dist(xa, xb) - k_sigma * std::sqrt((sb - sa) / 4.0);
    if (lb < best) {
      nodes.push_back({sa, sb, xa, xb});
      heap.emplace(lb, nodes.size() - 1);
    }
  };
  for (std::size_t i = 0; i + 1 < skel.size(); ++i)
    push(skel[i].first, skel[i].second, skel[i + 1].first, skel[i + 1].second);

  std::size_t budget = 1u << 22;
  while (!heap.empty() && budget-- > 0) {
    auto [lb, id] = heap.top();
    heap.pop();
    if (lb >= best) break;
    Node nd = nodes[id];
    double ds = nd.sb - nd.sa;
    double na = detail::norm3(nd.xa), nb = detail::norm3(nd.xb);
    double lo = std::min(na, nb);
    if (ds < leaf * leaf * lo * lo || ds < 1e-12) {
      double u = rng.uniform();
      double m = 0.5 * (na + nb - std::sqrt((na - nb) * (na - nb) - 2.0 * ds * std::log(u)));
      best = std::min(best, m);
      continue;
    }
    double sd = std::sqrt(ds / 4.0);
    Vec3 xm;
    for (int c = 0; c < 3; ++c) xm[c] = 0.5 * (nd.xa[c] + nd.xb[c]) + sd * rng.normal();
    best = std::min(best, detail::norm3(xm));
    double sm = 0.5 * (nd.sa + nd.sb);
    push(nd.sa, nd.xa, sm, xm);
    push(sm, xm, nd.sb, nd.xb);
  }
  return best;
}

}  // namespace cmlab
