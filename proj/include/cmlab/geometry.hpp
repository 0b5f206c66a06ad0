#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cmlab/error.hpp"
#include "cmlab/paths.hpp"

namespace cmlab {

struct Vertex {
  double t;
  double v;
};

/// Piecewise-linear concave majorant (or convex minorant) given by its
/// vertices in increasing time.
struct MajorantSkeleton {
  std::vector<Vertex> vertices;
  bool concave = true;

  std::size_t faces() const { return vertices.size() < 2 ? 0 : vertices.size() - 1; }
  double start() const { return vertices.front().t; }
  double end() const { return vertices.back().t; }
  double slope(std::size_t face) const {
    const Vertex& a = vertices[face];
    const Vertex& b = vertices[face + 1];
    return (b.v - a.v) / (b.t - a.t);
  }
  double duration(std::size_t face) const { return vertices[face + 1].t - vertices[face].t; }

  /// Index of the face [t_i, t_{i+1}) containing t; the last face is closed.
  std::size_t face_at(double t) const {
    auto it = std::upper_bound(vertices.begin(), vertices.end(), t,
                               [](double x, const Vertex& p) { return x < p.t; });
    std::size_t i = static_cast<std::size_t>(it - vertices.begin());
    if (i == 0) return 0;
    return std::min(i - 1, faces() - 1);
  }

  double operator()(double t) const {
    std::size_t i = face_at(t);
    return vertices[i].v + slope(i) * (t - vertices[i].t);
  }
};

struct StraddleInfo {
  double g;
  double d;
  double slope;
  double value;
  double intercept;
  double gap;  ///< K(t) - B(t); NaN when no path was supplied
};

namespace detail {

/// Upper hull by a monotone-chain scan. Points must have increasing t.
inline std::vector<Vertex> upper_hull(std::span<const double> t, std::span<const double> v,
                                      double sign) {
  std::vector<Vertex> h;
  h.reserve(64);
  for (std::size_t i = 0; i < t.size(); ++i) {
    Vertex p{t[i], sign * v[i]};
    while (h.size() >= 2) {
      const Vertex& o = h[h.size() - 2];
      const Vertex& a = h.back();
      double lhs = (a.t - o.t) * (p.v - o.v);
      double rhs = (p.t - o.t) * (a.v - o.v);
      // a is kept only if it lies strictly above the chord o-p.
      if (lhs - rhs >= -1e-12 * (std::abs(lhs) + std::abs(rhs))) {
        h.pop_back();
      } else {
        break;
      }
    }
    h.push_back(p);
  }
  if (sign < 0.0)
    for (auto& p : h) p.v = -p.v;
  return h;
}

inline std::vector<double> grid_times(const GridPath& path) {
  std::vector<double> t(path.values.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = path.time(i);
  return t;
}

}  // namespace detail

inline MajorantSkeleton concave_majorant(std::span<const double> t, std::span<const double> v) {
  if (t.size() < 2 || t.size() != v.size())
    throw input_error("concave_majorant: need at least 2 points");
  return {detail::upper_hull(t, v, 1.0), true};
}

inline MajorantSkeleton concave_majorant(const GridPath& path) {
  auto t = detail::grid_times(path);
  return concave_majorant(t, path.values);
}

inline MajorantSkeleton convex_minorant(std::span<const double> t, std::span<const double> v) {
  if (t.size() < 2 || t.size() != v.size())
    throw input_error("convex_minorant: need at least 2 points");
  return {detail::upper_hull(t, v, -1.0), false};
}

inline MajorantSkeleton convex_minorant(const GridPath& path) {
  auto t = detail::grid_times(path);
  return convex_minorant(t, path.values);
}

/// Face of the skeleton straddling t. At a vertex the face to its right is
/// returned, so the slope is the right-hand derivative.
inline StraddleInfo straddle(const MajorantSkeleton& sk, double t) {
  if (sk.faces() == 0 || t < sk.start() || t >= sk.end())
    throw range_error("straddle: t outside the skeleton span");
  std::size_t i = sk.face_at(t);
  double a = sk.slope(i);
  double k = sk.vertices[i].v + a * (t - sk.vertices[i].t);
  return {sk.vertices[i].t, sk.vertices[i + 1].t, a, k, k - t * a,
          std::numeric_limits<double>::quiet_NaN()};
}

inline StraddleInfo straddle(const MajorantSkeleton& sk, double t, const GridPath& path) {
  StraddleInfo s = straddle(sk, t);
  s.gap = sk.concave ? s.value - path.at(t) : path.at(t) - s.value;
  return s;
}

struct SigmaResult {
  double time;
  std::size_t index;
  bool horizon_warning;  ///< maximizer sits on the last grid point
};

/// Rightmost grid maximizer of path(t) - mu t.
inline SigmaResult sigma_mu(const GridPath& path, double mu) {
  detail::require(mu > 0.0, "sigma_mu: mu must be positive");
  if (path.values.size() < 2) throw input_error("sigma_mu: need at least 2 points");
  double best = -std::numeric_limits<double>::infinity();
  std::size_t idx = 0;
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    double x = path.values[i] - mu * path.time(i);
    if (x >= best - 1e-12 * (1.0 + std::abs(best))) {
      idx = i;
      best = std::max(best, x);
    }
  }
  return {path.time(idx), idx, idx + 1 == path.values.size()};
}

struct MinslopeResult {
  double m;
  double b;
};

/// Minimum over grid u > 0 of f(u)/u, and the last grid time attaining it.
inline MinslopeResult minslope(const GridPath& f) {
  if (f.values.size() < 2) throw input_error("minslope: need at least 2 points");
  double m = std::numeric_limits<double>::infinity();
  double b = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (f.values[i] < 0.0) throw input_error("minslope: path must be nonnegative");
    double u = f.time(i);
    if (u <= 0.0) continue;
    double r = f.values[i] / u;
    if (r <= m + 1e-12 * std::abs(m) || r < m) {
      b = u;
      m = std::min(m, r);
    }
  }
  return {m, b};
}

struct MeanderPair {
  GridPath tilde;
  GridPath hat;
  double sigma;
  bool horizon_warning;
};

/// The two reversed, rescaled pre-maximum paths of B(t) - mu t.
///
/// tilde(u) = (X(s) - X((1-u)s))/sqrt(s) with X(t) = B(t) - mu t and s the
/// rightmost maximizer of X; hat(u) is the same for B itself. Both are
/// resampled by linear interpolation onto `points` steps of [0,1].
inline MeanderPair meanders(const GridPath& path, double mu, std::size_t points = 1024) {
  SigmaResult sr = sigma_mu(path, mu);
  if (sr.index == 0) throw input_error("meanders: maximizer at time 0");
  double s = sr.time;
  double rs = std::sqrt(s);
  MeanderPair out{{0.0, 1.0 / static_cast<double>(points), std::vector<double>(points + 1), mu},
                  {0.0, 1.0 / static_cast<double>(points), std::vector<double>(points + 1), mu},
                  s,
                  sr.horizon_warning};
  double bs = path.values[sr.index];
  for (std::size_t j = 0; j <= points; ++j) {
    double u = static_cast<double>(j) / static_cast<double>(points);
    double tt = (1.0 - u) * s;
    double h = (bs - path.at(tt)) / rs;
    out.hat.values[j] = h;
    out.tilde.values[j] = h - mu * rs * u;
  }
  out.tilde.values[0] = 0.0;
  out.hat.values[0] = 0.0;
  return out;
}

inline double quadratic_variation(const GridPath& path) {
  if (path.values.size() < 2) throw input_error("quadratic_variation: need at least 2 points");
  double q = 0.0;
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    double d = path.values[i] - path.values[i - 1];
    q += d * d;
  }
  return q;
}

/// Largest amount by which the path exceeds a concave skeleton (or falls
/// below a convex one) over the grid.
inline double domination_violation(const MajorantSkeleton& sk, const GridPath& path) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    double d = path.values[i] - sk(path.time(i));
    worst = std::max(worst, sk.concave ? d : -d);
  }
  return worst;
}

}  // namespace cmlab
