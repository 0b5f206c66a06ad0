#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "cmlab/distributions.hpp"
#include "cmlab/error.hpp"
#include "cmlab/geometry.hpp"
#include "cmlab/paths.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

/// Jumps of the inverse-slope process tau over a window of inverse slopes.
struct TauJumps {
  struct Jump {
    double r;
    double dtau;
  };
  std::vector<Jump> jumps;
  double r_lo = 0.0;
  double r_hi = 0.0;
};

/// Poisson point process of faces with inverse slope r in (r_lo, r_hi).
/// Locations are unit-rate in log r; each face lasts r^2 chi_1^2.
inline TauJumps sample_tau_window(double r_lo, double r_hi, RngStream& rng) {
  detail::require(r_lo > 0.0 && r_hi > r_lo, "sample_tau_window: need 0 < r_lo < r_hi");
  TauJumps out{{}, r_lo, r_hi};
  double l = std::log(r_lo), l_hi = std::log(r_hi);
  for (;;) {
    l += rng.exponential();
    if (l >= l_hi) break;
    double r = std::exp(l);
    double z = rng.normal();
    out.jumps.push_back({r, r * r * z * z});
  }
  return out;
}

/// Concatenate the faces in order of increasing r (decreasing slope 1/r)
/// starting from `origin`.
inline MajorantSkeleton assemble_K(const TauJumps& tj, Vertex origin = {0.0, 0.0}) {
  if (tj.jumps.empty()) throw coverage_error("assemble_K: empty jump set");
  MajorantSkeleton sk{{origin}, true};
  sk.vertices.reserve(tj.jumps.size() + 1);
  Vertex p = origin;
  for (const auto& j : tj.jumps) {
    p.t += j.dtau;
    p.v += j.dtau / j.r;
    sk.vertices.push_back(p);
  }
  return sk;
}

/// (sigma_mu, B(sigma_mu)) from the Williams decomposition:
/// (mu^2 sigma, mu B(sigma)) = (chi_3^2 beta^2, chi_3^2 beta), beta ~ beta(1,2).
inline std::pair<double, double> sample_williams(double mu, RngStream& rng) {
  detail::require(mu > 0.0, "sample_williams: mu must be positive");
  double c = rng.chi_square(3);
  double b = rng.beta(1.0, 2.0);
  return {c * b * b / (mu * mu), c * b / mu};
}

namespace detail {

/// One step of the backward vertex recursion in the frame X = B - mu t.
/// State: vertex time tau, value x = X(tau), intercept rho of the face to its
/// right. Returns the previous vertex and the intercept of the face between.
struct BackwardVertex {
  double tau;
  double x;
  double rho;
};

inline BackwardVertex backward_step(const BackwardVertex& s, RngStream& rng) {
  double u = rng.uniform();
  double z = rng.normal();
  double rho = u * s.rho;
  double tau = s.tau * rho * rho / (s.tau * z * z + rho * rho);
  double slope = (s.x - rho) / s.tau;
  return {tau, rho + slope * tau, rho};
}

inline constexpr int kMaxSteps = 1 << 16;

}  // namespace detail

/// Majorant state at a fixed time t.
struct FixedTimeSample {
  double a;  ///< K'(t)
  double k;  ///< K(t)
  double y;  ///< K(t) - B(t)
  double g;  ///< G_t
  double d;  ///< D_t
  double t;
  double intercept() const { return k - t * a; }
  double two_k_minus_b() const { return k + y; }
};

/// Exact sample of the face of K straddling t, and of the gap K(t) - B(t).
///
/// Starts from the Williams sample at slope 4, then walks the Poisson faces
/// upward in time if t lies after that vertex, or the backward vertex
/// recursion if it lies before. `steps` receives the number of faces visited.
inline FixedTimeSample straddle_at(double t, RngStream& rng, int* steps = nullptr) {
  detail::require(t > 0.0, "straddle_at: t must be positive");
  constexpr double r0 = 0.25;
  constexpr double mu0 = 1.0 / r0;
  auto [s, kv] = sample_williams(mu0, rng);
  double a, g, d, kt;
  int n = 0;
  if (s < t) {
    double r = r0;
    for (;; ++n) {
      if (n > detail::kMaxSteps) throw coverage_error("straddle_at: upward walk did not cover t");
      r *= std::exp(rng.exponential());
      double z = rng.normal();
      double dt = r * r * z * z;
      if (s + dt > t) {
        a = 1.0 / r;
        g = s;
        d = s + dt;
        kt = kv + a * (t - s);
        break;
      }
      s += dt;
      kv += dt / r;
    }
  } else {
    detail::BackwardVertex cur{s, kv - mu0 * s, kv - mu0 * s};
    for (;; ++n) {
      if (n > detail::kMaxSteps) throw coverage_error("straddle_at: backward walk did not cover t");
      detail::BackwardVertex prev = detail::backward_step(cur, rng);
      if (prev.tau < t) {
        a = (cur.x - prev.rho) / cur.tau + mu0;
        g = prev.tau;
        d = cur.tau;
        kt = prev.x + mu0 * prev.tau + a * (t - prev.tau);
        break;
      }
      cur = prev;
    }
  }
  if (steps) *steps = n;
  double y = std::sqrt((t - g) * (d - t) / (d - g)) * rng.chi(3);
  return {a, kt, y, g, d, t};
}

inline FixedTimeSample straddle_time_one(RngStream& rng) { return straddle_at(1.0, rng); }

/// Vertices of K covering [t_lo, t_hi]: the first vertex is before t_lo (or
/// the origin when t_lo <= 0) and the last is after t_hi.
inline MajorantSkeleton sample_majorant_cover(double t_lo, double t_hi, RngStream& rng) {
  detail::require(t_hi > 0.0 && t_hi >= t_lo, "sample_majorant_cover: bad time range");
  constexpr double r0 = 0.25;
  constexpr double mu0 = 1.0 / r0;
  auto [s, kv] = sample_williams(mu0, rng);
  std::vector<Vertex> left;
  bool origin = t_lo <= 0.0;
  double floor_t = origin ? 1e-14 * t_hi : t_lo;
  detail::BackwardVertex cur{s, kv - mu0 * s, kv - mu0 * s};
  for (int n = 0; cur.tau >= floor_t; ++n) {
    if (n > detail::kMaxSteps) throw coverage_error("sample_majorant_cover: backward walk too long");
    cur = detail::backward_step(cur, rng);
    left.push_back({cur.tau, cur.x + mu0 * cur.tau});
  }
  MajorantSkeleton sk{{}, true};
  if (origin) sk.vertices.push_back({0.0, 0.0});
  sk.vertices.insert(sk.vertices.end(), left.rbegin(), left.rend());
  sk.vertices.push_back({s, kv});
  double r = r0;
  for (int n = 0; s <= t_hi; ++n) {
    if (n > detail::kMaxSteps) throw coverage_error("sample_majorant_cover: upward walk too long");
    r *= std::exp(rng.exponential());
    double z = rng.normal();
    double dt = r * r * z * z;
    s += dt;
    kv += dt / r;
    sk.vertices.push_back({s, kv});
  }
  return sk;
}

/// Reconstruct B from K on every face: B = K - sqrt(L) e((t - T_i)/L) with
/// independent standard excursions e, each on `n_per_face` steps. Returns one
/// piece per face; pieces share their endpoint vertices with K.
inline std::vector<GridPath> attach_excursions(const MajorantSkeleton& sk, std::size_t n_per_face,
                                               RngStream& rng) {
  if (sk.faces() == 0) throw input_error("attach_excursions: skeleton has no faces");
  std::vector<GridPath> out;
  out.reserve(sk.faces());
  for (std::size_t i = 0; i < sk.faces(); ++i) {
    double len = sk.duration(i);
    GridPath e = sample_excursion(n_per_face, rng);
    GridPath p{sk.vertices[i].t, len / static_cast<double>(n_per_face),
               std::vector<double>(n_per_face + 1), std::nullopt};
    double a = sk.slope(i), rl = std::sqrt(len);
    for (std::size_t j = 0; j <= n_per_face; ++j)
      p.values[j] = sk.vertices[i].v + a * (p.dt * static_cast<double>(j)) - rl * e.values[j];
    p.values.front() = sk.vertices[i].v;
    p.values.back() = sk.vertices[i + 1].v;
    out.push_back(std::move(p));
  }
  return out;
}

/// Same reconstruction read on the uniform grid t0 + j dt, j = 0..n. Each
/// excursion is sampled exactly at the grid times inside its face by
/// sequential 3D Brownian-bridge steps.
inline GridPath attach_excursions_on_grid(const MajorantSkeleton& sk, double t0, double dt,
                                          std::size_t n, RngStream& rng) {
  if (sk.faces() == 0) throw input_error("attach_excursions_on_grid: skeleton has no faces");
  if (t0 < sk.start() || t0 + dt * static_cast<double>(n) > sk.end())
    throw range_error("attach_excursions_on_grid: grid outside the skeleton span");
  GridPath p{t0, dt, std::vector<double>(n + 1), std::nullopt};
  std::size_t j = 0;
  for (std::size_t i = sk.face_at(t0); i < sk.faces() && j <= n; ++i) {
    double ta = sk.vertices[i].t, tb = sk.vertices[i + 1].t;
    double a = sk.slope(i);
    Vec3 x{0.0, 0.0, 0.0};
    double s = ta;
    for (; j <= n; ++j) {
      double tj = p.time(j);
      if (tj >= tb && i + 1 < sk.faces()) break;
      double gap = 0.0;
      if (tj > ta && tj < tb) {
        // Bridge step from (s, x) to (tj, .) pinned at (tb, 0).
        double f = (tb - tj) / (tb - s);
        double sd = std::sqrt((tj - s) * f);
        for (auto& c : x) c = c * f + sd * rng.normal();
        s = tj;
        gap = detail::norm3(x);
      }
      p.values[j] = sk.vertices[i].v + a * (tj - ta) - gap;
    }
  }
  return p;
}

/// Ends of the reversed pre-sigma_mu paths, read off the Williams vertex and
/// the face before it.
///
/// With X = B - mu t and s = sigma_mu, tilde(u) = (X(s) - X(s - us))/sqrt(s)
/// and hat(u) = tilde(u) + mu sqrt(s) u. Since s is a vertex of K, the
/// minslope of hat is sqrt(s) times the slope of the face ending at s.
struct MeanderEnds {
  double sigma;
  double tilde1;
  double hat1;
  double minslope_tilde;
  double minslope_hat;
};

inline MeanderEnds sample_meander_ends(double mu, RngStream& rng) {
  auto [s, bs] = sample_williams(mu, rng);
  double x = bs - mu * s;
  detail::BackwardVertex prev = detail::backward_step({s, x, x}, rng);
  double slope = (x - prev.x) / (s - prev.tau);  // in the X frame
  double rs = std::sqrt(s);
  return {s, x / rs, bs / rs, slope * rs, (slope + mu) * rs};
}

// ---------------------------------------------------------------------------
// Convex minorant of BES(3, mu)

struct BesselMinorant {
  enum class Construction { direct, poissonian };
  GridPath r;
  MajorantSkeleton c;
  Construction construction;
};

namespace detail {

/// Next face of the convex minorant of BES(3, mu) in order of increasing
/// slope. `s` is the slope in the unit-rate coordinate -log(1 - alpha/mu).
inline std::pair<double, double> next_bessel_face(double mu, double& s, RngStream& rng) {
  s += rng.exponential();
  double gap = mu * std::exp(-s);  // mu - alpha
  double z = rng.normal();
  return {mu - gap, z * z / (gap * gap)};
}

}  // namespace detail

/// Faces (slope, duration) of the convex minorant of BES(3, mu) from time 0
/// until their total duration exceeds T.
inline std::vector<std::pair<double, double>> sample_bessel_faces(double mu, double T,
                                                                  RngStream& rng) {
  detail::require(mu > 0.0 && T > 0.0, "sample_bessel_faces: mu and T must be positive");
  std::vector<std::pair<double, double>> faces;
  double s = 0.0, total = 0.0;
  while (total <= T) {
    if (faces.size() > static_cast<std::size_t>(detail::kMaxSteps))
      throw coverage_error("sample_bessel_faces: too many faces");
    auto f = detail::next_bessel_face(mu, s, rng);
    faces.push_back(f);
    total += f.second;
  }
  return faces;
}

/// BES(3, mu) on [0, T] with n steps, together with its convex minorant.
/// The direct construction simulates the path and takes the minorant of the
/// grid; the Poissonian one samples the faces and attaches excursions.
inline BesselMinorant bessel_minorant(double mu, double T, std::size_t n, RngStream& rng,
                                      BesselMinorant::Construction how) {
  detail::require(mu > 0.0 && T > 0.0, "bessel_minorant: mu and T must be positive");
  if (how == BesselMinorant::Construction::direct) {
    GridPath r = sample_bessel(3, 0.0, mu, n, T, rng);
    MajorantSkeleton c = convex_minorant(r);
    return {std::move(r), std::move(c), how};
  }
  auto faces = sample_bessel_faces(mu, T, rng);
  // Build the reflected majorant -C so the excursion machinery applies.
  MajorantSkeleton neg{{{0.0, 0.0}}, true};
  Vertex p{0.0, 0.0};
  for (auto [alpha, len] : faces) {
    p.t += len;
    p.v -= alpha * len;
    neg.vertices.push_back(p);
  }
  GridPath r = attach_excursions_on_grid(neg, 0.0, T / static_cast<double>(n), n, rng);
  for (double& v : r.values) v = -v;
  r.drift_tag = mu;
  MajorantSkeleton c{neg.vertices, false};
  for (auto& v : c.vertices) v.v = -v.v;
  return {std::move(r), std::move(c), how};
}

/// Exact (C'(t), R(t) - C(t), G_t, D_t) for BES(3, mu) from the face process.
struct MinorantAt {
  double slope;
  double gap;
  double g;
  double d;
  double value;  ///< C(t)
};

inline MinorantAt bessel_minorant_at(double mu, double t, RngStream& rng) {
  detail::require(mu > 0.0 && t > 0.0, "bessel_minorant_at: mu and t must be positive");
  double s = 0.0, g = 0.0, c = 0.0;
  for (int n = 0;; ++n) {
    if (n > detail::kMaxSteps) throw coverage_error("bessel_minorant_at: walk did not cover t");
    auto [alpha, len] = detail::next_bessel_face(mu, s, rng);
    if (g + len > t) {
      double d = g + len;
      double y = std::sqrt((t - g) * (d - t) / (d - g)) * rng.chi(3);
      return {alpha, y, g, d, c + alpha * (t - g)};
    }
    g += len;
    c += alpha * len;
  }
}

// ---------------------------------------------------------------------------
// Zenith increments and the Markov process Psi

/// (sigma_b - sigma_a, B(sigma_b) - B(sigma_a)) from the faces with slope in (b, a).
inline std::pair<double, double> zenith_increment(double a, double b, RngStream& rng) {
  detail::require(b > 0.0 && a > b, "zenith_increment: need 0 < b < a");
  double ds = 0.0, dz = 0.0;
  double l = std::log(1.0 / a), l_hi = std::log(1.0 / b);
  for (;;) {
    l += rng.exponential();
    if (l >= l_hi) break;
    double r = std::exp(l);
    double z = rng.normal();
    double dt = r * r * z * z;
    ds += dt;
    dz += dt / r;
  }
  return {ds, dz};
}

/// (K'(t), K(t), K(t) - B(t), D_t - t).
struct PsiState {
  double a;
  double k;
  double y;
  double w;
};

inline PsiState psi_from(const FixedTimeSample& f) { return {f.a, f.k, f.y, f.d - f.t}; }

/// Advance Psi by delta. Before the next vertex the gap is a BES(3) bridge
/// marginal; past it the majorant continues as a reflected convex minorant of
/// BES(3, a), sampled from its face process.
inline PsiState psi_step(const PsiState& st, double delta, RngStream& rng) {
  detail::require(delta > 0.0, "psi_step: delta must be positive");
  detail::require(st.a > 0.0 && st.w > 0.0 && st.y >= 0.0, "psi_step: invalid state");
  if (delta < st.w) {
    double z = sample_bessel_bridge_marginal(st.w, st.y, 0.0, delta, rng);
    return {st.a, st.k + st.a * delta, z, st.w - delta};
  }
  double u = delta - st.w;
  if (u == 0.0) {
    // Exactly at the vertex: the next face starts here.
    double s = 0.0;
    auto [alpha, len] = detail::next_bessel_face(st.a, s, rng);
    return {st.a - alpha, st.k + st.a * delta, 0.0, len};
  }
  MinorantAt m = bessel_minorant_at(st.a, u, rng);
  return {st.a - m.slope, st.k + st.a * delta - m.value, m.gap, m.d - u};
}

}  // namespace cmlab
