#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cmlab/error.hpp"
#include "cmlab/geometry.hpp"
#include "cmlab/poisson.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

/// Vertex n of K before sigma_1, counted backward: (tau_n, kappa_n, rho_n).
struct ChainState {
  double tau;
  double kappa;
  double rho;
};

/// One deterministic step of the (tau, rho)-recursion with given (U, Z).
inline std::pair<double, double> tau_rho_step(double tau, double rho, double u, double z) {
  detail::require(tau > 0.0 && rho > 0.0, "tau_rho_step: tau and rho must be positive");
  detail::require(u > 0.0 && u < 1.0, "tau_rho_step: u must lie in (0,1)");
  double r = u * rho;
  return {tau * r * r / (tau * z * z + r * r), r};
}

inline std::pair<double, double> tau_rho_step(double tau, double rho, RngStream& rng) {
  double u = rng.uniform();
  double z = rng.normal();
  return tau_rho_step(tau, rho, u, z);
}

/// The law-preserving map on (0,inf)^3 x (0,1).
inline std::array<double, 4> theorem_map(double t, double r, double q, double u) {
  if (!(t > 0.0 && r > 0.0 && q > 0.0 && u > 0.0 && u < 1.0))
    throw parameter_error("theorem_map: need t, r, q > 0 and 0 < u < 1");
  double s = t + q;
  return {u * u * s, u * (1.0 - u) * s + u * r, r * r * q / (t * s), r / (r + (1.0 - u) * s)};
}

/// Vertices tau_0 = sigma_1 > tau_1 > ... > tau_m of a majorant skeleton of B
/// (slope 1 frame). rho_0 is the intercept of the slope-1 line through the
/// vertex at sigma_1; for n >= 1 rho_n is the intercept of the face between
/// tau_n and tau_{n-1}.
inline std::vector<ChainState> extract_chain(const MajorantSkeleton& sk, std::size_t m) {
  const auto& v = sk.vertices;
  if (v.size() < 2) throw input_error("extract_chain: skeleton has no faces");
  // sigma_1: rightmost maximizer of K(t) - t, the first vertex whose right
  // face has slope < 1 (or the last vertex).
  std::size_t i0 = v.size() - 1;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (sk.slope(i) < 1.0) {
      i0 = i;
      break;
    }
  }
  if (i0 + 1 == v.size()) throw coverage_error("extract_chain: skeleton ends before sigma_1");
  // Only vertices at strictly positive times are genuine vertices of K.
  std::size_t first = v.front().t > 0.0 ? 0 : 1;
  if (i0 < first + m)
    throw coverage_error("extract_chain: need " + std::to_string(first + m - i0) +
                         " more vertices before sigma_1; widen the construction");
  std::vector<ChainState> out;
  out.reserve(m + 1);
  out.push_back({v[i0].t, v[i0].v, v[i0].v - v[i0].t});
  for (std::size_t n = 1; n <= m; ++n) {
    std::size_t i = i0 - n;
    double s = sk.slope(i);
    out.push_back({v[i].t, v[i].v, v[i].v - s * v[i].t});
  }
  return out;
}

inline std::vector<ChainState> extract_chain(const GridPath& path, std::size_t m) {
  return extract_chain(concave_majorant(path), m);
}

/// Skeleton of K around sigma_1 with at least m + 1 faces of slope > 1.
///
/// Inverse slopes below 1 are products of uniforms (the face process is
/// unit-rate in log r). Everything before the (m+1)-th face is summarized
/// exactly by the Williams sample at slope 1/r_{m+1}, which becomes the
/// first vertex. One face of slope < 1 is appended after sigma_1.
inline MajorantSkeleton sample_chain_skeleton(std::size_t m, RngStream& rng) {
  std::vector<double> r(m + 1);
  double x = 1.0;
  for (auto& ri : r) {
    x *= rng.uniform();
    ri = x;
  }
  auto [s, kv] = sample_williams(1.0 / r.back(), rng);
  MajorantSkeleton sk{{{s, kv}}, true};
  for (std::size_t i = r.size(); i-- > 0;) {
    double z = rng.normal();
    double d = r[i] * r[i] * z * z;
    s += d;
    kv += d / r[i];
    sk.vertices.push_back({s, kv});
  }
  double ru = std::exp(rng.exponential());
  double z = rng.normal();
  double d = ru * ru * z * z;
  sk.vertices.push_back({s + d, kv + d / ru});
  return sk;
}

}  // namespace cmlab
