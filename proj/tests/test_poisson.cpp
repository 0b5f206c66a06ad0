#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <vector>

#include "cmlab/distributions.hpp"
#include "cmlab/geometry.hpp"
#include "cmlab/poisson.hpp"
#include "cmlab/quadrature.hpp"
#include "cmlab/stats.hpp"

using namespace cmlab;
using Catch::Approx;

namespace {

auto beta_cdf(double a, double b) {
  return [a, b](double x) {
    return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : boost::math::ibeta(a, b, x));
  };
}

/// CDF of |m e1 + s W| for W standard 3D normal.
double ncx3_cdf(double m, double s, double z) {
  if (z <= 0.0) return 0.0;
  double u = (z - m) / s, v = (z + m) / s;
  return normal_cdf(u) - normal_cdf(-v) - s / m * (normal_pdf(u) - normal_pdf(v));
}

}  // namespace

TEST_CASE("tau window counts are poisson in log r") {
  RngStream rng(1, 0);
  std::vector<long> counts;
  double lo = 0.2, hi = 3.0;
  for (int i = 0; i < 20000; ++i) {
    auto tj = sample_tau_window(lo, hi, rng);
    counts.push_back(static_cast<long>(tj.jumps.size()));
    for (std::size_t j = 0; j < tj.jumps.size(); ++j) {
      CHECK(tj.jumps[j].r > lo);
      CHECK(tj.jumps[j].r < hi);
      if (j) CHECK(tj.jumps[j].r > tj.jumps[j - 1].r);
    }
  }
  CHECK(poisson_count_test(counts, std::log(hi / lo)).pass);
  CHECK_THROWS_AS(sample_tau_window(1.0, 1.0, rng), parameter_error);
}

TEST_CASE("face durations are r^2 chi_1^2") {
  RngStream rng(2, 0);
  std::vector<double> u;
  for (int i = 0; i < 5000; ++i)
    for (const auto& j : sample_tau_window(0.5, 2.0, rng).jumps) u.push_back(j.dtau / (j.r * j.r));
  CHECK(ks_test(u, [](double x) { return chi_sq_cdf(1, x); }).pass);
}

TEST_CASE("assemble_K concatenates faces by decreasing slope") {
  TauJumps tj{{{0.5, 1.0}, {2.0, 4.0}}, 0.1, 3.0};
  auto sk = assemble_K(tj);
  REQUIRE(sk.vertices.size() == 3);
  CHECK(sk.vertices[1].t == 1.0);
  CHECK(sk.vertices[1].v == 2.0);
  CHECK(sk.vertices[2].t == 5.0);
  CHECK(sk.vertices[2].v == 4.0);
  CHECK(sk.slope(0) == 2.0);
  CHECK(sk.slope(1) == 0.5);
  CHECK_THROWS_AS(assemble_K(TauJumps{}), coverage_error);
}

TEST_CASE("williams sample marginals") {
  RngStream rng(3, 0);
  double mu = 2.5;
  std::vector<double> s, v;
  for (int i = 0; i < 100000; ++i) {
    auto [t, b] = sample_williams(mu, rng);
    s.push_back(mu * mu * t);
    v.push_back(mu * b);
  }
  CHECK(ks_test(s, williams_time_cdf).pass);
  CHECK(ks_test(v, williams_value_cdf).pass);
}

TEST_CASE("straddle at t = 1") {
  RngStream rng(4, 0);
  std::vector<double> z, ys, as, bs;
  for (int i = 0; i < 100000; ++i) {
    auto f = straddle_time_one(rng);
    REQUIRE(f.g < 1.0);
    REQUIRE(f.d > 1.0);
    REQUIRE(f.a > 0.0);
    REQUIRE(f.intercept() > 0.0);
    double s = f.two_k_minus_b();
    z.push_back(s);
    ys.push_back(f.y / s);
    as.push_back(f.a / s);
    bs.push_back(f.intercept() / s);
  }
  CHECK(ks_test(z, [](double x) { return chi_cdf(5, x); }).pass);
  // Given the sum, (a, b, y) has density proportional to y on the simplex.
  CHECK(ks_test(ys, beta_cdf(2, 2)).pass);
  CHECK(ks_test(as, beta_cdf(1, 3)).pass);
  CHECK(ks_test(bs, beta_cdf(1, 3)).pass);
}

TEST_CASE("straddle obeys brownian scaling") {
  RngStream rng(5, 0);
  double t = 3.0, c = std::sqrt(t);
  std::vector<double> a1, at, k1, kt;
  for (int i = 0; i < 50000; ++i) {
    auto f = straddle_time_one(rng);
    auto g = straddle_at(t, rng);
    a1.push_back(f.a);
    at.push_back(g.a * c);
    k1.push_back(f.k);
    kt.push_back(g.k / c);
  }
  CHECK(ks_test(a1, at).pass);
  CHECK(ks_test(k1, kt).pass);
  // Small and large t exercise the two walks.
  int steps = 0;
  straddle_at(1e-6, rng, &steps);
  CHECK(steps >= 0);
  CHECK_NOTHROW(straddle_at(1e6, rng));
}

TEST_CASE("majorant cover agrees with the fixed-time straddle") {
  RngStream rng(6, 0);
  std::vector<double> a_cover, a_direct;
  for (int i = 0; i < 30000; ++i) {
    auto sk = sample_majorant_cover(0.0, 2.0, rng);
    REQUIRE(sk.start() == 0.0);
    REQUIRE(sk.end() > 2.0);
    for (std::size_t f = 1; f < sk.faces(); ++f) REQUIRE(sk.slope(f) < sk.slope(f - 1));
    a_cover.push_back(straddle(sk, 1.0).slope);
    a_direct.push_back(straddle_time_one(rng).a);
  }
  CHECK(ks_test(a_cover, a_direct).pass);
  auto sk = sample_majorant_cover(0.5, 1.0, rng);
  CHECK(sk.start() < 0.5);
}

TEST_CASE("excursions reconstruct brownian motion") {
  RngStream rng(7, 0);
  auto sk = sample_majorant_cover(0.0, 1.0, rng);
  auto pieces = attach_excursions(sk, 64, rng);
  REQUIRE(pieces.size() == sk.faces());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    CHECK(pieces[i].values.front() == sk.vertices[i].v);
    CHECK(pieces[i].values.back() == sk.vertices[i + 1].v);
    for (std::size_t j = 0; j < pieces[i].values.size(); ++j)
      CHECK(pieces[i].values[j] <= sk(pieces[i].time(j)) + 1e-12);
  }

  // Increments of the reconstructed path on a grid are iid N(0, 1/2).
  std::vector<double> b1, inc, prod;
  for (int i = 0; i < 40000; ++i) {
    auto c = sample_majorant_cover(0.0, 2.0, rng);
    GridPath p = attach_excursions_on_grid(c, 0.0, 0.5, 4, rng);
    REQUIRE(p.values[0] == 0.0);
    b1.push_back(p.values[2]);
    inc.push_back(p.values[4] - p.values[2]);
    prod.push_back((p.values[1] - p.values[0]) * (p.values[3] - p.values[2]));
  }
  CHECK(ks_test(b1, normal_cdf).pass);
  CHECK(ks_test(inc, normal_cdf).pass);
  CHECK(mean_check(prod, 0.0).pass);
  CHECK_THROWS_AS(attach_excursions_on_grid(sk, -1.0, 0.5, 4, rng), range_error);
}

TEST_CASE("bessel minorant faces and fixed-time values") {
  RngStream rng(8, 0);
  double mu = 2.0, t = 1.0;
  std::vector<double> r;
  std::vector<long> counts;
  double a1 = 0.5, a2 = 1.5;
  for (int i = 0; i < 40000; ++i) {
    auto m = bessel_minorant_at(mu, t, rng);
    REQUIRE(m.g < t);
    REQUIRE(m.d > t);
    REQUIRE(m.slope < mu);
    r.push_back(m.value + m.gap);
    long c = 0;
    for (auto [alpha, len] : sample_bessel_faces(mu, 1e9, rng)) {
      if (alpha > a2) break;
      if (alpha > a1) ++c;
    }
    counts.push_back(c);
  }
  CHECK(ks_test(r, [&](double z) { return ncx3_cdf(mu * t, std::sqrt(t), z); }).pass);
  CHECK(poisson_count_test(counts, std::log((mu - a1) / (mu - a2))).pass);
}

TEST_CASE("bessel minorant constructions") {
  RngStream rng(9, 0);
  double mu = 2.0, T = 1.0;
  auto d = bessel_minorant(mu, T, 256, rng, BesselMinorant::Construction::direct);
  CHECK_FALSE(d.c.concave);
  CHECK(d.r.values.front() == 0.0);
  std::vector<double> end;
  for (int i = 0; i < 20000; ++i) {
    auto p = bessel_minorant(mu, T, 8, rng, BesselMinorant::Construction::poissonian);
    REQUIRE(p.r.values.front() == 0.0);
    for (std::size_t j = 0; j < p.r.values.size(); ++j)
      REQUIRE(p.r.values[j] >= p.c(p.r.time(j)) - 1e-12);
    end.push_back(p.r.values.back());
  }
  CHECK(ks_test(end, [&](double z) { return ncx3_cdf(mu * T, std::sqrt(T), z); }).pass);
}

TEST_CASE("zenith increments") {
  RngStream rng(10, 0);
  double a = 2.0, b = 0.5;
  std::vector<double> ds, dz;
  long atoms = 0;
  int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto [s, z] = zenith_increment(a, b, rng);
    if (s == 0.0) {
      ++atoms;
      continue;
    }
    REQUIRE(z > b * s);
    REQUIRE(z < a * s);
    ds.push_back(s);
    dz.push_back(z);
  }
  double p = b / a;
  CHECK(std::abs(atoms - n * p) < 4 * std::sqrt(n * p * (1 - p)));
  std::vector<double> all_s = ds, all_z = dz;
  all_s.resize(n, 0.0);
  all_z.resize(n, 0.0);
  CHECK(mean_check(all_s, 0.5 * (1 / (b * b) - 1 / (a * a))).pass);
  CHECK(mean_check(all_z, 1 / b - 1 / a).pass);
  // Continuous part against the density, binned in (ds, dz/ds).
  PointSet pts{2, {}};
  for (std::size_t i = 0; i < ds.size(); ++i) pts.push({ds[i], dz[i] / ds[i]});
  auto edges = quantile_edges(pts, 5);
  auto box = [&](std::span<const double> lo, std::span<const double> hi) {
    double m0 = std::max(lo[1], b), m1 = std::min(hi[1], a);
    auto inner = [&](double s) {
      return quad::integrate([&](double m) { return zenith_density(a, b, s, m * s) * s; }, m0, m1,
                             1e-10);
    };
    double s0 = std::max(lo[0], 0.0);
    if (std::isinf(hi[0])) return quad::integrate_tail(inner, s0, 1e-9);
    return quad::integrate(inner, s0, hi[0], 1e-9);
  };
  CHECK(chi_square_gof(pts, edges, box, 1e-3, 1 - p).pass);
}

TEST_CASE("psi steps agree with the fixed-time law") {
  RngStream rng(11, 0);
  std::vector<double> a, sum, a_ref, sum_ref;
  int before = 0, after = 0;
  double delta = 1.0;
  for (int i = 0; i < 40000; ++i) {
    auto f = straddle_time_one(rng);
    PsiState st = psi_from(f);
    CHECK(st.w == f.d - 1.0);
    (delta < st.w ? before : after)++;
    PsiState nx = psi_step(st, delta, rng);
    REQUIRE(nx.a > 0.0);
    REQUIRE(nx.w > 0.0);
    a.push_back(nx.a);
    sum.push_back(nx.k + nx.y);
    auto g = straddle_at(1.0 + delta, rng);
    a_ref.push_back(g.a);
    sum_ref.push_back(g.two_k_minus_b());
  }
  CHECK(before > 1000);
  CHECK(after > 1000);
  CHECK(ks_test(a, a_ref).pass);
  CHECK(ks_test(sum, sum_ref).pass);
  CHECK(ks_test(sum, [&](double x) { return chi_cdf(5, x / std::sqrt(1.0 + delta)); }).pass);
  CHECK_THROWS_AS(psi_step(PsiState{1, 1, 1, 1}, 0.0, rng), parameter_error);
}

TEST_CASE("meander ends from the face before sigma") {
  RngStream rng(31, 0);
  const double mu = 1.3;
  std::size_t n = 20000;
  std::vector<double> tilde(n), ratio(n);
  for (std::size_t i = 0; i < n; ++i) {
    MeanderEnds m = sample_meander_ends(mu, rng);
    REQUIRE(m.sigma > 0.0);
    double shift = mu * std::sqrt(m.sigma);
    // The two frames differ by the drift line.
    CHECK(m.hat1 - m.tilde1 == Approx(shift).margin(1e-12));
    CHECK(m.minslope_hat - m.minslope_tilde == Approx(shift).margin(1e-12));
    // The infimum of f(u)/u is at most its value at u = 1.
    CHECK(m.minslope_tilde > 0.0);
    CHECK(m.minslope_tilde <= m.tilde1 + 1e-12);
    CHECK(m.minslope_hat <= m.hat1 + 1e-12);
    tilde[i] = m.tilde1;
    ratio[i] = m.minslope_hat / m.hat1;
  }
  CHECK(ks_test(tilde, meander_end_cdf).pass);
  CHECK(ks_test(ratio, beta21_cdf).pass);
}
