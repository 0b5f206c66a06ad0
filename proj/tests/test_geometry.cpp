#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cmlab/distributions.hpp"
#include "cmlab/geometry.hpp"
#include "cmlab/paths.hpp"
#include "cmlab/stats.hpp"

using namespace cmlab;
using Catch::Approx;

namespace {

/// O(n^3) oracle: majorant value at each point and its extreme points.
struct BruteHull {
  std::vector<double> value;
  std::vector<bool> vertex;
};

BruteHull brute_majorant(const std::vector<double>& t, const std::vector<double>& v) {
  std::size_t n = t.size();
  BruteHull h{std::vector<double>(n), std::vector<bool>(n, false)};
  for (std::size_t i = 0; i < n; ++i) {
    double best = v[i];
    bool interior = false;
    for (std::size_t j = 0; j < i; ++j)
      for (std::size_t k = i + 1; k < n; ++k) {
        double c = v[j] + (v[k] - v[j]) * (t[i] - t[j]) / (t[k] - t[j]);
        if (c > best + 1e-12) best = c;
        if (c >= v[i] - 1e-12) interior = true;
      }
    h.value[i] = best;
    h.vertex[i] = !interior && best <= v[i] + 1e-12;
  }
  return h;
}

void check_against_brute(const std::vector<double>& t, const std::vector<double>& v) {
  auto sk = concave_majorant(t, v);
  auto bh = brute_majorant(t, v);
  std::vector<bool> is_vertex(t.size(), false);
  std::size_t at = 0;
  for (const auto& p : sk.vertices) {
    while (at < t.size() && t[at] != p.t) ++at;
    REQUIRE(at < t.size());
    is_vertex[at] = true;
    CHECK(p.v == v[at]);
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(sk(t[i]) == Approx(bh.value[i]).margin(1e-12));
    CHECK(is_vertex[i] == bh.vertex[i]);
  }
  for (std::size_t f = 1; f < sk.faces(); ++f) CHECK(sk.slope(f) < sk.slope(f - 1));
}

}  // namespace

TEST_CASE("hull on the reference four points") {
  std::vector<double> t{0, 1, 2, 3}, v{0, 2, 1, 3};
  auto sk = concave_majorant(t, v);
  REQUIRE(sk.vertices.size() == 3);
  CHECK(sk.vertices[0].t == 0);
  CHECK(sk.vertices[1].t == 1);
  CHECK(sk.vertices[1].v == 2);
  CHECK(sk.vertices[2].t == 3);
  CHECK_THROWS_AS(concave_majorant(std::vector<double>{0}, std::vector<double>{0}), input_error);
}

TEST_CASE("hull matches brute force on random small inputs") {
  RngStream rng(1, 0);
  for (std::size_t n = 2; n <= 12; ++n)
    for (int rep = 0; rep < 400; ++rep) {
      std::vector<double> t(n), v(n);
      for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<double>(i);
        v[i] = rep % 2 ? rng.normal() : std::round(3 * rng.uniform());
      }
      check_against_brute(t, v);
    }
}

TEST_CASE("hull matches brute force on every small integer pattern") {
  // All value patterns in {0,1,2}^n for n <= 7; many collinear ties.
  for (std::size_t n = 2; n <= 7; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> t(n), v(n);
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<double>(i);
        v[i] = static_cast<double>(c % 3);
        c /= 3;
      }
      check_against_brute(t, v);
    }
  }
}

TEST_CASE("concave data is returned unchanged") {
  std::vector<double> t{0, 1, 2, 3, 4}, v{0, 3, 5, 6, 6.5};
  auto sk = concave_majorant(t, v);
  REQUIRE(sk.vertices.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(sk.vertices[i].v == v[i]);
  auto cm = convex_minorant(t, std::vector<double>{0, 1, 3, 6, 10});
  CHECK(cm.vertices.size() == 5);
  CHECK_FALSE(cm.concave);
}

TEST_CASE("reflection duality between majorant and minorant") {
  RngStream rng(2, 0);
  for (int rep = 0; rep < 50; ++rep) {
    GridPath p = sample_bm(500, 1.0, 0.0, rng);
    GridPath q = p;
    for (double& x : q.values) x = -x;
    auto m = concave_majorant(q);
    auto c = convex_minorant(p);
    REQUIRE(m.vertices.size() == c.vertices.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
      CHECK(c.vertices[i].t == m.vertices[i].t);
      CHECK(c.vertices[i].v == -m.vertices[i].v);
    }
  }
}

TEST_CASE("domination and touching on brownian paths") {
  RngStream rng(3, 0);
  for (int rep = 0; rep < 50; ++rep) {
    GridPath p = sample_bm(4096, 1.0, 0.0, rng);
    auto sk = concave_majorant(p);
    CHECK(domination_violation(sk, p) <= 1e-12);
    for (const auto& vx : sk.vertices) {
      auto i = static_cast<std::size_t>(std::llround((vx.t - p.t0) / p.dt));
      CHECK(vx.v == p.values[i]);
    }
    // Minimality: dropping an interior vertex leaves that point uncovered.
    for (std::size_t k = 1; k + 1 < sk.vertices.size(); ++k) {
      const auto& a = sk.vertices[k - 1];
      const auto& b = sk.vertices[k + 1];
      double chord = a.v + (b.v - a.v) * (sk.vertices[k].t - a.t) / (b.t - a.t);
      CHECK(sk.vertices[k].v > chord);
    }
  }
}

TEST_CASE("straddle") {
  MajorantSkeleton sk{{{0, 0}, {1, 2}, {3, 3}}, true};
  auto s = straddle(sk, 2.0);
  CHECK(s.g == 1);
  CHECK(s.d == 3);
  CHECK(s.slope == 0.5);
  CHECK(s.value == 2.5);
  CHECK(s.intercept == 1.5);
  CHECK(s.intercept == Approx(s.value - 2.0 * s.slope).margin(1e-12));
  auto v = straddle(sk, 1.0);
  CHECK(v.slope == 0.5);
  CHECK(v.g == 1);
  CHECK_THROWS_AS(straddle(sk, 3.0), range_error);
  CHECK_THROWS_AS(straddle(sk, -0.1), range_error);
  GridPath p{0.0, 1.0, {0.0, 2.0, 1.0, 3.0}, std::nullopt};
  CHECK(straddle(sk, 2.0, p).gap == Approx(1.5));
}

TEST_CASE("sigma_mu on a tent and on ties") {
  GridPath tent{0.0, 0.25, {}, std::nullopt};
  for (int i = 0; i <= 8; ++i) {
    double t = i * 0.25;
    tent.values.push_back(std::min(t, 2.0 - t));
  }
  auto r = sigma_mu(tent, 0.5);
  CHECK(r.time == 1.0);
  CHECK_FALSE(r.horizon_warning);
  GridPath line{0.0, 0.25, {0.0, 0.125, 0.25, 0.375, 0.5}, std::nullopt};
  auto l = sigma_mu(line, 0.5);
  CHECK(l.index == 4);
  CHECK(l.horizon_warning);
  CHECK_THROWS_AS(sigma_mu(tent, 0.0), parameter_error);
}

TEST_CASE("sigma_mu on brownian paths follows the williams law") {
  // Grid maximizers near time 0 are biased by O(sqrt(dt)), so compare the
  // conditional law given mu^2 sigma > 0.1.
  RngStream rng(4, 0);
  double c = 0.1, fc = williams_time_cdf(c);
  std::vector<double> s;
  for (int i = 0; i < 10000; ++i) {
    auto r = sigma_mu(sample_bm(1 << 13, 16.0, 0.0, rng), 1.0);
    CHECK_FALSE(r.horizon_warning);
    if (r.time > c) s.push_back(r.time);
  }
  CHECK(std::abs(static_cast<double>(s.size()) - 1e4 * (1 - fc)) < 4 * std::sqrt(1e4 * fc * (1 - fc)));
  CHECK(ks_test(s, [&](double x) { return (williams_time_cdf(x) - fc) / (1 - fc); }).pass);
}

TEST_CASE("minslope on deterministic grids") {
  GridPath id{0.0, 0.125, {}, std::nullopt};
  GridPath sq = id, cc = id;
  for (int i = 0; i <= 8; ++i) {
    double u = i * 0.125;
    id.values.push_back(u);
    sq.values.push_back(u * u);
    cc.values.push_back(std::sqrt(u));
  }
  auto a = minslope(id);
  CHECK(a.m == Approx(1.0));
  CHECK(a.b == 1.0);
  auto b = minslope(sq);
  CHECK(b.m == Approx(0.125));
  CHECK(b.b == 0.125);
  auto c = minslope(cc);
  CHECK(c.m == Approx(1.0));
  CHECK(c.b == 1.0);
  GridPath neg = id;
  neg.values[3] = -1;
  CHECK_THROWS_AS(minslope(neg), input_error);
}

TEST_CASE("meanders") {
  RngStream rng(5, 0);
  double mu = 1.0;
  for (int i = 0; i < 20; ++i) {
    GridPath p = sample_bm(1 << 12, 16.0, 0.0, rng);
    if (sigma_mu(p, mu).index == 0) {
      CHECK_THROWS_AS(meanders(p, mu, 1024), input_error);
      continue;
    }
    auto m = meanders(p, mu, 1024);
    CHECK(m.tilde.values[0] == 0.0);
    CHECK(m.hat.values[0] == 0.0);
    CHECK(m.tilde.values.size() == 1025);
    for (double x : m.tilde.values) CHECK(x >= -1e-12);
    for (std::size_t j = 0; j <= 1024; ++j)
      CHECK(m.hat.values[j] ==
            Approx(m.tilde.values[j] + mu * std::sqrt(m.sigma) * j / 1024.0).margin(1e-12));
  }
}

TEST_CASE("quadratic variation") {
  RngStream rng(6, 0);
  GridPath lin{0.0, 1.0 / 1024, {}, std::nullopt};
  for (int i = 0; i <= 1024; ++i) lin.values.push_back(2.0 * i / 1024.0);
  CHECK(quadratic_variation(lin) == Approx(4.0 / 1024).epsilon(1e-9));
  std::vector<double> qv;
  for (int i = 0; i < 200; ++i) {
    double q = quadratic_variation(sample_bm(1 << 16, 1.0, 0.0, rng));
    CHECK(std::abs(q - 1.0) < 0.02);
    qv.push_back(q);
  }
  CHECK(mean_check(qv, 1.0).pass);
}
