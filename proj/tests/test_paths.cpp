#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cmlab/distributions.hpp"
#include "cmlab/paths.hpp"
#include "cmlab/stats.hpp"

using namespace cmlab;
using Catch::Approx;

namespace {

std::vector<double> midpoints(int reps, auto make) {
  std::vector<double> v;
  v.reserve(reps);
  for (int i = 0; i < reps; ++i) {
    GridPath p = make();
    v.push_back(p.values[p.steps() / 2]);
  }
  return v;
}

}  // namespace

TEST_CASE("brownian motion grid") {
  RngStream rng(1, 0);
  GridPath p = sample_bm(16, 2.0, 0.0, rng);
  CHECK(p.values.size() == 17);
  CHECK(p.values[0] == 0.0);
  CHECK(p.horizon() == Approx(2.0));
  std::vector<double> end0, end1;
  for (int i = 0; i < 100000; ++i) {
    end0.push_back(sample_bm(8, 2.0, 0.0, rng).values.back());
    end1.push_back(sample_bm(8, 2.0, 1.5, rng).values.back());
  }
  std::vector<double> sq;
  for (double x : end0) sq.push_back(x * x);
  CHECK(mean_check(sq, 2.0).pass);
  CHECK(mean_check(end1, 3.0).pass);
  CHECK_THROWS_AS(sample_bm(0, 1.0, 0.0, rng), parameter_error);
  CHECK_THROWS_AS(sample_bm(4, 0.0, 0.0, rng), parameter_error);
}

TEST_CASE("brownian bridge grid") {
  RngStream rng(2, 0);
  GridPath p = sample_bridge(32, 3.0, 0.5, -1.25, rng);
  CHECK(p.values.front() == 0.5);
  CHECK(p.values.back() == -1.25);
  auto mid = midpoints(100000, [&] { return sample_bridge(16, 2.0, 0.0, 0.0, rng); });
  std::vector<double> sq;
  for (double x : mid) sq.push_back(x * x);
  CHECK(mean_check(sq, 0.5).pass);
  CHECK(ks_test(mid, [](double x) { return normal_cdf(x / std::sqrt(0.5)); }).pass);
}

TEST_CASE("excursion marginal") {
  RngStream rng(3, 0);
  GridPath e = sample_excursion(64, rng);
  CHECK(e.values.front() == 0.0);
  CHECK(e.values.back() == 0.0);
  for (std::size_t i = 1; i < 64; ++i) CHECK(e.values[i] > 0.0);
  auto mid = midpoints(100000, [&] { return sample_excursion(8, rng); });
  CHECK(ks_test(mid, [](double x) { return chi_cdf(3, x / 0.5); }).pass);
  std::vector<double> sq;
  for (double x : mid) sq.push_back(x * x);
  CHECK(mean_check(sq, 0.75).pass);
}

TEST_CASE("bessel processes") {
  RngStream rng(4, 0);
  std::vector<double> r3, r5sq;
  for (int i = 0; i < 100000; ++i) {
    r3.push_back(sample_bessel(3, 0.0, 0.0, 4, 1.0, rng).values.back());
    double x = sample_bessel(5, 0.0, 0.0, 4, 1.0, rng).values.back();
    r5sq.push_back(x * x);
  }
  CHECK(ks_test(r3, [](double x) { return chi_cdf(3, x); }).pass);
  CHECK(mean_check(r5sq, 5.0).pass);
  CHECK(sample_bessel(3, 2.0, 0.0, 4, 1e-9, rng).values.front() == 2.0);
  CHECK_THROWS_AS(sample_bessel(5, 0.0, 1.0, 4, 1.0, rng), parameter_error);
  CHECK_THROWS_AS(sample_bessel(4, 0.0, 0.0, 4, 1.0, rng), parameter_error);
}

TEST_CASE("bessel with drift from a positive start") {
  // |x0 + W(t) + mu t e| with e uniform on the sphere: condition on the
  // cosine c between x0 and e, then the norm is a noncentral chi_3.
  double r0 = 1.0, mu = 2.0, t = 0.5;
  auto ncx3_pdf = [t](double m, double z) {
    if (m < 1e-12) return chi_pdf(3, z / std::sqrt(t)) / std::sqrt(t);
    return z / (m * std::sqrt(2 * std::numbers::pi * t)) *
           (std::exp(-(z - m) * (z - m) / (2 * t)) - std::exp(-(z + m) * (z + m) / (2 * t)));
  };
  auto dens = [&](double z) {
    return quad::integrate(
        [&](double c) {
          double m = std::sqrt(r0 * r0 + mu * mu * t * t + 2 * r0 * mu * t * c);
          return 0.5 * ncx3_pdf(m, z);
        },
        -1.0, 1.0, 1e-10);
  };
  auto cdf = [&](double z) { return quad::integrate(dens, 0.0, z, 1e-9); };
  RngStream rng(5, 0);
  std::vector<double> a;
  for (int i = 0; i < 20000; ++i) a.push_back(sample_bessel(3, r0, mu, 4, t, rng).values.back());
  CHECK(ks_test(a, cdf).pass);
}

TEST_CASE("bessel bridges") {
  RngStream rng(6, 0);
  GridPath w = sample_bessel_bridge(2.0, 0.7, 1.3, 32, rng);
  CHECK(w.values.front() == 0.7);
  CHECK(w.values.back() == 1.3);
  CHECK_THROWS_AS(sample_bessel_bridge(1.0, -1.0, 0.0, 4, rng), parameter_error);

  auto m1 = midpoints(50000, [&] { return sample_bessel_bridge(1.0, 0.0, 0.0, 8, rng); });
  auto m2 = midpoints(50000, [&] { return sample_excursion(8, rng); });
  CHECK(ks_test(m1, m2).pass);
  auto m3 = midpoints(50000, [&] { return sample_bessel_bridge(4.0, 0.0, 0.0, 8, rng); });
  CHECK(ks_test(m3, [](double x) { return chi_cdf(3, x / 1.0); }).pass);

  // Bridge from x > 0 to y > 0: the marginal at t must match the BES(3)
  // transition densities, p_t(x,z) p_{a-t}(z,y) / p_a(x,y).
  double x = 0.8, y = 1.1, a = 1.0, t = 0.4;
  auto p3 = [](double s, double u, double v) {
    return v / u / std::sqrt(2 * std::numbers::pi * s) *
           (std::exp(-(v - u) * (v - u) / (2 * s)) - std::exp(-(v + u) * (v + u) / (2 * s)));
  };
  auto dens = [&](double z) { return p3(t, x, z) * p3(a - t, z, y) / p3(a, x, y); };
  auto cdf = [&](double z) { return quad::integrate(dens, 0.0, z, 1e-10); };
  CHECK(quad::integrate_tail(dens, 0.0) == Approx(1.0).margin(1e-8));
  std::vector<double> grid_m, direct_m;
  for (int i = 0; i < 20000; ++i) {
    GridPath p = sample_bessel_bridge(a, x, y, 10, rng);
    grid_m.push_back(p.values[4]);
    direct_m.push_back(sample_bessel_bridge_marginal(a, x, y, t, rng));
  }
  CHECK(ks_test(grid_m, cdf).pass);
  CHECK(ks_test(direct_m, cdf).pass);
}

TEST_CASE("first passage bridge") {
  RngStream rng(7, 0);
  for (int k = 0; k < 200; ++k) {
    GridPath f = sample_fp_bridge(1.0, 1.0, 64, rng);
    CHECK(f.values.back() == 1.0);
    CHECK(f.values.front() == 0.0);
    double mx = *std::max_element(f.values.begin(), f.values.end() - 1);
    CHECK(mx < 1.0);
  }
  auto a = midpoints(50000, [&] { return sample_fp_bridge(1.0, 1.0, 8, rng); });
  auto b = midpoints(50000, [&] { return sample_bessel_bridge(1.0, 1.0, 0.0, 8, rng); });
  for (double& v : b) v = 1.0 - v;
  CHECK(ks_test(a, b).pass);
}

TEST_CASE("brownian scaling of grid paths") {
  RngStream rng(8, 0);
  double c = 1.7;
  std::vector<double> a, b;
  for (int i = 0; i < 50000; ++i) {
    a.push_back(c * sample_bm(8, 1.0, 0.0, rng).values[4]);
    b.push_back(sample_bm(8, c * c, 0.0, rng).values[4]);
  }
  CHECK(ks_test(a, b).pass);
}

TEST_CASE("noncentral chi3 mean") {
  RngStream rng(9, 0);
  for (auto [m, s] : {std::pair{0.0, 1.0}, {1.3, 0.4}, {0.2, 2.0}}) {
    std::vector<double> v;
    for (int i = 0; i < 200000; ++i) {
      double x = m + s * rng.normal(), y = s * rng.normal(), z = s * rng.normal();
      v.push_back(std::sqrt(x * x + y * y + z * z));
    }
    CHECK(mean_check(v, noncentral_chi3_mean(m, s)).pass);
  }
}

TEST_CASE("infimum of BES(3) from r is uniform on [0, r]") {
  RngStream rng(10, 0);
  std::vector<double> u;
  for (int i = 0; i < 5000; ++i) {
    double r = rng.chi(3);
    u.push_back(sample_bes3_infimum(r, rng) / r);
  }
  CHECK(ks_test(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).pass);
}

TEST_CASE("grid path interpolation") {
  GridPath p{1.0, 0.5, {0.0, 1.0, 3.0}, std::nullopt};
  CHECK(p.at(1.25) == Approx(0.5));
  CHECK(p.at(1.75) == Approx(2.0));
  CHECK(p.at(0.0) == 0.0);
  CHECK(p.at(9.0) == 3.0);
}
