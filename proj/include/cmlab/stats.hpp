#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "cmlab/error.hpp"
#include "cmlab/rng.hpp"

namespace cmlab {

/// Outcome of one statistical check.
///
/// `kind` tells how `value` is judged: "p" passes when value >= threshold,
/// "distance" passes when value <= threshold. Report-only checks carry
/// `report_only` and always count as passing.
struct TestReport {
  std::string experiment;
  std::string test;
  std::vector<std::size_t> n;
  std::uint64_t seed = 0;
  double statistic = 0.0;
  double value = 0.0;
  double threshold = 0.0;
  std::string kind = "p";
  bool pass = false;
  bool report_only = false;
  std::size_t retries = 0;
  std::string note;

  void judge() {
    pass = report_only || (kind == "p" ? value >= threshold : value <= threshold);
  }
};

inline TestReport make_report(std::string test, std::vector<std::size_t> n, double statistic,
                              double value, double threshold, std::string kind) {
  TestReport r;
  r.test = std::move(test);
  r.n = std::move(n);
  r.statistic = statistic;
  r.value = value;
  r.threshold = threshold;
  r.kind = std::move(kind);
  r.judge();
  return r;
}

/// Row-major sample of d-dimensional points.
struct PointSet {
  std::size_t dim = 1;
  std::vector<double> data;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  double operator()(std::size_t i, std::size_t k) const { return data[i * dim + k]; }
  void push(std::initializer_list<double> p) { data.insert(data.end(), p.begin(), p.end()); }
  std::vector<double> column(std::size_t k) const {
    std::vector<double> c(size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (*this)(i, k);
    return c;
  }
};

/// Survival function of the Kolmogorov distribution.
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Dual series, fast for small lambda.
    double s = 0.0;
    double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    for (int k = 1; k < 50; ++k) {
      double j = 2.0 * k - 1.0;
      s += std::exp(-j * j * c);
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k < 100; ++k) {
    double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * t;
    if (t < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace detail {

inline double ks_pvalue(double d, double ne) {
  double sn = std::sqrt(ne);
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace detail

/// One-sample Kolmogorov-Smirnov test against a CDF.
inline TestReport ks_test(std::vector<double> x, const std::function<double(double)>& cdf,
                          double alpha = 1e-3) {
  if (x.size() < 20) throw input_error("ks_test: need at least 20 samples");
  std::sort(x.begin(), x.end());
  double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = cdf(x[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return make_report("ks", {x.size()}, d, detail::ks_pvalue(d, n), alpha, "p");
}

/// Two-sample Kolmogorov-Smirnov test.
inline TestReport ks_test(std::vector<double> x, std::vector<double> y, double alpha = 1e-3) {
  if (x.size() < 20 || y.size() < 20) throw input_error("ks_test: need at least 20 samples");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  return make_report("ks2", {x.size(), y.size()}, d, detail::ks_pvalue(d, n1 * n2 / (n1 + n2)),
                     alpha, "p");
}

/// Bin edges per dimension from empirical quantiles of a pilot sample. The
/// outer edges are -inf and +inf.
inline std::vector<std::vector<double>> quantile_edges(const PointSet& pilot,
                                                       std::size_t bins_per_dim) {
  std::vector<std::vector<double>> edges(pilot.dim);
  for (std::size_t k = 0; k < pilot.dim; ++k) {
    auto c = pilot.column(k);
    std::sort(c.begin(), c.end());
    auto& e = edges[k];
    e.push_back(-std::numeric_limits<double>::infinity());
    for (std::size_t b = 1; b < bins_per_dim; ++b)
      e.push_back(c[b * c.size() / bins_per_dim]);
    e.push_back(std::numeric_limits<double>::infinity());
  }
  return edges;
}

using BoxProbability = std::function<double(std::span<const double> lo, std::span<const double> hi)>;

/// Pearson chi-square goodness of fit on a product grid of bins. Bin
/// probabilities come from `box_prob`; adjacent bins (in row-major order) are
/// merged until every expected count is at least 5.
inline TestReport chi_square_gof(const PointSet& x, const std::vector<std::vector<double>>& edges,
                                 const BoxProbability& box_prob, double alpha = 1e-3,
                                 double mass = 1.0) {
  std::size_t d = x.dim;
  if (edges.size() != d) throw input_error("chi_square_gof: edges do not match dimension");
  std::size_t total = 1;
  for (const auto& e : edges) total *= e.size() - 1;
  std::vector<double> observed(total, 0.0), expected(total, 0.0);
  std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const auto& e = edges[k];
      auto it = std::upper_bound(e.begin() + 1, e.end() - 1, x(i, k));
      flat = flat * (e.size() - 1) + static_cast<std::size_t>(it - (e.begin() + 1));
    }
    observed[flat] += 1.0;
  }
  std::vector<double> lo(d), hi(d);
  double psum = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = d; k-- > 0;) {
      std::size_t nb = edges[k].size() - 1;
      std::size_t b = rem % nb;
      rem /= nb;
      lo[k] = edges[k][b];
      hi[k] = edges[k][b + 1];
    }
    double p = box_prob(lo, hi);
    psum += p;
    expected[flat] = p / mass * static_cast<double>(n);
  }
  if (std::abs(psum - mass) > 1e-3 * mass)
    throw input_error("chi_square_gof: oracle does not integrate to its mass over the bins (" +
                      std::to_string(psum) + ")");
  std::vector<double> mo, me;
  double ao = 0.0, ae = 0.0;
  for (std::size_t b = 0; b < total; ++b) {
    ao += observed[b];
    ae += expected[b];
    if (ae >= 5.0) {
      mo.push_back(ao);
      me.push_back(ae);
      ao = ae = 0.0;
    }
  }
  if (ae > 0.0 || ao > 0.0) {
    if (me.empty()) throw input_error("chi_square_gof: too few samples for any bin");
    mo.back() += ao;
    me.back() += ae;
  }
  double stat = 0.0;
  for (std::size_t b = 0; b < mo.size(); ++b) stat += (mo[b] - me[b]) * (mo[b] - me[b]) / me[b];
  double dof = static_cast<double>(mo.size()) - 1.0;
  double p = dof > 0 ? boost::math::gamma_q(0.5 * dof, 0.5 * stat) : 1.0;
  auto r = make_report("chi2", {n}, stat, p, alpha, "p");
  r.note = "bins=" + std::to_string(mo.size());
  return r;
}

namespace detail {

/// Dot product with eight fixed partial sums, so the compiler can vectorize
/// while the summation order (and the result) stays the same on every run.
inline double dot_lanes(const float* a, const float* b, std::size_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8)
    for (std::size_t k = 0; k < 8; ++k) acc[k] += a[j + k] * b[j + k];
  double s = 0.0;
  for (float x : acc) s += x;
  for (; j < n; ++j) s += static_cast<double>(a[j]) * b[j];
  return s;
}

}  // namespace detail

/// Two-sample energy-distance test with permutation p-value. Each group is
/// subsampled to at most `cap` points; the pooled distance matrix is kept in
/// single precision.
inline TestReport energy_distance_test(const PointSet& x, const PointSet& y,
                                       std::size_t permutations, RngStream& rng,
                                       double alpha = 1e-3, std::size_t cap = 4000) {
  if (x.dim != y.dim) throw input_error("energy_distance_test: dimension mismatch");
  if (permutations < 100) throw input_error("energy_distance_test: need >= 100 permutations");
  if (x.size() < 2 || y.size() < 2) throw input_error("energy_distance_test: samples too small");
  std::size_t d = x.dim;
  auto pick = [&](const PointSet& s) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > cap) {
      for (std::size_t i = 0; i < cap; ++i) {
        auto j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(idx.size() - i));
        std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
      }
      idx.resize(cap);
    }
    return idx;
  };
  auto ix = pick(x), iy = pick(y);
  std::size_t n1 = ix.size(), n2 = iy.size(), nn = n1 + n2;
  std::vector<double> z(nn * d);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t k = 0; k < d; ++k) z[i * d + k] = x(ix[i], k);
  for (std::size_t i = 0; i < n2; ++i)
    for (std::size_t k = 0; k < d; ++k) z[(n1 + i) * d + k] = y(iy[i], k);
  // Lower triangle of pairwise distances, row i holds j < i.
  std::vector<float> dist(nn * (nn - 1) / 2);
  for (std::size_t i = 1; i < nn; ++i) {
    float* row = dist.data() + i * (i - 1) / 2;
    for (std::size_t j = 0; j < i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double t = z[i * d + k] - z[j * d + k];
        s += t * t;
      }
      row[j] = static_cast<float>(std::sqrt(s));
    }
  }
  std::vector<double> rowsum(nn, 0.0);
  for (std::size_t i = 1; i < nn; ++i) {
    const float* row = dist.data() + i * (i - 1) / 2;
    for (std::size_t j = 0; j < i; ++j) rowsum[i] += row[j];
  }
  // E = 2/(n1 n2) S12 - 1/n1^2 S11' - 1/n2^2 S22' with S'' over ordered pairs.
  std::vector<float> label(nn);
  auto statistic = [&](const std::vector<float>& lab) {
    double s11 = 0.0, s22 = 0.0, s12 = 0.0;
    for (std::size_t i = 1; i < nn; ++i) {
      const float* row = dist.data() + i * (i - 1) / 2;
      double a1 = detail::dot_lanes(lab.data(), row, i);
      double a2 = rowsum[i] - a1;
      if (lab[i] > 0.5f) {
        s11 += a1;
        s12 += a2;
      } else {
        s22 += a2;
        s12 += a1;
      }
    }
    double m1 = static_cast<double>(n1), m2 = static_cast<double>(n2);
    return 2.0 * s12 / (m1 * m2) - 2.0 * s11 / (m1 * m1) - 2.0 * s22 / (m2 * m2);
  };
  for (std::size_t i = 0; i < nn; ++i) label[i] = i < n1 ? 1.0f : 0.0f;
  double e0 = statistic(label);
  std::size_t ge = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = nn - 1; i > 0; --i) {
      auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
      std::swap(label[i], label[std::min(j, i)]);
    }
    if (statistic(label) >= e0 - 1e-12 * std::abs(e0)) ++ge;
  }
  double pv = (1.0 + static_cast<double>(ge)) / (1.0 + static_cast<double>(permutations));
  return make_report("energy", {n1, n2}, e0 * static_cast<double>(n1 * n2) / static_cast<double>(nn),
                     pv, alpha, "p");
}

/// z-tests of the sample mean and of the dispersion ratio variance/mean
/// against a Poisson(mean) law. Passes when both |z| <= 3.
inline TestReport poisson_count_test(const std::vector<long>& counts, double mean) {
  if (counts.size() < 1000) throw input_error("poisson_count_test: need at least 1000 counts");
  detail::require(mean > 0.0, "poisson_count_test: mean must be positive");
  double n = static_cast<double>(counts.size());
  double s = 0.0, s2 = 0.0;
  for (long c : counts) {
    s += static_cast<double>(c);
    s2 += static_cast<double>(c) * static_cast<double>(c);
  }
  double m = s / n;
  double var = (s2 - n * m * m) / (n - 1.0);
  double z_mean = (m - mean) / std::sqrt(mean / n);
  double disp = m > 0.0 ? var / m : 0.0;
  double z_disp = (disp - 1.0) / std::sqrt((1.0 / mean + 2.0) / n);
  double z = std::max(std::abs(z_mean), std::abs(z_disp));
  auto r = make_report("poisson_counts", {counts.size()}, z, z, 3.0, "distance");
  r.note = "mean=" + std::to_string(m) + " dispersion=" + std::to_string(disp) +
           " z_mean=" + std::to_string(z_mean) + " z_disp=" + std::to_string(z_disp);
  return r;
}

struct MeanSE {
  double mean;
  double se;
};

inline MeanSE mean_se(std::span<const double> v) {
  double n = static_cast<double>(v.size());
  double s = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double q = 0.0;
  for (double x : v) q += (x - s) * (x - s);
  return {s, std::sqrt(q / (n - 1.0) / n)};
}

/// z-test of mean f(A) against the weighted mean of f(B) with weights w.
/// Weights are densities of A's law with respect to B's, so the estimator is
/// the plain average of f(B) w (no self-normalization).
inline TestReport weighted_mean_check(const std::function<double(double)>& f,
                                      std::span<const double> a, std::span<const double> b,
                                      std::span<const double> w, double z_max = 3.0) {
  if (b.size() != w.size()) throw input_error("weighted_mean_check: weights do not match sample");
  if (a.size() < 2 || b.size() < 2) throw input_error("weighted_mean_check: samples too small");
  bool any = false;
  for (double x : w) {
    if (x < 0.0) throw input_error("weighted_mean_check: negative weight");
    any = any || x > 0.0;
  }
  if (!any) throw input_error("weighted_mean_check: all weights are zero");
  std::vector<double> fa(a.size()), fb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = f(a[i]);
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = f(b[i]) * w[i];
  MeanSE ma = mean_se(fa), mb = mean_se(fb);
  double z = (ma.mean - mb.mean) / std::sqrt(ma.se * ma.se + mb.se * mb.se);
  auto r = make_report("weighted_mean", {a.size(), b.size()}, z, std::abs(z), z_max, "distance");
  r.note = "mean_a=" + std::to_string(ma.mean) + " weighted_mean_b=" + std::to_string(mb.mean);
  return r;
}

/// z-test of a sample mean against a known value.
inline TestReport mean_check(std::span<const double> v, double target, double z_max = 3.0) {
  MeanSE m = mean_se(v);
  double z = (m.mean - target) / m.se;
  auto r = make_report("mean", {v.size()}, m.mean, std::abs(z), z_max, "distance");
  r.note = "target=" + std::to_string(target) + " se=" + std::to_string(m.se);
  return r;
}

/// Absolute-error check of a computed number, e.g. a quadrature value.
inline TestReport tolerance_check(std::string test, double computed, double target, double tol) {
  return make_report(std::move(test), {}, computed, std::abs(computed - target), tol, "distance");
}

}  // namespace cmlab
