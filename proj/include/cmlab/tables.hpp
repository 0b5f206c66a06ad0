#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cmlab/chains.hpp"
#include "cmlab/distributions.hpp"
#include "cmlab/error.hpp"
#include "cmlab/experiments.hpp"
#include "cmlab/parallel.hpp"
#include "cmlab/poisson.hpp"

// Raw-sample dumps and density tables for plotting. Column order is fixed
// per target and documented in the README.
namespace cmlab::tables {

inline const std::vector<std::string>& sample_targets() {
  static const std::vector<std::string> t{"chi5", "straddle1", "zenith", "meander", "chain", "tau-window"};
  return t;
}

inline const std::vector<std::string>& density_oracles() {
  static const std::vector<std::string> o{"f3", "f5", "h_ab", "ig", "ig_sb", "meander_rn"};
  return o;
}

namespace detail {

inline void expect_args(const std::string& what, const std::vector<double>& args, std::size_t k,
                        const std::string& names) {
  if (args.size() != k)
    throw parameter_error(what + " expects " + std::to_string(k) + " argument(s): " + names);
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace detail

/// n samples of `target`; `args` are the target's positional numbers
/// (zenith a b, meander mu, chain m, tau-window lo hi).
inline SampleTable sample_target(const std::string& target, const std::vector<double>& args,
                                 std::size_t n, std::uint64_t seed, unsigned workers) {
  if (n == 0) throw parameter_error("sample: n must be positive");
  constexpr std::uint64_t base = 1ull << 32;
  if (target == "chi5") {
    detail::expect_args(target, args, 0, "none");
    auto z = replicate<double>(n, seed, base, workers, [](RngStream& rng, std::size_t) {
      return straddle_time_one(rng).two_k_minus_b();
    });
    return {{"z"}, {z}};
  }
  if (target == "straddle1") {
    detail::expect_args(target, args, 0, "none");
    auto s = replicate<FixedTimeSample>(n, seed, base, workers, [](RngStream& rng, std::size_t) {
      return straddle_time_one(rng);
    });
    using experiments::column;
    return {{"a", "i", "k", "y", "g", "d"},
            {column(s, [](const auto& f) { return f.a; }), column(s, [](const auto& f) { return f.intercept(); }),
             column(s, [](const auto& f) { return f.k; }), column(s, [](const auto& f) { return f.y; }),
             column(s, [](const auto& f) { return f.g; }), column(s, [](const auto& f) { return f.d; })}};
  }
  if (target == "zenith") {
    detail::expect_args(target, args, 2, "a b");
    double a = args[0], b = args[1];
    auto s = replicate<std::pair<double, double>>(n, seed, base, workers, [a, b](RngStream& rng, std::size_t) {
      return zenith_increment(a, b, rng);
    });
    using experiments::column;
    return {{"ds", "dz"},
            {column(s, [](const auto& p) { return p.first; }), column(s, [](const auto& p) { return p.second; })}};
  }
  if (target == "meander") {
    detail::expect_args(target, args, 1, "mu");
    double mu = args[0];
    auto s = replicate<MeanderEnds>(n, seed, base, workers, [mu](RngStream& rng, std::size_t) {
      return sample_meander_ends(mu, rng);
    });
    using experiments::column;
    return {{"sigma", "tilde1", "hat1", "minslope_tilde", "minslope_hat"},
            {column(s, [](const auto& m) { return m.sigma; }), column(s, [](const auto& m) { return m.tilde1; }),
             column(s, [](const auto& m) { return m.hat1; }),
             column(s, [](const auto& m) { return m.minslope_tilde; }),
             column(s, [](const auto& m) { return m.minslope_hat; })}};
  }
  if (target == "chain") {
    detail::expect_args(target, args, 1, "m");
    if (!(args[0] >= 0.0) || args[0] != std::floor(args[0]))
      throw parameter_error("chain: m must be a nonnegative integer");
    auto m = static_cast<std::size_t>(args[0]);
    auto s = replicate<std::vector<ChainState>>(n, seed, base, workers, [m](RngStream& rng, std::size_t) {
      return extract_chain(sample_chain_skeleton(m, rng), m);
    });
    SampleTable t;
    for (std::size_t k = 0; k <= m; ++k) {
      std::string sfx = std::to_string(k);
      t.columns.insert(t.columns.end(), {"tau" + sfx, "kappa" + sfx, "rho" + sfx});
      t.data.push_back(experiments::column(s, [k](const auto& c) { return c[k].tau; }));
      t.data.push_back(experiments::column(s, [k](const auto& c) { return c[k].kappa; }));
      t.data.push_back(experiments::column(s, [k](const auto& c) { return c[k].rho; }));
    }
    return t;
  }
  if (target == "tau-window") {
    detail::expect_args(target, args, 2, "lo hi");
    double lo = args[0], hi = args[1];
    auto s = replicate<TauJumps>(n, seed, base, workers, [lo, hi](RngStream& rng, std::size_t) {
      return sample_tau_window(lo, hi, rng);
    });
    // One row per jump; windows without jumps contribute no rows.
    SampleTable t{{"window", "r", "dtau"}, {{}, {}, {}}};
    for (std::size_t i = 0; i < s.size(); ++i)
      for (const auto& j : s[i].jumps) {
        t.data[0].push_back(static_cast<double>(i));
        t.data[1].push_back(j.r);
        t.data[2].push_back(j.dtau);
      }
    return t;
  }
  throw parameter_error("unknown sample target '" + target + "'; valid targets: " +
                        detail::join(sample_targets()));
}

struct DensityOptions {
  std::size_t grid = 64;
  double lo = NAN;  ///< NaN: oracle default
  double hi = NAN;
  double a = 2.0;
  double b = 1.0;
  double mu = 1.0;
  double y = 1.0;
};

/// Midpoints of `grid` equal cells of [lo, hi].
inline std::vector<double> midpoints(double lo, double hi, std::size_t grid) {
  std::vector<double> x(grid);
  double h = (hi - lo) / static_cast<double>(grid);
  for (std::size_t i = 0; i < grid; ++i) x[i] = lo + (static_cast<double>(i) + 0.5) * h;
  return x;
}

inline SampleTable density_table(const std::string& oracle, const DensityOptions& o) {
  if (o.grid < 2) throw parameter_error("density: grid must be at least 2");
  auto range = [&](double lo, double hi) {
    double l = std::isnan(o.lo) ? lo : o.lo, h = std::isnan(o.hi) ? hi : o.hi;
    if (!(h > l)) throw parameter_error("density: need lo < hi");
    return std::pair{l, h};
  };
  if (oracle == "f3") {
    // Marginals of K'(1) (equal to that of I(1)) and of K(1) - B(1).
    auto [lo, hi] = range(0.0, 5.0);
    SampleTable t{{"x", "slope_density", "gap_density"}, {{}, {}, {}}};
    for (double x : midpoints(std::max(lo, 0.0), hi, o.grid)) {
      double fa = quad::integrate_tail(
          [x](double u) { return u < 60.0 ? 2.0 * u * u * (x + u) * normal_pdf(x + u) : 0.0; }, 0.0,
          1e-12);
      double fy = quad::integrate_tail(
          [x](double c) { return c < 60.0 ? 4.0 * x * c * (c + x) * normal_pdf(c + x) : 0.0; }, 0.0,
          1e-12);
      t.data[0].push_back(x);
      t.data[1].push_back(fa);
      t.data[2].push_back(fy);
    }
    return t;
  }
  if (oracle == "f5") {
    // Marginal density of (1/G_1, D_1) on a square grid.
    auto [lo, hi] = range(1.0, 6.0);
    SampleTable t{{"v", "w", "density"}, {{}, {}, {}}};
    auto g = midpoints(std::max(lo, 1.0), hi, o.grid);
    for (double v : g)
      for (double w : g) {
        t.data[0].push_back(v);
        t.data[1].push_back(w);
        t.data[2].push_back(f5_vw_density(v, w));
      }
    return t;
  }
  if (oracle == "h_ab") {
    // Grid in (u, m) with s = u^2, z = m s; cell_weight is the (s, z) area of
    // each cell, so sum(density * cell_weight) approximates the mass 1 - b/a.
    if (!(o.b > 0.0 && o.a > o.b)) throw parameter_error("h_ab: need 0 < b < a");
    auto [lo, hi] = range(0.0, 30.0 / (o.b * o.b));
    double u0 = std::sqrt(std::max(lo, 0.0)), u1 = std::sqrt(hi);
    double du = (u1 - u0) / static_cast<double>(o.grid), dm = (o.a - o.b) / static_cast<double>(o.grid);
    SampleTable t{{"s", "z", "density", "cell_weight"}, {{}, {}, {}, {}}};
    for (double u : midpoints(u0, u1, o.grid))
      for (double m : midpoints(o.b, o.a, o.grid)) {
        double s = u * u;
        t.data[0].push_back(s);
        t.data[1].push_back(m * s);
        t.data[2].push_back(zenith_density(o.a, o.b, s, m * s));
        t.data[3].push_back(2.0 * u * u * u * du * dm);
      }
    return t;
  }
  if (oracle == "ig" || oracle == "ig_sb") {
    bool sb = oracle == "ig_sb";
    auto [lo, hi] = range(0.0, 4.0 * o.y / o.mu + 4.0 / (o.mu * o.mu));
    SampleTable t{{"t", "density", "cdf"}, {{}, {}, {}}};
    for (double x : midpoints(std::max(lo, 0.0), hi, o.grid)) {
      t.data[0].push_back(x);
      t.data[1].push_back(ig_density(o.mu, o.y, x, sb));
      t.data[2].push_back(ig_cdf(o.mu, o.y, x, sb));
    }
    return t;
  }
  if (oracle == "meander_rn") {
    auto [lo, hi] = range(0.0, 5.0);
    SampleTable t{{"x", "rn_tilde", "chi3_density", "tilde_end_density"}, {{}, {}, {}, {}}};
    for (double x : midpoints(std::max(lo, 0.0), hi, o.grid)) {
      t.data[0].push_back(x);
      t.data[1].push_back(experiments::tilde_rn(x));
      t.data[2].push_back(chi_pdf(3, x));
      t.data[3].push_back(meander_end_pdf(x));
    }
    return t;
  }
  throw parameter_error("unknown density oracle '" + oracle + "'; valid oracles: " +
                        detail::join(density_oracles()));
}

}  // namespace cmlab::tables
