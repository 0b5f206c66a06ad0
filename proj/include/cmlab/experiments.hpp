#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "cmlab/chains.hpp"
#include "cmlab/distributions.hpp"
#include "cmlab/error.hpp"
#include "cmlab/geometry.hpp"
#include "cmlab/parallel.hpp"
#include "cmlab/paths.hpp"
#include "cmlab/poisson.hpp"
#include "cmlab/rng.hpp"
#include "cmlab/stats.hpp"

namespace cmlab {

using ParamMap = std::map<std::string, double>;

inline constexpr std::uint64_t kReferenceSeed = 20240611;

struct ExperimentSpec {
  std::string name;
  ParamMap params;  ///< overrides of the registry defaults
  std::uint64_t seed = kReferenceSeed;
  unsigned workers = 1;
};

/// Column-major table of raw samples.
struct SampleTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;
  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
};

struct ExperimentResult {
  std::string name;
  ParamMap params;  ///< effective parameters, defaults included
  std::uint64_t seed = 0;
  std::vector<TestReport> reports;
  std::vector<std::pair<std::string, SampleTable>> samples;

  bool pass() const {
    return std::all_of(reports.begin(), reports.end(), [](const TestReport& r) { return r.pass; });
  }
};

/// What an experiment body sees: its parameters, reproducible substreams and
/// sinks for reports and samples.
///
/// Every call to replicate() or stream() takes the next substream family, so
/// the draws depend only on (seed, order of calls), never on worker count.
class Context {
 public:
  Context(std::string name, ParamMap params, std::uint64_t seed, unsigned workers)
      : name_(std::move(name)), params_(std::move(params)), seed_(seed), workers_(workers) {}

  double param(const std::string& key) const {
    auto it = params_.find(key);
    if (it == params_.end()) throw parameter_error(name_ + ": missing parameter '" + key + "'");
    return it->second;
  }

  /// Positive integer parameter.
  std::size_t count(const std::string& key) const {
    double v = param(key);
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e12)
      throw parameter_error(name_ + ": parameter '" + key + "' must be a positive integer");
    return static_cast<std::size_t>(v);
  }

  double alpha() const { return param("alpha"); }

  template <class T, class Fn>
  std::vector<T> replicate(std::size_t n, Fn fn) {
    return cmlab::replicate<T>(n, seed_, next_base(), workers_, fn);
  }

  RngStream stream() { return RngStream(seed_, next_base()); }

  void add(TestReport r, std::string test) {
    r.test = std::move(test);
    r.experiment = name_;
    r.seed = seed_;
    reports_.push_back(std::move(r));
  }

  void add_sample(std::string name, std::vector<std::string> columns,
                  std::vector<std::vector<double>> data) {
    samples_.emplace_back(std::move(name), SampleTable{std::move(columns), std::move(data)});
  }

  ExperimentResult finish() {
    // Bonferroni verdict over the judged p-value tests of this experiment.
    std::size_t m = 0;
    for (const auto& r : reports_) m += (r.kind == "p" && !r.report_only) ? 1 : 0;
    if (m > 1)
      for (auto& r : reports_)
        if (r.kind == "p" && !r.report_only) {
          bool ok = r.value >= r.threshold / static_cast<double>(m);
          if (!r.note.empty()) r.note += " ";
          r.note += std::string("bonferroni_") + (ok ? "pass" : "fail") + "_m=" + std::to_string(m);
        }
    return {name_, params_, seed_, std::move(reports_), std::move(samples_)};
  }

 private:
  std::uint64_t next_base() { return (++family_) << 32; }

  std::string name_;
  ParamMap params_;
  std::uint64_t seed_;
  unsigned workers_;
  std::uint64_t family_ = 0;
  std::vector<TestReport> reports_;
  std::vector<std::pair<std::string, SampleTable>> samples_;
};

struct ExperimentEntry {
  std::string name;
  std::string claim;
  ParamMap defaults;
  std::function<void(Context&)> body;
};

namespace experiments {

template <class T, class F>
std::vector<double> column(const std::vector<T>& v, F f) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return out;
}

inline std::vector<FixedTimeSample> straddles(Context& ctx, std::size_t n) {
  return ctx.replicate<FixedTimeSample>(n, [](RngStream& rng, std::size_t) {
    return straddle_time_one(rng);
  });
}

inline std::function<double(double)> scaled_chi_cdf(int k, double scale) {
  return [k, scale](double x) { return chi_cdf(k, x / scale); };
}

/// z-test of an observed frequency against a probability.
inline TestReport frequency_check(std::size_t hits, std::size_t n, double p, double z_max = 3.0) {
  double ph = static_cast<double>(hits) / static_cast<double>(n);
  double z = (ph - p) / std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  auto r = make_report("frequency", {n}, ph, std::abs(z), z_max, "distance");
  r.note = "target=" + std::to_string(p);
  return r;
}

// ---------------------------------------------------------------------------

inline void chi5_marginal(Context& ctx) {
  auto s = straddles(ctx, ctx.count("n"));
  auto z = column(s, [](const FixedTimeSample& f) { return f.two_k_minus_b(); });
  ctx.add(ks_test(z, scaled_chi_cdf(5, 1.0), ctx.alpha()), "ks_chi5");
  ctx.add_sample("2k_minus_b", {"z"}, {z});
}

inline void exchangeability(Context& ctx) {
  std::size_t n = ctx.count("n");
  auto a = straddles(ctx, n);
  auto b = straddles(ctx, n);
  PointSet x{2, {}}, y{2, {}};
  for (std::size_t i = 0; i < n; ++i) {
    x.push({a[i].k, a[i].y});
    y.push({b[i].y, b[i].k});
  }
  RngStream perm = ctx.stream();
  ctx.add(energy_distance_test(x, y, ctx.count("permutations"), perm, ctx.alpha()), "energy_swap");
  ctx.add(ks_test(column(a, [](const FixedTimeSample& f) { return f.k; }),
                  column(b, [](const FixedTimeSample& f) { return f.y; }), ctx.alpha()),
          "ks_k_vs_gap");
  ctx.add_sample("k_y", {"k", "y"}, {x.column(0), x.column(1)});
}

inline void f3_gof(Context& ctx) {
  auto pilot = straddles(ctx, ctx.count("pilot"));
  auto s = straddles(ctx, ctx.count("n"));
  auto points = [](const std::vector<FixedTimeSample>& v) {
    PointSet p{3, {}};
    for (const auto& f : v) p.push({f.a, f.intercept(), f.y});
    return p;
  };
  PointSet x = points(s);
  auto edges = quantile_edges(points(pilot), ctx.count("bins"));
  auto box = [](std::span<const double> lo, std::span<const double> hi) {
    return f3_box_probability(lo[0], hi[0], lo[1], hi[1], lo[2], hi[2], 1e-11);
  };
  ctx.add(chi_square_gof(x, edges, box, ctx.alpha()), "chi2_f3");

  // Mass of the density by plain nested quadrature, independent of the
  // closed-form box integrals used above.
  auto safe = [](double v) { return std::isfinite(v) ? v : 0.0; };
  double mass = quad::integrate_tail(
      [&](double y) {
        return quad::integrate_tail(
            [&](double a) {
              return quad::integrate_tail([&](double b) { return safe(f3_density(a, b, y)); }, 0.0,
                                          1e-12);
            },
            0.0, 1e-12);
      },
      0.0, 1e-12);
  ctx.add(tolerance_check("", mass, 1.0, ctx.param("tolerance")), "f3_mass");
  ctx.add_sample("a_i_y", {"a", "i", "y"}, {x.column(0), x.column(1), x.column(2)});
}

inline void f5_quadrature(Context& ctx) {
  // (a, b, y) integrate out in closed form to f5_vw_density; v = 1 + p^2,
  // w = 1 + q^2 smooth the corner singularity.
  auto safe = [](double v) { return std::isfinite(v) ? v : 0.0; };
  double mass = quad::integrate_tail(
      [&](double p) {
        return quad::integrate_tail(
            [&](double q) { return safe(4.0 * p * q * f5_vw_density(1.0 + p * p, 1.0 + q * q)); },
            0.0, 1e-12);
      },
      0.0, 1e-12);
  ctx.add(tolerance_check("", mass, 1.0, ctx.param("tolerance")), "f5_mass");

  // The closed-form reduction against direct triple quadrature of f5.
  double worst = 0.0;
  for (auto [v, w] : {std::pair{1.5, 2.0}, {3.0, 1.2}}) {
    double direct = quad::integrate_tail(
        [&](double y) {
          return quad::integrate_tail(
              [&](double a) {
                return quad::integrate_tail(
                    [&](double b) { return safe(f5_density(a, b, y, v, w)); }, 0.0, 1e-11);
              },
              0.0, 1e-11);
        },
        0.0, 1e-11);
    worst = std::max(worst, std::abs(direct - f5_vw_density(v, w)));
  }
  ctx.add(tolerance_check("", worst, 0.0, 1e-8), "f5_reduction");
}

inline void d1_mixture_consistency(Context& ctx) {
  // Quadrature: integrating f5 over v at w = 1 + t and dividing by f3 gives
  // the conditional density of D_1 - 1.
  double worst = 0.0;
  const std::vector<std::array<double, 3>> cells{
      {0.5, 0.5, 0.5}, {1.0, 0.3, 0.8}, {0.2, 1.5, 1.0}, {1.5, 1.0, 0.2}};
  for (const auto& c : cells)
    for (double t : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0}) {
      double num = quad::integrate_tail(
          [&](double v) {
            double f = f5_density(c[0], c[1], c[2], v, 1.0 + t);
            return std::isfinite(f) ? f : 0.0;
          },
          1.0, 1e-13);
      double ratio = num / f3_density(c[0], c[1], c[2]);
      worst = std::max(worst, std::abs(ratio - d1_conditional_density(c[0], c[1], c[2], t)));
    }
  ctx.add(tolerance_check("", worst, 0.0, ctx.param("tolerance")), "sup_norm_f5_over_f3");

  // Conditional KS inside one cell, through the conditional CDF of each
  // sample's own (a, b, y).
  double lo = ctx.param("cell_lo"), hi = ctx.param("cell_hi");
  auto s = straddles(ctx, ctx.count("n"));
  std::vector<double> u;
  for (const auto& f : s) {
    double b = f.intercept();
    if (f.a < lo || f.a > hi || b < lo || b > hi || f.y < lo || f.y > hi) continue;
    u.push_back(d1_conditional_cdf(f.a, b, f.y, f.d - 1.0));
  }
  auto r = ks_test(u, [](double x) { return std::clamp(x, 0.0, 1.0); }, ctx.alpha());
  r.note = "cell=[" + std::to_string(lo) + "," + std::to_string(hi) + "]^3";
  ctx.add(r, "ks_conditional_d1");
  ctx.add_sample("pit", {"u"}, {u});
}

inline void tau_counts(Context& ctx) {
  double lo = ctx.param("r_lo"), hi = ctx.param("r_hi");
  auto w = ctx.replicate<TauJumps>(ctx.count("n"), [lo, hi](RngStream& rng, std::size_t) {
    return sample_tau_window(lo, hi, rng);
  });
  std::vector<long> counts;
  std::vector<double> marks;
  for (const auto& tj : w) {
    counts.push_back(static_cast<long>(tj.jumps.size()));
    for (const auto& j : tj.jumps) marks.push_back(j.dtau / (j.r * j.r));
  }
  ctx.add(poisson_count_test(counts, std::log(hi / lo)), "poisson_counts");
  ctx.add(ks_test(marks, [](double x) { return chi_sq_cdf(1, x); }, ctx.alpha()), "ks_marks_chi2_1");
  ctx.add_sample("counts", {"count"},
                 {column(counts, [](long c) { return static_cast<double>(c); })});
}

inline void excursion_conditional(Context& ctx) {
  struct Row {
    double g, d, gap;
  };
  auto rows = ctx.replicate<Row>(ctx.count("n"), [](RngStream& rng, std::size_t) {
    MajorantSkeleton sk = sample_majorant_cover(0.0, 2.0, rng);
    GridPath p = attach_excursions_on_grid(sk, 0.0, 0.25, 8, rng);
    StraddleInfo st = straddle(sk, 1.0, p);
    return Row{st.g, st.d, st.gap};
  });
  double u0 = ctx.param("g_center"), v0 = ctx.param("d_center");
  for (int k = 0; k < 2; ++k) {
    double bg = ctx.param("g_band") / (k + 1), bd = ctx.param("d_band") / (k + 1);
    std::vector<double> z;
    for (const auto& r : rows) {
      if (std::abs(r.g - u0) > bg || std::abs(r.d - v0) > bd) continue;
      z.push_back(r.gap / std::sqrt((1.0 - r.g) * (r.d - 1.0) / (r.d - r.g)));
    }
    auto rep = ks_test(z, scaled_chi_cdf(3, 1.0), ctx.alpha());
    rep.note = "g_band=" + std::to_string(bg) + " d_band=" + std::to_string(bd);
    ctx.add(rep, k == 0 ? "ks_chi3_wide_band" : "ks_chi3_narrow_band");
  }
  ctx.add_sample("g_d_gap", {"g", "d", "gap"},
                 {column(rows, [](const Row& r) { return r.g; }),
                  column(rows, [](const Row& r) { return r.d; }),
                  column(rows, [](const Row& r) { return r.gap; })});
}

inline void zenith_atom_and_density(Context& ctx) {
  double a = ctx.param("a"), b = ctx.param("b");
  detail::require(b > 0.0 && a > b, "zenith_atom_and_density: need 0 < b < a");
  auto draw = [a, b](RngStream& rng, std::size_t) { return zenith_increment(a, b, rng); };
  std::size_t n = ctx.count("n");
  auto pilot = ctx.replicate<std::pair<double, double>>(ctx.count("pilot"), draw);
  auto s = ctx.replicate<std::pair<double, double>>(n, draw);

  std::size_t atoms = 0;
  PointSet x{2, {}}, px{2, {}};
  for (auto [ds, dz] : s) {
    if (ds == 0.0)
      ++atoms;
    else
      x.push({ds, dz / ds});
  }
  for (auto [ds, dz] : pilot)
    if (ds > 0.0) px.push({ds, dz / ds});
  ctx.add(frequency_check(atoms, n, b / a), "atom_probability");

  auto box = [a, b](std::span<const double> lo, std::span<const double> hi) {
    return zenith_box_probability(a, b, lo[0], hi[0], lo[1], hi[1]);
  };
  ctx.add(chi_square_gof(x, quantile_edges(px, ctx.count("bins")), box, ctx.alpha(), 1.0 - b / a),
          "chi2_continuous_part");
  double mass = zenith_box_probability(a, b, 0.0, INFINITY, b, a, 1e-12);
  ctx.add(tolerance_check("", mass, 1.0 - b / a, ctx.param("tolerance")), "density_mass");
  ctx.add_sample("increments", {"ds", "dz"},
                 {column(s, [](const auto& p) { return p.first; }),
                  column(s, [](const auto& p) { return p.second; })});
}

inline void bessel_minorant_counts(Context& ctx) {
  double mu = ctx.param("mu"), a1 = ctx.param("alpha1"), a2 = ctx.param("alpha2");
  detail::require(0.0 < a1 && a1 < a2 && a2 < mu, "bessel_minorant_counts: need 0 < alpha1 < alpha2 < mu");
  struct Row {
    long count;
    double mark;  // duration times (mu - alpha)^2 of the first face in the window
  };
  auto rows = ctx.replicate<Row>(ctx.count("n"), [=](RngStream& rng, std::size_t) {
    double s = 0.0;
    Row r{0, -1.0};
    for (;;) {
      auto [alpha, len] = detail::next_bessel_face(mu, s, rng);
      if (alpha >= a2) return r;
      if (alpha > a1) {
        if (r.count == 0) r.mark = len * (mu - alpha) * (mu - alpha);
        ++r.count;
      }
    }
  });
  std::vector<long> counts;
  std::vector<double> marks;
  for (const auto& r : rows) {
    counts.push_back(r.count);
    if (r.count > 0) marks.push_back(r.mark);
  }
  ctx.add(poisson_count_test(counts, std::log((mu - a1) / (mu - a2))), "poisson_counts");
  ctx.add(ks_test(marks, [](double x) { return chi_sq_cdf(1, x); }, ctx.alpha()),
          "ks_durations_chi2_1");
  ctx.add_sample("counts", {"count"},
                 {column(counts, [](long c) { return static_cast<double>(c); })});
}

inline void bessel_cross_construction(Context& ctx) {
  double mu = ctx.param("mu"), T = ctx.param("horizon");
  std::size_t steps = ctx.count("steps"), n = ctx.count("n");
  detail::require(T > 1.0, "bessel_cross_construction: horizon must exceed 1");
  // Both sides read the grid minorant at t = 1 of exact grid samples of
  // BES(3, mu); the horizon is finite on both, so they agree in law.
  auto run = [&](BesselMinorant::Construction how) {
    return ctx.replicate<std::array<double, 2>>(n, [=](RngStream& rng, std::size_t) {
      BesselMinorant bm = bessel_minorant(mu, T, steps, rng, how);
      MajorantSkeleton c = convex_minorant(bm.r);
      StraddleInfo st = straddle(c, 1.0, bm.r);
      return std::array<double, 2>{st.slope, st.gap};
    });
  };
  auto direct = run(BesselMinorant::Construction::direct);
  auto pois = run(BesselMinorant::Construction::poissonian);
  PointSet x{2, {}}, y{2, {}};
  for (std::size_t i = 0; i < n; ++i) {
    x.push({direct[i][0], direct[i][1]});
    y.push({pois[i][0], pois[i][1]});
  }
  RngStream perm = ctx.stream();
  auto r = energy_distance_test(x, y, ctx.count("permutations"), perm, ctx.alpha());
  r.note = "grid dt=" + std::to_string(T / static_cast<double>(steps));
  ctx.add(r, "energy_slope_gap");
  ctx.add(ks_test(x.column(0), y.column(0), ctx.alpha()), "ks_slope");
  ctx.add_sample("direct", {"slope", "gap"}, {x.column(0), x.column(1)});
  ctx.add_sample("poissonian", {"slope", "gap"}, {y.column(0), y.column(1)});
}

/// P(C'(1) <= alpha) for BES(3, mu): the faces with slope below alpha last
/// longer than 1, and their total duration is a zenith increment.
inline double minorant_slope_cdf(double mu, double alpha, double t = 1.0) {
  if (alpha <= 0.0) return 0.0;
  if (alpha >= mu) return 1.0;
  return zenith_box_probability(mu, mu - alpha, t, INFINITY, mu - alpha, mu, 1e-11);
}

inline void drift_fixed_marginals(Context& ctx) {
  double mu = ctx.param("mu");
  detail::require(mu > 0.0, "drift_fixed_marginals: mu must be positive");
  auto draw = [mu](RngStream& rng, std::size_t) { return bessel_minorant_at(mu, 1.0, rng).slope; };
  auto pilot = ctx.replicate<double>(ctx.count("pilot"), draw);
  auto s = ctx.replicate<double>(ctx.count("n"), draw);
  PointSet x{1, s}, px{1, pilot};
  auto box = [mu](std::span<const double> lo, std::span<const double> hi) {
    return minorant_slope_cdf(mu, hi[0]) - minorant_slope_cdf(mu, lo[0]);
  };
  auto r = chi_square_gof(x, quantile_edges(px, ctx.count("bins")), box, ctx.alpha());
  r.note += " R(1)-C(1) marginal not tested (see README)";
  ctx.add(r, "chi2_slope");
  ctx.add_sample("slope", {"slope"}, {s});
}

inline void tau_rho_stationarity(Context& ctx) {
  std::size_t m = ctx.count("m"), n = ctx.count("n");
  auto chains = ctx.replicate<std::vector<ChainState>>(n, [m](RngStream& rng, std::size_t) {
    return extract_chain(sample_chain_skeleton(m, rng), m);
  });
  // Independent start for the recursion: (tau_0, rho_0) from the Williams law.
  auto rec = ctx.replicate<double>(n / 2, [](RngStream& rng, std::size_t) {
    double c = rng.chi_square(3), b = rng.beta(1.0, 2.0);
    auto [tau, rho] = tau_rho_step(c * b * b, c * b * (1.0 - b), rng);
    return rho / std::sqrt(tau);
  });
  std::size_t half = n / 2;
  std::vector<double> r0, rm, r1, chi1;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = chains[i];
    for (std::size_t k = 1; k <= m; ++k)
      if (!(c[k].tau < c[k - 1].tau && c[k].rho < c[k - 1].rho)) ++violations;
    if (i < half) {
      r0.push_back(c[0].rho / std::sqrt(c[0].tau));
      r1.push_back(c[1].rho / std::sqrt(c[1].tau));
    } else {
      rm.push_back(c[m].rho / std::sqrt(c[m].tau));
    }
    chi1.push_back(c[1].rho * c[1].rho / c[1].tau - c[1].rho * c[1].rho / c[0].tau);
  }
  ctx.add(ks_test(r0, rm, ctx.alpha()), "ks_rho_over_sqrt_tau_0_vs_m");
  ctx.add(ks_test(r1, rec, ctx.alpha()), "ks_extracted_vs_recursion_step1");
  ctx.add(ks_test(chi1, [](double x) { return chi_sq_cdf(1, x); }, ctx.alpha()),
          "ks_additive_chi2_1");
  ctx.add(make_report("", {n}, static_cast<double>(violations), static_cast<double>(violations), 0.0,
                      "distance"),
          "strict_decrease_violations");
  ctx.add_sample("chain_ends", {"rho0_over_sqrt_tau0"}, {r0});
}

inline void kappa_stationarity(Context& ctx) {
  std::size_t m = ctx.count("m"), n = ctx.count("n");
  auto chains = ctx.replicate<std::vector<ChainState>>(n, [m](RngStream& rng, std::size_t) {
    return extract_chain(sample_chain_skeleton(m, rng), m);
  });
  std::vector<double> k0, km;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = chains[i];
    if (i < n / 2)
      k0.push_back(c[0].kappa / std::sqrt(c[0].tau));
    else
      km.push_back(c[m].kappa / std::sqrt(c[m].tau));
  }
  ctx.add(ks_test(k0, km, ctx.alpha()), "ks_kappa_over_sqrt_tau_0_vs_m");
  ctx.add_sample("kappa0", {"kappa0_over_sqrt_tau0"}, {k0});
}

inline void map_preservation(Context& ctx) {
  std::size_t n = ctx.count("n");
  auto draw = [](RngStream& rng) {
    double c = rng.chi_square(3), b = rng.beta(1.0, 2.0);
    return std::array<double, 4>{c * b * b, c * b * (1.0 - b), rng.chi_square(1), rng.uniform()};
  };
  auto mapped = ctx.replicate<std::array<double, 4>>(n, [&](RngStream& rng, std::size_t) {
    auto x = draw(rng);
    return theorem_map(x[0], x[1], x[2], x[3]);
  });
  auto fresh = ctx.replicate<std::array<double, 4>>(n, [&](RngStream& rng, std::size_t) {
    return draw(rng);
  });
  const char* names[] = {"ks_tau", "ks_rho", "ks_chi2_1", "ks_uniform"};
  PointSet x{4, {}}, y{4, {}};
  for (std::size_t i = 0; i < n; ++i) {
    x.push({mapped[i][0], mapped[i][1], mapped[i][2], mapped[i][3]});
    y.push({fresh[i][0], fresh[i][1], fresh[i][2], fresh[i][3]});
  }
  for (std::size_t k = 0; k < 4; ++k) ctx.add(ks_test(x.column(k), y.column(k), ctx.alpha()), names[k]);
  RngStream perm = ctx.stream();
  ctx.add(energy_distance_test(x, y, ctx.count("permutations"), perm, ctx.alpha()), "energy_joint");
  ctx.add_sample("mapped", {"tau", "rho", "q", "u"},
                 {x.column(0), x.column(1), x.column(2), x.column(3)});
}

inline std::vector<MeanderEnds> meander_sample(Context& ctx, std::size_t n) {
  double mu = ctx.param("mu");
  return ctx.replicate<MeanderEnds>(n, [mu](RngStream& rng, std::size_t) {
    return sample_meander_ends(mu, rng);
  });
}

inline void meander_marginals(Context& ctx) {
  auto s = meander_sample(ctx, ctx.count("n"));
  auto tilde = column(s, [](const MeanderEnds& m) { return m.tilde1; });
  auto hat = column(s, [](const MeanderEnds& m) { return m.hat1; });
  auto ratio_hat = column(s, [](const MeanderEnds& m) { return m.minslope_hat / m.hat1; });
  auto ratio_tilde = column(s, [](const MeanderEnds& m) { return m.minslope_tilde / m.tilde1; });
  ctx.add(ks_test(tilde, meander_end_cdf, ctx.alpha()), "ks_tilde_end");
  ctx.add(ks_test(hat, scaled_chi_cdf(3, 1.0), ctx.alpha()), "ks_hat_end_chi3");
  ctx.add(ks_test(ratio_hat, beta21_cdf, ctx.alpha()), "ks_minslope_ratio_beta21");
  ctx.add(ks_test(ratio_tilde, [](double u) { return std::clamp(u, 0.0, 1.0); }, ctx.alpha()),
          "ks_tilde_minslope_ratio_uniform");
  // The closed-form CDF against quadrature of the density.
  double worst = 0.0;
  for (double x : {0.3, 1.0, 2.0, 4.0})
    worst = std::max(worst, std::abs(meander_end_cdf(x) - quad::integrate(meander_end_pdf, 0.0, x, 1e-13)));
  ctx.add(tolerance_check("", worst, 0.0, 1e-10), "tilde_cdf_quadrature");
  ctx.add_sample("ends", {"tilde1", "hat1", "minslope_hat"},
                 {tilde, hat, column(s, [](const MeanderEnds& m) { return m.minslope_hat; })});
}

inline double tilde_rn(double r) { return 2.0 * mills_ratio(r) / r; }

inline void meander_rn_tilde(Context& ctx) {
  std::size_t n = ctx.count("n");
  auto s = meander_sample(ctx, n);
  auto tilde = column(s, [](const MeanderEnds& m) { return m.tilde1; });
  auto ref = ctx.replicate<double>(n, [](RngStream& rng, std::size_t) { return rng.chi(3); });
  auto w = column(ref, tilde_rn);
  ctx.add(mean_check(w, 1.0), "rn_normalization");
  ctx.add(weighted_mean_check([](double x) { return x; }, tilde, ref, w), "weighted_mean_x");
  ctx.add(weighted_mean_check([](double x) { return std::exp(-x); }, tilde, ref, w),
          "weighted_mean_exp_minus_x");
  // Path functional: the minslope, through the exact BES(3)-bridge infimum.
  std::size_t np = ctx.count("n_path");
  auto mref = ctx.replicate<std::array<double, 2>>(np, [](RngStream& rng, std::size_t) {
    double r = rng.chi(3);
    return std::array<double, 2>{r, sample_bes3_infimum(r, rng)};
  });
  std::vector<double> ms(s.size()), mr(np), wr(np);
  for (std::size_t i = 0; i < s.size(); ++i) ms[i] = s[i].minslope_tilde;
  for (std::size_t i = 0; i < np; ++i) {
    mr[i] = mref[i][1];
    wr[i] = tilde_rn(mref[i][0]);
  }
  ctx.add(weighted_mean_check([](double x) { return x; }, ms, mr, wr), "weighted_mean_minslope");
  // Analytic normalization: int 4 t tail(t) dt against int chi_3 density.
  double q = quad::integrate_tail([](double t) { return chi_pdf(3, t) * tilde_rn(t); }, 0.0, 1e-12);
  ctx.add(tolerance_check("", q, 1.0, 1e-9), "rn_normalization_quadrature");
}

inline void meander_rn_hat(Context& ctx) {
  std::size_t n = ctx.count("n"), np = ctx.count("n_path");
  auto s = meander_sample(ctx, n);
  auto hat = column(s, [](const MeanderEnds& m) { return m.hat1; });
  auto ms = column(s, [](const MeanderEnds& m) { return m.minslope_hat; });
  // Reference: BES(3) from 0 on [0,1]; given R(1) = r the path is a BES(3)
  // bridge, whose minslope is the infimum of BES(3) started at r.
  auto ref = ctx.replicate<std::array<double, 2>>(np, [](RngStream& rng, std::size_t) {
    double r = rng.chi(3);
    return std::array<double, 2>{r, sample_bes3_infimum(r, rng)};
  });
  std::vector<double> r(np), m(np), w(np);
  for (std::size_t i = 0; i < np; ++i) {
    r[i] = ref[i][0];
    m[i] = ref[i][1];
    w[i] = 2.0 * m[i] / r[i];
  }
  ctx.add(mean_check(w, 1.0), "rn_normalization");
  ctx.add(weighted_mean_check([](double x) { return x; }, hat, r, w), "weighted_mean_x");
  ctx.add(weighted_mean_check([](double x) { return std::exp(-x); }, hat, r, w),
          "weighted_mean_exp_minus_x");
  ctx.add(weighted_mean_check([](double x) { return x; }, ms, m, w), "weighted_mean_minslope");
  ctx.add(weighted_mean_check([](double x) { return std::exp(-x); }, ms, m, w),
          "weighted_mean_exp_minus_minslope");
}

inline void conjecture_marginals(Context& ctx) {
  std::size_t n = ctx.count("n");
  // 2K - B at t = 0.5, 1, 1.5, 2 from the Poisson construction.
  auto z = ctx.replicate<std::array<double, 4>>(n, [](RngStream& rng, std::size_t) {
    MajorantSkeleton sk = sample_majorant_cover(0.0, 2.0, rng);
    GridPath p = attach_excursions_on_grid(sk, 0.0, 0.5, 4, rng);
    std::array<double, 4> out{};
    for (std::size_t j = 1; j <= 4; ++j) out[j - 1] = 2.0 * sk(p.time(j)) - p.values[j];
    return out;
  });
  const std::pair<double, std::size_t> times[] = {{0.5, 0}, {1.0, 1}, {2.0, 3}};
  for (auto [t, j] : times) {
    auto v = column(z, [j](const auto& a) { return a[j]; });
    ctx.add(ks_test(v, scaled_chi_cdf(5, std::sqrt(t)), ctx.alpha()), "ks_chi5_t=" + std::to_string(t).substr(0, 3));
  }
  // Brownian scaling: values at 2 against sqrt(2) times values at 1, from
  // disjoint halves.
  std::vector<double> at2, at1;
  for (std::size_t i = 0; i < n; ++i) (i < n / 2 ? at2 : at1).push_back(i < n / 2 ? z[i][3] : std::sqrt(2.0) * z[i][1]);
  ctx.add(ks_test(at2, at1, ctx.alpha()), "ks_scaling_c2");

  // Pairs against BES(5) from 0: recorded, not judged.
  std::size_t np = std::min<std::size_t>(ctx.count("pair_n"), n);
  auto bes = ctx.replicate<std::array<double, 4>>(np, [](RngStream& rng, std::size_t) {
    std::array<double, 5> x{};
    std::array<double, 4> out{};
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (auto& c : x) {
        c += std::sqrt(0.5) * rng.normal();
        s += c * c;
      }
      out[j] = std::sqrt(s);
    }
    return out;
  });
  RngStream perm = ctx.stream();
  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {1, 3}, {0, 3}};
  const char* names[] = {"energy_pair_0.5_1", "energy_pair_1_2", "energy_pair_0.5_2"};
  for (std::size_t k = 0; k < 3; ++k) {
    PointSet x{2, {}}, y{2, {}};
    for (std::size_t i = 0; i < np; ++i) {
      x.push({z[i][pairs[k].first], z[i][pairs[k].second]});
      y.push({bes[i][pairs[k].first], bes[i][pairs[k].second]});
    }
    auto r = energy_distance_test(x, y, ctx.count("pair_permutations"), perm, ctx.alpha());
    r.report_only = true;
    r.judge();
    ctx.add(r, names[k]);
  }
  ctx.add_sample("two_k_minus_b", {"t0.5", "t1", "t1.5", "t2"},
                 {column(z, [](const auto& a) { return a[0]; }), column(z, [](const auto& a) { return a[1]; }),
                  column(z, [](const auto& a) { return a[2]; }), column(z, [](const auto& a) { return a[3]; })});
}

inline void conjecture_qv(Context& ctx) {
  std::size_t n = ctx.count("n"), steps = ctx.count("steps");
  auto qv = ctx.replicate<double>(n, [steps](RngStream& rng, std::size_t) {
    MajorantSkeleton sk = sample_majorant_cover(0.0, 1.0, rng);
    GridPath p = attach_excursions_on_grid(sk, 0.0, 1.0 / static_cast<double>(steps), steps, rng);
    for (std::size_t j = 0; j <= steps; ++j) p.values[j] = 2.0 * sk(p.time(j)) - p.values[j];
    return quadratic_variation(p);
  });
  MeanSE m = mean_se(qv);
  auto r = tolerance_check("", m.mean, 1.0, ctx.param("tolerance"));
  r.note = "se=" + std::to_string(m.se);
  ctx.add(r, "mean_qv");
  std::size_t inside = 0;
  for (double q : qv) inside += std::abs(q - 1.0) <= ctx.param("tolerance") ? 1 : 0;
  auto share = make_report("", {n}, static_cast<double>(inside) / static_cast<double>(n),
                           static_cast<double>(inside) / static_cast<double>(n), 0.0, "p");
  share.report_only = true;
  share.note = "share of paths with |qv - 1| within tolerance";
  share.judge();
  ctx.add(share, "per_path_qv_share");
  ctx.add_sample("qv", {"qv"}, {qv});
}

struct BandSample {
  FixedTimeSample f;
  double z;
};

/// Straddle samples with 2K(1) - B(1) within `band` of z0. Each replication
/// draws until it accepts, so the result is exactly n accepted samples.
inline std::vector<BandSample> band_sample(Context& ctx, double z0, double band, std::size_t n) {
  detail::require(z0 > 0.0 && band > 0.0, "band sampling: need z > 0 and band > 0");
  if (chi_cdf(5, z0 + band) - chi_cdf(5, std::max(z0 - band, 0.0)) < 1e-6)
    throw parameter_error("band sampling: band too narrow, acceptance probability below 1e-6");
  return ctx.replicate<BandSample>(n, [=](RngStream& rng, std::size_t) {
    for (;;) {
      FixedTimeSample f = straddle_time_one(rng);
      double z = f.two_k_minus_b();
      if (std::abs(z - z0) <= band) return BandSample{f, z};
    }
  });
}

inline void conditional_moments(Context& ctx) {
  double z0 = ctx.param("z");
  std::size_t n = ctx.count("n");
  for (int k = 0; k < 2; ++k) {
    double band = ctx.param("band") / (k + 1);
    auto s = band_sample(ctx, z0, band, n);
    std::string tag = k == 0 ? "_band_wide" : "_band_narrow";
    // Each sample is compared with the conditional law at its own z.
    auto da = column(s, [](const BandSample& b) { return b.f.a - b.z / 4.0; });
    auto dy = column(s, [](const BandSample& b) { return 1.0 / b.f.y - 3.0 / b.z; });
    auto ua = column(s, [](const BandSample& b) { return b.f.a / b.z; });
    auto r1 = mean_check(da, 0.0);
    r1.note += " band=" + std::to_string(band);
    ctx.add(r1, "mean_slope_minus_z_over_4" + tag);
    auto r2 = mean_check(dy, 0.0);
    r2.note += " band=" + std::to_string(band) + " (1/y has infinite conditional variance)";
    ctx.add(r2, "mean_inverse_gap_minus_3_over_z" + tag);
    ctx.add(ks_test(ua, [](double u) {
              u = std::clamp(u, 0.0, 1.0);
              return 1.0 - (1.0 - u) * (1.0 - u) * (1.0 - u);
            }, ctx.alpha()),
            "ks_slope_over_z_beta13" + tag);
  }
}

struct Bump {
  std::string name;
  double shift;  // phi(x) = exp(-(x - z - shift)^2)
  double f(double x, double z) const { double d = x - z - shift; return std::exp(-d * d); }
  double f1(double x, double z) const { double d = x - z - shift; return -2.0 * d * std::exp(-d * d); }
  double f2(double x, double z) const {
    double d = x - z - shift;
    return (4.0 * d * d - 2.0) * std::exp(-d * d);
  }
};

inline void generator_check(Context& ctx) {
  double z0 = ctx.param("z"), h = ctx.param("h"), band = ctx.param("band");
  if (h < 1e-4 || h > 1e-2) throw parameter_error("generator_check: h must lie in [1e-4, 1e-2]");
  std::size_t n = ctx.count("n");
  struct Row {
    double z, after, mean_after;  // mean_after is NaN past the next vertex
  };
  // Same check at the given band and at half of it; both must pass.
  for (int k = 0; k < 2; ++k) {
    double bk = band / (k + 1);
    if (chi_cdf(5, z0 + bk) - chi_cdf(5, std::max(z0 - bk, 0.0)) < 1e-6)
      throw parameter_error("generator_check: band too narrow, acceptance probability below 1e-6");
    auto rows = ctx.replicate<Row>(n, [=](RngStream& rng, std::size_t) {
      for (;;) {
        FixedTimeSample f = straddle_time_one(rng);
        double z = f.two_k_minus_b();
        if (std::abs(z - z0) > bk) continue;
        PsiState st = psi_from(f);
        PsiState nx = psi_step(st, h, rng);
        double mean = NAN;
        if (h < st.w)
          mean = st.k + st.a * h + noncentral_chi3_mean(st.y * (st.w - h) / st.w, std::sqrt(h * (st.w - h) / st.w));
        return Row{z, nx.k + nx.y, mean};
      }
    });
    for (const Bump& bump : {Bump{"bump_center", 0.0}, Bump{"bump_shifted", 0.5}}) {
      std::vector<double> diff(n), raw(n);
      double target = 0.0, est = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Row& r = rows[i];
        double d = (bump.f(r.after, z0) - bump.f(r.z, z0)) / h;
        raw[i] = d;
        // Zero-mean control variate from the exact conditional mean of Z(h).
        if (!std::isnan(r.mean_after)) d -= bump.f1(r.z, z0) * (r.after - r.mean_after) / h;
        double gen = 2.0 / r.z * bump.f1(r.z, z0) + 0.5 * bump.f2(r.z, z0);
        diff[i] = d - gen;
        target += gen;
        est += d;
      }
      target /= static_cast<double>(n);
      est /= static_cast<double>(n);
      MeanSE m = mean_se(diff);
      double tol = std::max(0.05 * std::abs(target), 3.0 * m.se);
      auto r = make_report("", {n}, est, std::abs(m.mean), tol, "distance");
      double analytic = 2.0 / z0 * bump.f1(z0, z0) + 0.5 * bump.f2(z0, z0);
      MeanSE mr = mean_se(raw);
      r.note = "target=" + std::to_string(target) + " analytic_at_z=" + std::to_string(analytic) +
               " se=" + std::to_string(m.se) + " raw_estimate=" + std::to_string(mr.mean) +
               " raw_se=" + std::to_string(mr.se) + " band=" + std::to_string(bk);
      ctx.add(r, "generator_" + bump.name + (k == 0 ? "_band_wide" : "_band_narrow"));
    }
    if (k == 0)
      ctx.add_sample("steps", {"z", "z_after"},
                     {column(rows, [](const Row& r) { return r.z; }),
                      column(rows, [](const Row& r) { return r.after; })});
  }
}

inline void psi_scaling_consistency(Context& ctx) {
  std::size_t n = ctx.count("n");
  double delta = ctx.param("delta");
  auto stepped = ctx.replicate<PsiState>(n, [delta](RngStream& rng, std::size_t) {
    return psi_step(psi_from(straddle_time_one(rng)), delta, rng);
  });
  auto direct = ctx.replicate<PsiState>(n, [delta](RngStream& rng, std::size_t) {
    return psi_from(straddle_at(1.0 + delta, rng));
  });
  using F = double (*)(const PsiState&);
  const std::pair<const char*, F> comps[] = {
      {"ks_slope", [](const PsiState& s) { return s.a; }},
      {"ks_value", [](const PsiState& s) { return s.k; }},
      {"ks_gap", [](const PsiState& s) { return s.y; }},
      {"ks_time_to_vertex", [](const PsiState& s) { return s.w; }}};
  for (auto [name, f] : comps) ctx.add(ks_test(column(stepped, f), column(direct, f), ctx.alpha()), name);
  auto sum = column(stepped, [](const PsiState& s) { return s.k + s.y; });
  ctx.add(ks_test(sum, scaled_chi_cdf(5, std::sqrt(1.0 + delta)), ctx.alpha()), "ks_two_k_minus_b_chi5");
}

inline void bridge_line_mc(Context& ctx) {
  std::size_t n = ctx.count("n"), steps = ctx.count("steps");
  // Discrete monitoring misses crossings between grid points; to first order
  // this shifts the barrier away by 0.5826 sqrt(dt).
  constexpr double kShift = 0.5826;
  struct Case {
    double s, t, a, b, x, y;
  };
  const Case cases[] = {{0.0, 1.0, 0.5, 0.5, 0.0, 0.0}, {1.0, 3.0, -0.2, 1.0, 0.2, 0.1}};
  int k = 0;
  for (const Case& c : cases) {
    auto hits = ctx.replicate<char>(n, [=](RngStream& rng, std::size_t) {
      GridPath p = sample_bridge(steps, c.t - c.s, c.x, c.y, rng);
      for (std::size_t j = 0; j <= steps; ++j)
        if (p.values[j] >= c.a * (c.s + p.time(j)) + c.b) return char{1};
      return char{0};
    });
    std::size_t h = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), char{1}));
    double dt = (c.t - c.s) / static_cast<double>(steps);
    double p = bridge_crossing_prob(c.s, c.t, c.a, c.b + kShift * std::sqrt(dt), c.x, c.y);
    auto r = frequency_check(h, n, p);
    r.note += " continuous=" + std::to_string(bridge_crossing_prob(c.s, c.t, c.a, c.b, c.x, c.y));
    ctx.add(r, "crossing_case_" + std::to_string(++k));
  }
}

inline void time_inversion(Context& ctx) {
  std::size_t n = ctx.count("n");
  // t K(1/t) is the majorant of the inverted path t B(1/t), another BM.
  auto inv = ctx.replicate<std::array<double, 2>>(n, [](RngStream& rng, std::size_t) {
    MajorantSkeleton sk = sample_majorant_cover(0.4, 2.5, rng);
    MajorantSkeleton out{{}, true};
    for (auto it = sk.vertices.rbegin(); it != sk.vertices.rend(); ++it)
      if (it->t > 0.0) out.vertices.push_back({1.0 / it->t, it->v / it->t});
    return std::array<double, 2>{straddle(out, 1.0).slope, straddle(out, 2.0).value};
  });
  auto ref1 = straddles(ctx, n);
  auto ref2 = ctx.replicate<double>(n, [](RngStream& rng, std::size_t) { return straddle_at(2.0, rng).k; });
  ctx.add(ks_test(column(inv, [](const auto& a) { return a[0]; }),
                  column(ref1, [](const FixedTimeSample& f) { return f.a; }), ctx.alpha()),
          "ks_slope_at_1");
  ctx.add(ks_test(column(inv, [](const auto& a) { return a[1]; }), ref2, ctx.alpha()), "ks_value_at_2");
}

inline void grid_poisson_crossval(Context& ctx) {
  std::size_t n = ctx.count("n"), steps = ctx.count("steps");
  double T = ctx.param("horizon");
  detail::require(T > 1.0, "grid_poisson_crossval: horizon must exceed 1");
  double dt = T / static_cast<double>(steps);
  auto functional = [](const GridPath& p) {
    MajorantSkeleton sk = concave_majorant(p);
    StraddleInfo st = straddle(sk, 1.0, p);
    return std::array<double, 3>{st.slope, st.value, st.gap};
  };
  auto pois = ctx.replicate<std::array<double, 3>>(n, [=](RngStream& rng, std::size_t) {
    MajorantSkeleton sk = sample_majorant_cover(0.0, T, rng);
    return functional(attach_excursions_on_grid(sk, 0.0, dt, steps, rng));
  });
  auto grid = ctx.replicate<std::array<double, 3>>(n, [=](RngStream& rng, std::size_t) {
    return functional(sample_bm(steps, T, 0.0, rng));
  });
  PointSet x{3, {}}, y{3, {}};
  for (std::size_t i = 0; i < n; ++i) {
    x.push({pois[i][0], pois[i][1], pois[i][2]});
    y.push({grid[i][0], grid[i][1], grid[i][2]});
  }
  RngStream perm = ctx.stream();
  ctx.add(energy_distance_test(x, y, ctx.count("permutations"), perm, ctx.alpha()), "energy_slope_value_gap");
}

// ---------------------------------------------------------------------------

inline const std::vector<ExperimentEntry>& entries() {
  static const std::vector<ExperimentEntry> reg = [] {
    std::vector<ExperimentEntry> v{
        {"chi5_marginal", "2K(1) - B(1) has the chi_5 law", {{"n", 200000}}, chi5_marginal},
        {"exchangeability", "(K(1), K(1) - B(1)) is exchangeable",
         {{"n", 4000}, {"permutations", 1999}}, exchangeability},
        {"f3_gof", "(K'(1), I(1), K(1) - B(1)) has density 4y s phi(s), s = a + b + y",
         {{"n", 100000}, {"pilot", 20000}, {"bins", 4}, {"tolerance", 1e-5}}, f3_gof},
        {"f5_quadrature", "the five-variable fixed-time density integrates to 1",
         {{"n", 1}, {"tolerance", 1e-4}}, f5_quadrature},
        {"d1_mixture_consistency",
         "D_1 - 1 given (K'(1), I(1), K(1) - B(1)) is a mixture of IG and size-biased IG",
         {{"n", 200000}, {"cell_lo", 0.4}, {"cell_hi", 1.2}, {"tolerance", 1e-5}},
         d1_mixture_consistency},
        {"tau_counts", "jumps of tau form a Poisson process of intensity dr/r with chi_1^2 r^2 sizes",
         {{"n", 50000}, {"r_lo", 1.0}, {"r_hi", std::numbers::e}}, tau_counts},
        {"excursion_conditional", "given K, B is K minus independent Brownian excursions on the faces",
         {{"n", 100000}, {"g_center", 0.5}, {"d_center", 2.0}, {"g_band", 0.1}, {"d_band", 0.5}},
         excursion_conditional},
        {"zenith_atom_and_density",
         "zenith increments have an atom b/a at 0 and density h^{a,b} elsewhere",
         {{"n", 100000}, {"pilot", 20000}, {"a", 2.0}, {"b", 1.0}, {"bins", 6}, {"tolerance", 1e-4}},
         zenith_atom_and_density},
        {"bessel_minorant_counts",
         "faces of the convex minorant of BES(3, mu) form a Poisson process with intensity "
         "phi(sqrt(t)(mu - alpha))/sqrt(t)",
         {{"n", 50000}, {"mu", 2.0}, {"alpha1", 0.5}, {"alpha2", 1.5}}, bessel_minorant_counts},
        {"bessel_cross_construction",
         "direct and Poissonian constructions of the BES(3, mu) minorant agree in law",
         {{"n", 4000}, {"mu", 2.0}, {"horizon", 4.0}, {"steps", 8192}, {"permutations", 1999}},
         bessel_cross_construction},
        {"drift_fixed_marginals", "law of C'(1) for the convex minorant of BES(3, mu)",
         {{"n", 100000}, {"pilot", 20000}, {"mu", 2.0}, {"bins", 10}}, drift_fixed_marginals},
        {"tau_rho_stationarity",
         "rho_n / sqrt(tau_n) is stationary along the backward vertex chain",
         {{"n", 100000}, {"m", 8}}, tau_rho_stationarity},
        {"kappa_stationarity", "kappa_n / sqrt(tau_n) is stationary along the backward vertex chain",
         {{"n", 100000}, {"m", 5}}, kappa_stationarity},
        {"map_preservation", "the four-variable chain map preserves its product law",
         {{"n", 100000}, {"permutations", 1999}}, map_preservation},
        {"meander_rn_tilde",
         "the reversed pre-maximum path of B - mu t is BES(3) reweighted by 2M(R(1))/R(1)",
         {{"n", 200000}, {"n_path", 20000}, {"mu", 1.0}}, meander_rn_tilde},
        {"meander_rn_hat",
         "the reversed pre-sigma_mu path of B is BES(3) reweighted by 2 minslope(R)/R(1)",
         {{"n", 200000}, {"n_path", 40000}, {"mu", 1.0}}, meander_rn_hat},
        {"meander_marginals",
         "reversed meander ends: tilde(1) has density 4t tail(t); (hat(1), minslope/hat(1)) is "
         "(chi_3, beta(2,1))",
         {{"n", 200000}, {"mu", 1.0}}, meander_marginals},
        {"conjecture_marginals",
         "2K - B has BES(5) marginals; joint laws against BES(5) are recorded only",
         {{"n", 100000}, {"pair_n", 2000}, {"pair_permutations", 199}}, conjecture_marginals},
        {"conjecture_qv", "2K - B has quadratic variation t, like BES(5)",
         {{"n", 1000}, {"steps", 65536}, {"tolerance", 0.02}}, conjecture_qv},
        {"generator_check",
         "2K - B has the BES(5) generator (2/z) d/dz + (1/2) d^2/dz^2 at time 1",
         {{"n", 1000000}, {"z", 2.0}, {"h", 1e-3}, {"band", 0.02}}, generator_check},
        {"conditional_moments",
         "given 2K(1) - B(1) = z: K'(1)/z ~ beta(1,3), E[K'(1)] = z/4, E[1/(K - B)] = 3/z",
         {{"n", 100000}, {"z", 2.0}, {"band", 0.02}}, conditional_moments},
        {"psi_scaling_consistency",
         "the four-dimensional fixed-time state is Markov: one step from t = 1 matches t = 1 + delta",
         {{"n", 100000}, {"delta", 1.0}}, psi_scaling_consistency},
        {"bridge_line_mc", "a Brownian bridge crosses a line with probability exp(-2pq/(t-s))",
         {{"n", 20000}, {"steps", 1024}}, bridge_line_mc},
        {"time_inversion", "t K(1/t) is the majorant of the time-inverted Brownian motion",
         {{"n", 100000}}, time_inversion},
        {"grid_poisson_crossval",
         "majorants of grid Brownian paths and of Poisson-reconstructed paths agree in law",
         {{"n", 2000}, {"horizon", 4.0}, {"steps", 16384}, {"permutations", 1999}},
         grid_poisson_crossval},
    };
    for (auto& e : v) e.defaults.emplace("alpha", 1e-3);
    return v;
  }();
  return reg;
}

}  // namespace experiments

inline const std::vector<ExperimentEntry>& registry() { return experiments::entries(); }

inline std::string registry_names() {
  std::string s;
  for (const auto& e : registry()) s += (s.empty() ? "" : ", ") + e.name;
  return s;
}

inline const ExperimentEntry& find_experiment(const std::string& name) {
  for (const auto& e : registry())
    if (e.name == name) return e;
  throw registry_error("unknown experiment '" + name + "'; valid names: " + registry_names());
}

/// Defaults merged with the overrides; unknown keys are rejected.
inline ParamMap effective_params(const ExperimentEntry& e, const ParamMap& overrides) {
  ParamMap p = e.defaults;
  for (const auto& [k, v] : overrides) {
    auto it = p.find(k);
    if (it == p.end()) {
      std::string allowed;
      for (const auto& [dk, dv] : e.defaults) allowed += (allowed.empty() ? "" : ", ") + dk;
      throw parameter_error("experiment '" + e.name + "': unknown parameter '" + k +
                            "'; allowed: " + allowed);
    }
    it->second = v;
  }
  return p;
}

inline ExperimentResult run(const ExperimentSpec& spec) {
  const ExperimentEntry& e = find_experiment(spec.name);
  Context ctx(e.name, effective_params(e, spec.params), spec.seed, spec.workers);
  e.body(ctx);
  return ctx.finish();
}

}  // namespace cmlab
