#include <catch_amalgamated.hpp>

#include <set>
#include <string>

#include "cmlab/experiments.hpp"
#include "cmlab/tables.hpp"

using namespace cmlab;
using Catch::Approx;

namespace {

void check_same(const ExperimentResult& a, const ExperimentResult& b) {
  REQUIRE(a.reports.size() == b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(a.reports[i].test == b.reports[i].test);
    CHECK(a.reports[i].statistic == b.reports[i].statistic);
    CHECK(a.reports[i].value == b.reports[i].value);
    CHECK(a.reports[i].pass == b.reports[i].pass);
  }
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].second.data == b.samples[i].second.data);
}

}  // namespace

TEST_CASE("registry holds every named scenario once") {
  const char* required[] = {"chi5_marginal", "exchangeability", "f3_gof", "f5_quadrature",
                            "d1_mixture_consistency", "tau_counts", "excursion_conditional",
                            "zenith_atom_and_density", "bessel_minorant_counts",
                            "bessel_cross_construction", "drift_fixed_marginals",
                            "tau_rho_stationarity", "kappa_stationarity", "map_preservation",
                            "meander_rn_tilde", "meander_rn_hat", "meander_marginals",
                            "conjecture_marginals", "conjecture_qv", "generator_check",
                            "conditional_moments", "psi_scaling_consistency", "bridge_line_mc"};
  std::set<std::string> names;
  for (const auto& e : registry()) {
    CHECK(names.insert(e.name).second);
    CHECK_FALSE(e.claim.empty());
    CHECK(e.defaults.count("n") == 1);
    CHECK(e.defaults.count("alpha") == 1);
  }
  for (const char* r : required) CHECK(names.count(r) == 1);
}

TEST_CASE("unknown names and parameters are rejected") {
  try {
    run({"nosuch", {}, 1, 1});
    FAIL("expected registry_error");
  } catch (const registry_error& e) {
    std::string msg = e.what();
    CHECK(msg.find("chi5_marginal") != std::string::npos);
    CHECK(msg.find("meander_rn_hat") != std::string::npos);
  }
  CHECK_THROWS_AS(run({"chi5_marginal", {{"bins", 3}}, 1, 1}), parameter_error);
  CHECK_THROWS_AS(run({"chi5_marginal", {{"n", 10.5}}, 1, 1}), parameter_error);
  CHECK_THROWS_AS(run({"chi5_marginal", {{"n", 0}}, 1, 1}), parameter_error);
  CHECK_THROWS_AS(run({"generator_check", {{"h", 0.1}}, 1, 1}), parameter_error);
  CHECK_THROWS_AS(run({"conditional_moments", {{"band", 1e-9}}, 1, 1}), parameter_error);
  CHECK_THROWS_AS(run({"zenith_atom_and_density", {{"a", 1.0}, {"b", 2.0}}, 1, 1}), parameter_error);
}

TEST_CASE("chi5_marginal gives one passing report") {
  auto r = run({"chi5_marginal", {{"n", 20000}}, 42, 1});
  REQUIRE(r.reports.size() == 1);
  CHECK(r.reports[0].experiment == "chi5_marginal");
  CHECK(r.reports[0].seed == 42);
  CHECK(r.reports[0].n == std::vector<std::size_t>{20000});
  CHECK(r.pass());
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples[0].second.rows() == 20000);
  CHECK(r.params.at("n") == 20000);
}

TEST_CASE("results do not depend on the worker count") {
  for (const char* name : {"chi5_marginal", "tau_counts", "excursion_conditional", "meander_marginals"}) {
    INFO(name);
    auto a = run({name, {{"n", 20000}}, 7, 1});
    auto b = run({name, {{"n", 20000}}, 7, 3});
    check_same(a, b);
  }
  auto a = run({"map_preservation", {{"n", 600}, {"permutations", 100}}, 7, 1});
  auto b = run({"map_preservation", {{"n", 600}, {"permutations", 100}}, 7, 4});
  check_same(a, b);
  // A different seed gives different draws.
  auto c = run({"chi5_marginal", {{"n", 3000}}, 8, 1});
  CHECK(c.reports[0].statistic != run({"chi5_marginal", {{"n", 3000}}, 7, 1}).reports[0].statistic);
}

TEST_CASE("map_preservation reports four marginals and the joint test") {
  auto r = run({"map_preservation", {{"n", 2000}, {"permutations", 199}}, 3, 1});
  REQUIRE(r.reports.size() == 5);
  CHECK(r.reports[4].test == "energy_joint");
  for (const auto& t : r.reports) CHECK(t.note.find("bonferroni_") != std::string::npos);
}

TEST_CASE("joint BES(5) pair tests are report-only") {
  auto r = run({"conjecture_marginals", {{"n", 2000}, {"pair_n", 300}, {"pair_permutations", 100}}, 5, 1});
  std::size_t judged = 0, recorded = 0;
  for (const auto& t : r.reports) {
    if (t.report_only) {
      ++recorded;
      CHECK(t.pass);
      CHECK(t.test.rfind("energy_pair", 0) == 0);
    } else {
      ++judged;
    }
  }
  CHECK(recorded == 3);
  CHECK(judged == 4);
}

TEST_CASE("small runs of the remaining scenarios are well formed") {
  struct Small {
    const char* name;
    ParamMap params;
    std::size_t reports;
  };
  const Small runs[] = {
      {"exchangeability", {{"n", 300}, {"permutations", 100}}, 2},
      {"d1_mixture_consistency", {{"n", 20000}}, 2},
      {"zenith_atom_and_density", {{"n", 5000}, {"pilot", 2000}, {"bins", 3}}, 3},
      {"bessel_minorant_counts", {{"n", 2000}}, 2},
      {"bessel_cross_construction", {{"n", 100}, {"steps", 512}, {"permutations", 100}}, 2},
      {"drift_fixed_marginals", {{"n", 5000}, {"pilot", 2000}, {"bins", 4}}, 1},
      {"tau_rho_stationarity", {{"n", 2000}}, 4},
      {"kappa_stationarity", {{"n", 2000}}, 1},
      {"meander_rn_tilde", {{"n", 5000}, {"n_path", 500}}, 5},
      {"meander_rn_hat", {{"n", 5000}, {"n_path", 500}}, 5},
      {"conjecture_qv", {{"n", 20}, {"steps", 4096}, {"tolerance", 0.1}}, 2},
      {"generator_check", {{"n", 2000}}, 4},
      {"conditional_moments", {{"n", 2000}}, 6},
      {"psi_scaling_consistency", {{"n", 2000}}, 5},
      {"bridge_line_mc", {{"n", 2000}, {"steps", 128}}, 2},
      {"time_inversion", {{"n", 2000}}, 2},
      {"grid_poisson_crossval", {{"n", 100}, {"steps", 1024}, {"permutations", 100}}, 1},
  };
  for (const auto& s : runs) {
    INFO(s.name);
    auto r = run({s.name, s.params, 11, 1});
    CHECK(r.reports.size() == s.reports);
    for (const auto& t : r.reports) {
      CHECK(t.experiment == s.name);
      CHECK_FALSE(t.test.empty());
      CHECK(std::isfinite(t.value));
    }
  }
}

TEST_CASE("slope law of the BES(3, mu) minorant") {
  double mu = 2.0;
  CHECK(experiments::minorant_slope_cdf(mu, 0.0) == 0.0);
  CHECK(experiments::minorant_slope_cdf(mu, mu) == 1.0);
  double prev = 0.0;
  for (double a : {0.2, 0.6, 1.0, 1.4, 1.8, 1.99}) {
    double c = experiments::minorant_slope_cdf(mu, a);
    CHECK(c > prev);
    prev = c;
  }
  CHECK(prev < 1.0);
  // Against direct simulation of the face process.
  RngStream rng(4, 0);
  std::size_t below = 0, n = 40000;
  for (std::size_t i = 0; i < n; ++i) below += bessel_minorant_at(mu, 1.0, rng).slope <= 1.0;
  double p = experiments::minorant_slope_cdf(mu, 1.0);
  CHECK(std::abs(static_cast<double>(below) / n - p) < 4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("sample targets and density tables") {
  auto t = tables::sample_target("straddle1", {}, 50, 1, 1);
  CHECK(t.columns == std::vector<std::string>{"a", "i", "k", "y", "g", "d"});
  CHECK(t.rows() == 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(t.data[2][i] == Approx(t.data[0][i] + t.data[1][i]));
  CHECK(tables::sample_target("chain", {3}, 10, 1, 1).columns.size() == 12);
  CHECK(tables::sample_target("tau-window", {1, 2}, 10, 1, 1).columns.size() == 3);
  CHECK(tables::sample_target("meander", {1.5}, 10, 1, 2).data ==
        tables::sample_target("meander", {1.5}, 10, 1, 1).data);
  CHECK_THROWS_AS(tables::sample_target("zenith", {2}, 10, 1, 1), parameter_error);
  CHECK_THROWS_AS(tables::sample_target("chain", {1.5}, 10, 1, 1), parameter_error);
  CHECK_THROWS_AS(tables::sample_target("nosuch", {}, 10, 1, 1), parameter_error);

  tables::DensityOptions o;
  o.grid = 400;
  auto f3 = tables::density_table("f3", o);
  double h = 5.0 / 400, ma = 0.0, my = 0.0;
  for (std::size_t i = 0; i < f3.rows(); ++i) {
    ma += f3.data[1][i] * h;
    my += f3.data[2][i] * h;
  }
  CHECK(ma == Approx(1.0).margin(2e-3));
  CHECK(my == Approx(1.0).margin(2e-3));
  o.grid = 64;
  auto hab = tables::density_table("h_ab", o);
  double mass = 0.0;
  for (std::size_t i = 0; i < hab.rows(); ++i) mass += hab.data[2][i] * hab.data[3][i];
  CHECK(mass == Approx(0.5).margin(2e-3));
  auto ig = tables::density_table("ig_sb", o);
  CHECK(ig.columns == std::vector<std::string>{"t", "density", "cdf"});
  CHECK(tables::density_table("meander_rn", o).rows() == 64);
  CHECK(tables::density_table("f5", o).rows() == 64 * 64);
  CHECK_THROWS_AS(tables::density_table("nosuch", o), parameter_error);
}
