// Command-line front end: experiments, raw samples, density tables.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cmlab/experiments.hpp"
#include "cmlab/tables.hpp"

namespace {

using cmlab::ExperimentResult;
using cmlab::SampleTable;
using cmlab::TestReport;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFail = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

void write_table(std::ostream& os, const SampleTable& t) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << "\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t k = 0; k < t.data.size(); ++k) os << (k ? "," : "") << num(t.data[k][i]);
    os << "\n";
  }
}

const char* kReportHeader =
    "experiment,test,n,seed,statistic,value,threshold,kind,pass,report_only,retries,note\n";

void write_report_rows(std::ostream& os, const std::vector<TestReport>& reports) {
  for (const auto& r : reports) {
    std::string n;
    for (std::size_t k = 0; k < r.n.size(); ++k) n += (k ? ";" : "") + std::to_string(r.n[k]);
    os << r.experiment << "," << csv_field(r.test) << "," << n << "," << r.seed << ","
       << num(r.statistic) << "," << num(r.value) << "," << num(r.threshold) << "," << r.kind << ","
       << (r.pass ? "true" : "false") << "," << (r.report_only ? "true" : "false") << ","
       << r.retries << "," << csv_field(r.note) << "\n";
  }
}

json result_json(const ExperimentResult& res, double wall) {
  json j;
  j["name"] = res.name;
  j["params"] = res.params;
  j["seed"] = res.seed;
  j["version"] = CMLAB_VERSION;
  j["wall_time_s"] = wall;
  j["pass"] = res.pass();
  j["reports"] = json::array();
  for (const auto& r : res.reports)
    j["reports"].push_back({{"test", r.test},
                            {"n", r.n},
                            {"statistic", r.statistic},
                            {"value", r.value},
                            {"kind", r.kind},
                            {"threshold", r.threshold},
                            {"pass", r.pass},
                            {"report_only", r.report_only},
                            {"retries", r.retries},
                            {"note", r.note}});
  return j;
}

struct RunConfig {
  std::uint64_t seed = cmlab::kReferenceSeed;
  unsigned workers = 1;
  std::string out_dir;
  std::string format = "csv";
  cmlab::ParamMap params;
};

/// Defaults, then the CMLAB_SEED environment variable, then the config file.
/// Flags are applied by the caller afterwards.
RunConfig base_config(const std::string& config_path) {
  RunConfig c;
  if (const char* env = std::getenv("CMLAB_SEED")) {
    try {
      std::size_t pos = 0;
      c.seed = std::stoull(env, &pos);
      if (env[pos] != '\0') throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError(std::string("CMLAB_SEED is not an unsigned integer: ") + env);
    }
  }
  if (config_path.empty()) return c;
  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot read config file " + config_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  try {
    for (auto& [k, v] : j.items()) {
      if (k == "seed")
        c.seed = v.get<std::uint64_t>();
      else if (k == "workers")
        c.workers = v.get<unsigned>();
      else if (k == "out")
        c.out_dir = v.get<std::string>();
      else if (k == "format")
        c.format = v.get<std::string>();
      else if (k == "params")
        for (auto& [pk, pv] : v.items()) c.params[pk] = pv.get<double>();
      else
        throw UsageError("unknown config key '" + k + "' (allowed: seed, workers, out, format, params)");
    }
  } catch (const json::exception& e) {
    throw UsageError("bad value in config file: " + std::string(e.what()));
  }
  return c;
}

void emit(const std::string& out_dir, const std::string& file, const std::string& body) {
  if (out_dir.empty()) {
    std::cout << body;
    return;
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream f(std::filesystem::path(out_dir) / file);
  if (!f) throw UsageError("cannot write " + (std::filesystem::path(out_dir) / file).string());
  f << body;
}

int run_experiments(const std::string& name, const RunConfig& cfg) {
  std::vector<std::string> names;
  if (name == "all") {
    if (!cfg.params.empty()) throw UsageError("parameters cannot be combined with 'experiment all'");
    for (const auto& e : cmlab::registry()) names.push_back(e.name);
  } else {
    names.push_back(name);
  }
  bool all_pass = true;
  std::ostringstream csv;
  json reports = json::array();
  csv << kReportHeader;
  for (const auto& n : names) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res = cmlab::run({n, cfg.params, cfg.seed, cfg.workers});
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all_pass = all_pass && res.pass();
    write_report_rows(csv, res.reports);
    reports.push_back(result_json(res, wall));
    if (!cfg.out_dir.empty())
      for (const auto& [sname, table] : res.samples) {
        std::ostringstream s;
        write_table(s, table);
        emit(cfg.out_dir, res.name + "." + sname + ".csv", s.str());
      }
    std::cerr << res.name << ": " << (res.pass() ? "PASS" : "FAIL") << " (" << wall << " s)\n";
  }
  std::string stem = name == "all" ? "all" : name;
  if (cfg.format == "json")
    emit(cfg.out_dir, stem + ".reports.json", (names.size() == 1 ? reports[0] : reports).dump(2) + "\n");
  else
    emit(cfg.out_dir, stem + ".reports.csv", csv.str());
  return all_pass ? kExitOk : kExitFail;
}

std::vector<double> parse_numbers(const std::vector<std::string>& args) {
  std::vector<double> out;
  for (const auto& a : args) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(a, &pos));
      if (pos != a.size()) throw std::invalid_argument(a);
    } catch (const std::exception&) {
      throw UsageError("expected a number, got '" + a + "'");
    }
  }
  return out;
}

int run_main(int argc, char** argv) {
  CLI::App app{"cmlab: simulation and verification lab for the concave majorant of Brownian motion"};
  app.set_version_flag("--version", std::string(CMLAB_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out_dir, format;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "64-bit seed (default: CMLAB_SEED, else " +
                                        std::to_string(cmlab::kReferenceSeed) + ")");
    sub->add_option("--workers", workers, "worker threads; never changes results")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory (default: standard output)");
    sub->add_option("--format", format, "csv (default) or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--config", config_path, "JSON config: seed, workers, out, format, params");
  };

  auto* exp = app.add_subcommand("experiment", "run a registry entry, or 'all'");
  std::string exp_name;
  double exp_n = 0;
  std::vector<std::string> exp_params;
  exp->add_option("name", exp_name, "experiment name or 'all'")->required();
  exp->add_option("--n", exp_n, "main sample size (parameter n)");
  exp->add_option("--param", exp_params, "parameter override key=value (repeatable)");
  add_common(exp);

  auto* smp = app.add_subcommand("sample", "dump raw samples of a target");
  std::string target;
  std::vector<std::string> target_args;
  std::size_t smp_n = 1000;
  smp->add_option("target", target, "chi5 | straddle1 | zenith a b | meander mu | chain m | tau-window lo hi")
      ->required();
  smp->add_option("args", target_args, "numeric arguments of the target");
  smp->add_option("--n", smp_n, "number of samples (windows for tau-window)")->check(CLI::PositiveNumber);
  add_common(smp);

  auto* den = app.add_subcommand("density", "tabulate a density oracle on a grid");
  std::string oracle;
  cmlab::tables::DensityOptions dopt;
  den->add_option("oracle", oracle, "f3 | f5 | h_ab | ig | ig_sb | meander_rn")->required();
  den->add_option("--grid", dopt.grid, "cells per axis")->capture_default_str();
  den->add_option("--lo", dopt.lo, "lower end of the tabulated range");
  den->add_option("--hi", dopt.hi, "upper end of the tabulated range");
  den->add_option("--a", dopt.a, "h_ab: upper slope")->capture_default_str();
  den->add_option("--b", dopt.b, "h_ab: lower slope")->capture_default_str();
  den->add_option("--mu", dopt.mu, "ig, ig_sb: drift")->capture_default_str();
  den->add_option("--y", dopt.y, "ig, ig_sb: level")->capture_default_str();
  std::string den_out;
  den->add_option("--out", den_out, "output file (default: standard output)");

  auto* lst = app.add_subcommand("list", "registry with one-line claims");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (lst->parsed()) {
      for (const auto& e : cmlab::registry()) std::cout << e.name << "\t" << e.claim << "\n";
      return kExitOk;
    }
    if (den->parsed()) {
      std::ostringstream s;
      write_table(s, cmlab::tables::density_table(oracle, dopt));
      if (den_out.empty()) {
        std::cout << s.str();
      } else {
        std::ofstream f(den_out);
        if (!f) throw UsageError("cannot write " + den_out);
        f << s.str();
      }
      return kExitOk;
    }

    CLI::App* sub = exp->parsed() ? exp : smp;
    RunConfig cfg = base_config(config_path);
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--workers")) cfg.workers = workers;
    if (sub->count("--out")) cfg.out_dir = out_dir;
    if (sub->count("--format")) cfg.format = format;
    if (cfg.format != "csv" && cfg.format != "json") throw UsageError("format must be csv or json");

    if (exp->parsed()) {
      for (const auto& kv : exp_params) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + kv + "'");
        cfg.params[kv.substr(0, eq)] = parse_numbers({kv.substr(eq + 1)})[0];
      }
      if (exp->count("--n")) cfg.params["n"] = exp_n;
      return run_experiments(exp_name, cfg);
    }

    auto args = parse_numbers(target_args);
    SampleTable t = cmlab::tables::sample_target(target, args, smp_n, cfg.seed, cfg.workers);
    if (cfg.format == "json") {
      json j{{"target", target}, {"args", args}, {"seed", cfg.seed}, {"columns", json::object()}};
      for (std::size_t k = 0; k < t.columns.size(); ++k) j["columns"][t.columns[k]] = t.data[k];
      emit(cfg.out_dir, "sample." + target + ".json", j.dump(2) + "\n");
      return kExitOk;
    }
    std::ostringstream s;
    write_table(s, t);
    emit(cfg.out_dir, "sample." + target + ".csv", s.str());
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cmlab::registry_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cmlab::parameter_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
