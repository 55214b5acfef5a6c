// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the solver through the C interface only.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ropf/ropf.h"

namespace {

struct Common {
  std::string variant = "maxkshunts";
  int k = 4;
  std::string u0 = "initial";
  std::uint64_t seed = 42;
  int scenarios = 5;
  bool find_min_k = false;
  bool keep_quadratic = false;
  double tol = 1e-8;
  int k_max = 1;
  bool dense = false;
  double time_limit = 3600.0;
  double gap_tol = 1e-4;
  bool no_fixing = false;
  double fix_lower = -1.0;
  double fix_upper = 2.0;
  bool no_bnb = false;
  bool no_rounding = false;
  bool verbose = false;
  bool times = false;
  std::string csv, json;
};

void add_common(CLI::App* app, Common& c) {
  const std::map<std::string, int> variants{{"maxkshunts", 0}, {"maxkmoves", 1}, {"genmoves", 2}};
  app->add_option("--variant", c.variant, "Optional constraint: maxkshunts, maxkmoves or genmoves")
      ->check(CLI::IsMember({"maxkshunts", "maxkmoves", "genmoves"}));
  app->add_option("-k", c.k, "Shunt budget for maxkshunts / maxkmoves")->check(CLI::NonNegativeNumber);
  app->add_option("--u0", c.u0, "maxkmoves reference state: initial or zero")
      ->check(CLI::IsMember({"initial", "zero"}));
  app->add_option("--seed", c.seed, "Seed of the genmoves plan generator");
  app->add_option("--scenarios", c.scenarios, "genmoves plans per instance")->check(CLI::PositiveNumber);
  app->add_flag("--find-min-k", c.find_min_k, "Raise k until the heuristic finds a feasible point");
  app->add_flag("--keep-quadratic-cost", c.keep_quadratic, "Reject cases whose cost has quadratic terms");
  app->add_option("--tol", c.tol, "Interior-point tolerance")->check(CLI::PositiveNumber);
  app->add_option("--kmax", c.k_max, "Clique merging passes")->check(CLI::NonNegativeNumber);
  app->add_flag("--dense", c.dense, "Single dense block instead of the clique decomposition");
  app->add_option("--time-limit", c.time_limit, "Branch-and-bound time limit in seconds")
      ->check(CLI::PositiveNumber);
  app->add_option("--gap-tol", c.gap_tol, "Pruning tolerance relative to the upper bound");
  app->add_flag("--no-fixing", c.no_fixing, "Disable the initial fixing");
  app->add_option("--fix-lower", c.fix_lower, "Custom threshold: u* <= value is fixed to 0");
  app->add_option("--fix-upper", c.fix_upper, "Custom threshold: u* >= value is fixed to 1");
  app->add_flag("--no-bnb", c.no_bnb, "Skip the branch-and-bound");
  app->add_flag("--no-rounding", c.no_rounding, "Skip the rounding baseline");
  app->add_flag("-v,--verbose", c.verbose, "Progress on stderr");
  app->add_flag("--times", c.times, "Include wall times in the CSV");
  app->add_option("--csv", c.csv, "Write the rows as CSV");
  app->add_option("--json", c.json, "Write the rows as JSON");
}

bool write_file(const std::string& path, const char* text) {
  std::ofstream f(path);
  f << text;
  if (!f) {
    std::cerr << "error: cannot write " << path << '\n';
    return false;
  }
  return true;
}

int run_bench(const std::vector<std::string>& cases, const Common& c, bool custom_thresholds) {
  std::vector<const char*> paths;
  for (const auto& s : cases) paths.push_back(s.c_str());
  ropf_bench_config cfg;
  ropf_bench_config_default(&cfg);
  cfg.cases = paths.data();
  cfg.num_cases = static_cast<int>(paths.size());
  cfg.variant = c.variant == "maxkshunts" ? ROPF_MAXKSHUNTS : c.variant == "maxkmoves" ? ROPF_MAXKMOVES : ROPF_GENMOVES;
  cfg.k = c.k;
  cfg.u0_zero = c.u0 == "zero";
  cfg.seed = c.seed;
  cfg.scenarios = c.scenarios;
  cfg.find_min_k = c.find_min_k;
  cfg.keep_quadratic_cost = c.keep_quadratic;
  ropf_options& o = cfg.options;
  o.ipm_tol = c.tol;
  o.k_max = c.k_max;
  o.dense = c.dense;
  o.time_limit_s = c.time_limit;
  o.gap_tol = c.gap_tol;
  o.run_bnb = !c.no_bnb;
  o.run_rounding = !c.no_rounding;
  o.verbose = c.verbose;
  if (c.no_fixing) {
    o.fixing_mode = ROPF_FIXING_NONE;
  } else if (custom_thresholds) {
    o.fixing_mode = ROPF_FIXING_CUSTOM;
    o.fix_lower = c.fix_lower;
    o.fix_upper = c.fix_upper;
  }
  ropf_report* rep = nullptr;
  const ropf_status st = ropf_bench(&cfg, &rep);
  if (st != ROPF_OK) {
    std::cerr << "error: " << ropf_status_string(st) << ": " << ropf_last_error() << '\n';
    return 2;
  }
  std::cout << ropf_report_table(rep);
  bool ok = true;
  if (!c.csv.empty()) ok = write_file(c.csv, ropf_report_csv(rep, c.times)) && ok;
  if (!c.json.empty()) ok = write_file(c.json, ropf_report_json(rep)) && ok;
  ropf_report_free(rep);
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive optimal power flow: SDP bounds, local heuristics and branch-and-bound"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ropf_version()));

  Common solve_opts, bench_opts;
  std::string solve_case;
  auto* solve = app.add_subcommand("solve", "Solve one instance");
  solve->add_option("case", solve_case, "MATPOWER case file")->required()->check(CLI::ExistingFile);
  add_common(solve, solve_opts);

  std::vector<std::string> bench_cases;
  auto* bench = app.add_subcommand("bench", "Run a batch of instances");
  bench->add_option("cases", bench_cases, "MATPOWER case files")->required();
  add_common(bench, bench_opts);

  std::string cl_case, cl_out;
  int cl_kmax = 1;
  auto* cliques = app.add_subcommand("cliques", "Dump the clique decomposition as JSON lines");
  cliques->add_option("case", cl_case, "MATPOWER case file")->required()->check(CLI::ExistingFile);
  cliques->add_option("--kmax", cl_kmax, "Clique merging passes")->check(CLI::NonNegativeNumber);
  cliques->add_option("-o,--out", cl_out, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) {
    const bool custom = solve->count("--fix-lower") + solve->count("--fix-upper") > 0;
    return run_bench({solve_case}, solve_opts, custom);
  }
  if (bench->parsed()) {
    const bool custom = bench->count("--fix-lower") + bench->count("--fix-upper") > 0;
    return run_bench(bench_cases, bench_opts, custom);
  }
  ropf_network* net = nullptr;
  ropf_status st = ropf_network_load(cl_case.c_str(), 1, &net);
  char* text = nullptr;
  if (st == ROPF_OK) st = ropf_network_cliques(net, cl_kmax, &text);
  ropf_network_free(net);
  if (st != ROPF_OK) {
    std::cerr << "error: " << ropf_status_string(st) << ": " << ropf_last_error() << '\n';
    return 2;
  }
  bool ok = true;
  if (cl_out.empty()) {
    std::cout << text;
  } else {
    ok = write_file(cl_out, text);
  }
  ropf_string_free(text);
  return ok ? 0 : 3;
}
