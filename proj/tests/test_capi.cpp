// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

// Exercises the shared library through its C header only.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "ropf/ropf.h"

namespace {

std::string data(const char* name) { return std::string(ROPF_DATA_DIR) + "/" + name; }

struct Net {
  ropf_network* h = nullptr;
  ~Net() { ropf_network_free(h); }
};

struct Prob {
  ropf_problem* h = nullptr;
  ~Prob() { ropf_problem_free(h); }
};

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::strlen(ropf_version()) > 0);
  CHECK(std::string(ropf_status_string(ROPF_OK)) != std::string(ropf_status_string(ROPF_ERR_SYNTAX)));
}

TEST_CASE("loading and querying a network") {
  Net n;
  REQUIRE(ropf_network_load(data("case14.m").c_str(), 1, &n.h) == ROPF_OK);
  CHECK(ropf_network_num_buses(n.h) == 14);
  CHECK(ropf_network_num_generators(n.h) == 5);
  CHECK(ropf_network_num_branches(n.h) == 20);
  REQUIRE(ropf_network_num_shunts(n.h) == 1);
  int id = 0;
  CHECK(ropf_network_shunt_id(n.h, 0, &id) == ROPF_OK);
  CHECK(id == 9);
  CHECK(ropf_network_shunt_id(n.h, 3, &id) == ROPF_ERR_INVALID_ARGUMENT);
  char* js = nullptr;
  REQUIRE(ropf_network_cliques(n.h, 1, &js) == ROPF_OK);
  CHECK(std::string(js).find("vertices") != std::string::npos);
  ropf_string_free(js);
}

TEST_CASE("errors map to status codes") {
  ropf_network* n = nullptr;
  CHECK(ropf_network_load("/nonexistent.m", 1, &n) == ROPF_ERR_IO);
  CHECK(n == nullptr);
  CHECK(std::strlen(ropf_last_error()) > 0);
  CHECK(ropf_network_parse("mpc.version = '3';", 1, &n) == ROPF_ERR_UNSUPPORTED_VERSION);
  CHECK(ropf_network_parse("mpc.version = '2'; mpc.baseMVA = 100;", 1, &n) == ROPF_ERR_MISSING_TABLE);
  CHECK(ropf_network_load(nullptr, 1, &n) == ROPF_ERR_NULL_POINTER);
  Net q;
  REQUIRE(ropf_network_load(data("case14.m").c_str(), 1, &q.h) == ROPF_OK);
  ropf_problem* p = nullptr;
  CHECK(ropf_problem_maxkshunts(q.h, -1, &p) == ROPF_ERR_INVALID_ARGUMENT);
  CHECK(p == nullptr);
}

TEST_CASE("root bound, heuristic and fixed solves on case14") {
  Net n;
  REQUIRE(ropf_network_load(data("case14.m").c_str(), 1, &n.h) == ROPF_OK);
  Prob p;
  REQUIRE(ropf_problem_maxkshunts(n.h, 4, &p.h) == ROPF_OK);
  int status = -1;
  double lb = 0.0, u = -1.0;
  REQUIRE(ropf_root_bound(p.h, nullptr, &status, &lb, &u) == ROPF_OK);
  CHECK(status == ROPF_RELAX_OPTIMAL);
  CHECK(lb == doctest::Approx(5371.50).epsilon(1e-4));
  CHECK(u >= 0.0);
  CHECK(u <= 1.0);
  double ub = 0.0;
  REQUIRE(ropf_three_step(p.h, &ub) == ROPF_OK);
  CHECK(ub == doctest::Approx(5371.50).epsilon(1e-5));
  CHECK(ub >= lb);
  const int on = 1, off = 0;
  double ub_on = 0.0, ub_off = 0.0;
  REQUIRE(ropf_solve_fixed(p.h, &on, &ub_on) == ROPF_OK);
  REQUIRE(ropf_solve_fixed(p.h, &off, &ub_off) == ROPF_OK);
  CHECK(std::min(ub_on, ub_off) == doctest::Approx(ub).epsilon(1e-6));
}

TEST_CASE("full pipeline through ropf_solve") {
  Net n;
  REQUIRE(ropf_network_load(data("case30.m").c_str(), 1, &n.h) == ROPF_OK);
  Prob p;
  REQUIRE(ropf_problem_maxkshunts(n.h, 4, &p.h) == ROPF_OK);
  ropf_options o;
  ropf_options_default(&o);
  ropf_summary s;
  REQUIRE(ropf_solve(p.h, &o, &s) == ROPF_OK);
  CHECK(s.num_shunts == 2);
  CHECK(std::string(s.k_label) == "4");
  CHECK(s.ub == doctest::Approx(373.41).epsilon(1e-3));
  CHECK(s.gap_defined == 1);
  CHECK(s.gap <= 1e-4);
  CHECK(s.failed == 0);
}

TEST_CASE("maxkmoves and genmoves problems") {
  Net n;
  REQUIRE(ropf_network_load(data("case30.m").c_str(), 1, &n.h) == ROPF_OK);
  std::vector<int> u0(ropf_network_num_shunts(n.h), -1);
  REQUIRE(ropf_initial_shunt_state(n.h, u0.data()) == ROPF_OK);
  for (int v : u0) CHECK((v == 0 || v == 1));
  Prob m;
  CHECK(ropf_problem_maxkmoves(n.h, 1, u0.data(), &m.h) == ROPF_OK);
  const int ng = ropf_network_num_generators(n.h);
  std::vector<double> plans(2 * ng);
  REQUIRE(ropf_genmoves_scenarios(n.h, 42, 2, plans.data()) == ROPF_OK);
  Prob g;
  CHECK(ropf_problem_genmoves(n.h, plans.data(), ROPF_BOTH, &g.h) == ROPF_OK);
  double lb = 0.0;
  CHECK(ropf_root_bound(g.h, nullptr, nullptr, &lb, nullptr) == ROPF_ERR_INVALID_ARGUMENT);
  Prob bad;
  CHECK(ropf_problem_genmoves(n.h, plans.data(), 7, &bad.h) == ROPF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("bench report") {
  const std::string c14 = data("case14.m");
  const char* cases[] = {c14.c_str(), "/nonexistent/x.m"};
  ropf_bench_config cfg;
  ropf_bench_config_default(&cfg);
  cfg.cases = cases;
  cfg.num_cases = 2;
  ropf_report* r = nullptr;
  REQUIRE(ropf_bench(&cfg, &r) == ROPF_OK);
  REQUIRE(ropf_report_rows(r) == 2);
  ropf_summary s;
  REQUIRE(ropf_report_row(r, 0, &s) == ROPF_OK);
  CHECK(s.ub == doctest::Approx(5371.50).epsilon(1e-5));
  REQUIRE(ropf_report_row(r, 1, &s) == ROPF_OK);
  CHECK(s.failed == 1);
  CHECK(std::isinf(s.ub));
  CHECK(ropf_report_row(r, 2, &s) == ROPF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ropf_report_csv(r, 0)).find("case14") != std::string::npos);
  CHECK(std::string(ropf_report_csv(r, 1)).find("time_s") != std::string::npos);
  CHECK(std::string(ropf_report_table(r)).find("case14") != std::string::npos);
  CHECK(std::string(ropf_report_json(r)).find("\"instance\"") != std::string::npos);
  ropf_report_free(r);
}
