// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "ropf/error.hpp"
#include "ropf/experiment.hpp"

using namespace ropf;

namespace {

// Two buses; the generator limits are substituted per test.
std::string two_bus(const std::string& gens, const std::string& costs, double pd) {
  return "mpc.version = '2';\nmpc.baseMVA = 100;\nmpc.bus = [\n"
         "1 3 0 0 0 0 1 1 0 0 1 1.1 0.9;\n2 1 " +
         std::to_string(pd) +
         " 0 0 0 1 1 0 0 1 1.1 0.9;\n];\nmpc.gen = [\n" + gens +
         "];\nmpc.branch = [\n1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;\n];\nmpc.gencost = [\n" + costs + "];\n";
}

Network net_of(const std::string& text) {
  return to_network(aggregate_generators(parse_case_text(text)), CostPolicy::DropQuadratic);
}

void check_plan(const Network& net, const std::vector<double>& p0) {
  REQUIRE(static_cast<int>(p0.size()) == net.num_generators());
  double load = 0.0;
  for (const Bus& b : net.buses) load += b.load.real();
  for (int g = 0; g < net.num_generators(); ++g) {
    CHECK(p0[g] >= net.generators[g].pmin);
    CHECK(p0[g] <= net.generators[g].pmax);
  }
  CHECK(std::accumulate(p0.begin(), p0.end(), 0.0) >= 1.02 * load - 1e-12);
}

}  // namespace

TEST_CASE("single generator plan lies in the forced interval") {
  const Network net = net_of(two_bus("1 0 0 100 -100 1 100 1 10 0;\n", "2 0 0 2 1 0;\n", 5.0));
  for (const auto& p0 : generate_genmoves_scenarios(net, 1, 20)) {
    check_plan(net, p0);
    CHECK(p0[0] >= 0.051 - 1e-12);
    CHECK(p0[0] <= 0.1);
  }
}

TEST_CASE("no slack: the plan is Pmax") {
  const Network net = net_of(
      two_bus("1 0 0 100 -100 1 100 1 51 0;\n2 0 0 100 -100 1 100 1 51 0;\n", "2 0 0 2 1 0;\n2 0 0 2 1 0;\n", 100.0));
  for (const auto& p0 : generate_genmoves_scenarios(net, 3, 5)) {
    CHECK(p0[0] == doctest::Approx(0.51));
    CHECK(p0[1] == doctest::Approx(0.51));
  }
  const Network small = net_of(two_bus("1 0 0 100 -100 1 100 1 50 0;\n", "2 0 0 2 1 0;\n", 100.0));
  CHECK_THROWS_AS(generate_genmoves_scenarios(small, 1, 1), Error);
}

TEST_CASE("case57 plans: valid and reproducible") {
  const Network net = load_network(oracle::data_path("case57.m"), CostPolicy::DropQuadratic);
  const auto a = generate_genmoves_scenarios(net, 42, 5);
  REQUIRE(a.size() == 5);
  for (const auto& p0 : a) check_plan(net, p0);
  CHECK(generate_genmoves_scenarios(net, 42, 5) == a);
  CHECK(generate_genmoves_scenarios(net, 43, 5) != a);
}

TEST_CASE("gap and value formatting") {
  CHECK(format_gap(3.49e-5) == "0.00%");
  CHECK(format_gap(1e-4) == "0.00%");
  CHECK(format_gap(0.0052) == "0.52%");
  CHECK(format_gap(0.0548) == "5.48%");
  CHECK(format_gap(1.2e-4) == "0.01%");
  CHECK(format_gap(std::nullopt) == "-");
  CHECK(format_value(kInf) == "Inf");
  CHECK(format_value(-kInf) == "-Inf");
  CHECK(format_value(5371.5) == "5371.50");
}

TEST_CASE("variant names") {
  CHECK(parse_variant_kind("maxkmoves") == VariantKind::MaxKMoves);
  CHECK(variant_kind_name(VariantKind::GenMoves) == "genmoves");
  CHECK_THROWS_AS(parse_variant_kind("other"), Error);
}

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.k = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RunConfig{};
  c.time_limit_s = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("case14 row, missing file row, deterministic CSV") {
  RunConfig c;
  c.cases = {oracle::data_path("case14.m"), "/nonexistent/case.m"};
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 2);
  const ResultRow& r = rows[0];
  CHECK(r.instance == "case14");
  CHECK(r.num_shunts == 1);
  CHECK(r.k_label == "4");
  CHECK(format_value(r.ub) == "5371.50");
  CHECK(format_value(r.lb) == "5371.50");
  CHECK(format_gap(r.gap) == "0.00%");
  CHECK_FALSE(r.bnb_run);
  REQUIRE(r.candidate);
  CHECK(evaluate_candidate(RopfProblem{load_network(c.cases[0], CostPolicy::DropQuadratic), MaxKShunts{4}},
                           *r.candidate)
            .feasible);
  CHECK(rows[1].instance == "case");
  CHECK_FALSE(rows[1].note.empty());
  CHECK(std::isinf(rows[1].ub));

  const std::string csv = format_csv(rows);
  CHECK(format_csv(run_experiment(c)) == csv);
  CHECK(csv.rfind("instance,|S|,k,UB,LB,gap,#binvar,#nodes,bnb_UB", 0) == 0);
  CHECK(format_csv(rows, true).find("time_s") != std::string::npos);
  const std::string table = format_table(rows);
  CHECK(table.find("case14") != std::string::npos);
  CHECK(rows_json(rows).find("\"instance\": \"case14\"") != std::string::npos);
}

TEST_CASE("genmoves rows carry a direction label") {
  RunConfig c;
  c.cases = {oracle::data_path("case14.m")};
  c.variant = VariantKind::GenMoves;
  c.scenarios = 2;
  c.run_bnb = false;
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 2);
  for (const ResultRow& r : rows) CHECK((r.k_label == "+" || r.k_label == "-"));
}
