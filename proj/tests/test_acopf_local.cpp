// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "ropf/acopf_local.hpp"
#include "ropf/error.hpp"
#include "ropf/matpower.hpp"

using namespace ropf;

namespace {

Network load(const char* name) { return load_network(oracle::data_path(name), CostPolicy::DropQuadratic); }

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

Fixings all_to(const Network& net, int v) {
  Fixings f;
  for (int s : net.shunt_buses()) f.u[s] = v;
  return f;
}

}  // namespace

TEST_CASE("case14 fixed solves: the better of u = 0 and u = 1 is 5371.50") {
  const Network net = load("case14.m");
  const RopfProblem p{net, MaxKShunts{4}};
  const NlpResult off = solve_fixed(p, all_to(net, 0));
  const NlpResult on = solve_fixed(p, all_to(net, 1));
  const double best = std::min(off.upper_bound(), on.upper_bound());
  CHECK(close(best, 5371.50, 1e-5));
  for (const NlpResult* r : {&off, &on}) {
    if (!r->feasible()) continue;
    const FeasibilityReport rep = evaluate_candidate(p, r->candidate);
    CHECK(rep.feasible);
    CHECK(rep.objective == doctest::Approx(r->objective));
  }
}

TEST_CASE("a feasible start is never worsened") {
  const Network net = load("case30.m");
  const RopfProblem p{net, MaxKShunts{4}};
  const Fixings f = all_to(net, 1);
  const NlpResult first = solve_fixed(p, f);
  REQUIRE(first.feasible());
  const NlpResult again = solve_fixed(p, f, &first.candidate);
  REQUIRE(again.feasible());
  CHECK(again.objective <= first.objective + 1e-9);
}

TEST_CASE("infeasible fixing is reported") {
  const Network net = load_network(oracle::test_data_path("twin_shunts.m"), CostPolicy::DropQuadratic);
  const NlpResult r = solve_fixed(RopfProblem{net, MaxKShunts{4}}, all_to(net, 0));
  CHECK(r.status == NlpStatus::Infeasible);
  CHECK(std::isinf(r.upper_bound()));
  // Two activations against a budget of one.
  const NlpResult over = solve_fixed(RopfProblem{net, MaxKShunts{1}}, all_to(net, 1));
  CHECK_FALSE(over.feasible());
}

TEST_CASE("continuous relaxation of case30 is feasible and below every fixed solve") {
  const Network net = load("case30.m");
  const RopfProblem p{net, MaxKShunts{4}};
  const NlpResult c = solve_continuous(p);
  REQUIRE(c.feasible());
  CHECK(evaluate_candidate(p, c.candidate, {1e-6, true}).feasible);
  double best = kInf;
  const auto& s = net.shunt_buses();
  for (int m = 0; m < 4; ++m) {
    Fixings f;
    f.u[s[0]] = m & 1;
    f.u[s[1]] = (m >> 1) & 1;
    best = std::min(best, solve_fixed(p, f).upper_bound());
  }
  CHECK(c.objective <= best + 1e-6 * best);
  CHECK(c.objective <= 373.41 * (1.0 + 1e-5));
}

TEST_CASE("without shunts the continuous solve is the fixed solve") {
  Network net = load("case14.m");
  for (Bus& b : net.buses) b.shunt.reset();
  net.finalize();
  const RopfProblem p{net, MaxKShunts{4}};
  const NlpResult a = solve_continuous(p);
  const NlpResult b = solve_fixed(p, {});
  REQUIRE(a.feasible());
  REQUIRE(b.feasible());
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-7));
}

TEST_CASE("genmoves with both directions keeps the better one") {
  const Network net = load("case57.m");
  std::vector<double> p0;
  double load = 0.0;
  for (const Bus& b : net.buses) load += b.load.real();
  double cap = 0.0;
  for (const Generator& g : net.generators) cap += g.pmax;
  for (const Generator& g : net.generators) p0.push_back(g.pmax * 1.02 * load / cap);
  const Fixings f = all_to(net, 1);  // all off is reactively infeasible
  const NlpResult up = solve_fixed(RopfProblem{net, GenMoves{p0, Direction::Up}}, f);
  const NlpResult down = solve_fixed(RopfProblem{net, GenMoves{p0, Direction::Down}}, f);
  const NlpResult both = solve_fixed(RopfProblem{net, GenMoves{p0, Direction::Both}}, f);
  REQUIRE((up.feasible() || down.feasible()));
  CHECK(both.upper_bound() == doctest::Approx(std::min(up.upper_bound(), down.upper_bound())));
  if (both.feasible()) {
    const Candidate& c = both.candidate;
    REQUIRE(c.delta_plus);
    CHECK(*c.delta_plus + *c.delta_minus == 1);
    CHECK(evaluate_candidate(RopfProblem{net, GenMoves{p0, Direction::Both}}, c).feasible);
  }
}

TEST_CASE("MPEC penalty drives a single fractional shunt to a binary value") {
  const Network net = load("case14.m");
  const RopfProblem p{net, MaxKShunts{4}};
  NlpResult c = solve_continuous(p);
  REQUIRE(c.feasible());
  for (auto& [s, u] : c.candidate.u) u = 0.5;
  const NlpResult m = solve_mpec(p, c.candidate);
  REQUIRE(m.feasible());
  for (const auto& [s, u] : m.candidate.u) CHECK(std::min(u, 1.0 - u) <= 1e-4);
}

TEST_CASE("MPEC on a binary start keeps it") {
  const Network net = load("case14.m");
  const RopfProblem p{net, MaxKShunts{4}};
  const NlpResult f = solve_fixed(p, all_to(net, 1));
  REQUIRE(f.feasible());
  const NlpResult m = solve_mpec(p, f.candidate);
  REQUIRE(m.feasible());
  for (const auto& [s, u] : m.candidate.u) CHECK(u == doctest::Approx(1.0));
  CHECK(m.objective <= f.objective + 1e-6 * f.objective);
}

TEST_CASE("three-step heuristic on the desk cases") {
  CHECK(close(three_step(RopfProblem{load("case14.m"), MaxKShunts{4}}).upper_bound(), 5371.50, 1e-3));
  CHECK(close(three_step(RopfProblem{load("case30.m"), MaxKShunts{4}}).upper_bound(), 373.41, 1e-3));
  CHECK(close(three_step(RopfProblem{load("case57.m"), MaxKShunts{4}}).upper_bound(), 25337.79, 1e-3));
}

TEST_CASE("three-step with every shunt fixed is one fixed solve") {
  const Network net = load("case30.m");
  const RopfProblem p{net, MaxKShunts{4}};
  const Fixings f = all_to(net, 0);
  CHECK(three_step(p, f).upper_bound() == solve_fixed(p, f).upper_bound());
}

TEST_CASE("rounding rules") {
  CHECK(round_k_largest({{1, 0.9}, {2, 0.6}, {3, 0.4}}, 4).u == std::map<int, int>{{1, 1}, {2, 1}, {3, 0}});
  CHECK(round_k_largest({{1, 0.9}, {2, 0.8}, {3, 0.7}, {4, 0.6}, {5, 0.55}}, 4).u ==
        std::map<int, int>{{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 0}});
  CHECK(round_k_largest({{1, 0.5}}, 1).u.at(1) == 1);
  CHECK(round_k_largest({{1, 0.7}, {2, 0.7}}, 1).u == std::map<int, int>{{1, 1}, {2, 0}});
}

TEST_CASE("rounding with repair") {
  const Network net = load("case118.m");
  const auto& s = net.shunt_buses();
  std::map<int, double> u;
  for (size_t i = 0; i < s.size(); ++i) u[s[i]] = i < 6 ? 0.95 - 0.05 * static_cast<double>(i) : 0.1;
  const Fixings r = round_with_repair(RopfProblem{net, MaxKShunts{4}}, u);
  CHECK(r.count_ones() == 4);
  for (size_t i = 0; i < 4; ++i) CHECK(r.u.at(s[i]) == 1);
  // Fixed entries are kept and count against the budget.
  Fixings fix;
  fix.u[s[10]] = 1;
  const Fixings r2 = round_with_repair(RopfProblem{net, MaxKShunts{4}}, u, fix);
  CHECK(r2.u.at(s[10]) == 1);
  CHECK(r2.count_ones() == 4);
  // MAXkmoves keeps the largest moves away from u0.
  std::map<int, int> u0;
  for (int b : s) u0[b] = 1;
  const Fixings r3 = round_with_repair(RopfProblem{net, MaxKMoves{2, u0}}, u);
  int moves = 0;
  for (int b : s) moves += r3.u.at(b) != 1;
  CHECK(moves == 2);
  // Equal distances: the lowest bus indices move.
  CHECK(r3.u.at(s[6]) == 0);
  CHECK(r3.u.at(s[7]) == 0);
  CHECK(r3.u.at(s.back()) == 1);
}

TEST_CASE("initial shunt state") {
  Network bare = load("case14.m");
  for (Bus& b : bare.buses) b.shunt.reset();
  bare.finalize();
  CHECK(initial_shunt_state(bare).empty());
  const Network net = load("case30.m");
  const auto a = initial_shunt_state(net);
  CHECK(a.size() == 2);
  for (const auto& [s, v] : a) CHECK((v == 0 || v == 1));
  CHECK(initial_shunt_state(net) == a);
}
