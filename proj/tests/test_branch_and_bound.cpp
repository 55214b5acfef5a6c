// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "ropf/branch_and_bound.hpp"
#include "ropf/matpower.hpp"

using namespace ropf;

namespace {

Network load(const char* name) { return load_network(oracle::data_path(name), CostPolicy::DropQuadratic); }

RelaxationPoint point(std::map<int, double> u) {
  RelaxationPoint rp;
  rp.status = RelaxStatus::Optimal;
  rp.u = std::move(u);
  return rp;
}

// Delegates to the SDP but reports a numerical failure at chosen nodes.
class FlakyOracle : public BoundOracle {
 public:
  explicit FlakyOracle(std::function<bool(const Fixings&)> fail) : fail_(std::move(fail)) {}
  RelaxationPoint bound(const RopfProblem& p, const Fixings& fix) override {
    ++calls;
    if (fail_(fix)) return {};
    return inner_.bound(p, fix);
  }
  int calls = 0;

 private:
  std::function<bool(const Fixings&)> fail_;
  SdpBoundOracle inner_;
};

double enumerate(const RopfProblem& p) {
  const auto& s = p.net.shunt_buses();
  double best = kInf;
  for (int m = 0; m < (1 << s.size()); ++m) {
    Fixings f;
    for (size_t i = 0; i < s.size(); ++i) f.u[s[i]] = (m >> i) & 1;
    best = std::min(best, solve_fixed(p, f).upper_bound());
  }
  return best;
}

}  // namespace

TEST_CASE("initial fixing thresholds per variant") {
  const auto fix = [](const Variant& v, std::map<int, double> u) {
    return initial_fixing(point(std::move(u)), Thresholds::for_variant(v)).u;
  };
  CHECK(fix(MaxKShunts{4}, {{1, 0.1}, {2, 0.3}, {3, 0.9}}) == std::map<int, int>{{1, 0}});
  CHECK(fix(MaxKShunts{4}, {{1, 0.25}}) == std::map<int, int>{{1, 0}});
  CHECK(fix(MaxKMoves{4, {}}, {{1, 0.8}, {2, 0.5}}) == std::map<int, int>{{1, 1}});
  CHECK(fix(MaxKMoves{4, {}}, {{1, 0.75}}) == std::map<int, int>{{1, 1}});
  CHECK(fix(GenMoves{}, {{1, 0.95}, {2, 5e-5}, {3, 0.5}}) == std::map<int, int>{{1, 1}, {2, 0}});
  CHECK(fix(GenMoves{}, {{1, 0.9}, {2, 1e-4}}).empty());
  CHECK(initial_fixing(point({{1, 0.0}, {2, 1.0}}), Thresholds::none()).u.empty());
}

TEST_CASE("cardinality implication") {
  const Network net = load("case118.m");
  const auto& s = net.shunt_buses();
  Fixings f;
  for (int i = 0; i < 4; ++i) f.u[s[i]] = 1;
  const Fixings g = apply_cardinality_implication(RopfProblem{net, MaxKShunts{4}}, f);
  CHECK(g.u.size() == s.size());
  CHECK(g.count_ones() == 4);
  CHECK(apply_cardinality_implication(RopfProblem{net, MaxKShunts{5}}, f).u.size() == 4);
}

TEST_CASE("node selection") {
  std::vector<BnbNode> open;
  Fixings one, zero;
  one.u[3] = 1;
  zero.u[3] = 0;
  open.push_back({0.0, zero, 1, 1, 0});
  open.push_back({0.0, one, 1, 2, 0});
  CHECK(select_node(open) == 1);
  CHECK(select_node({open[0]}) == 0);
  // Depth dominates the number of ones.
  Fixings deep;
  deep.u = {{1, 0}, {2, 0}, {3, 0}};
  Fixings shallow;
  shallow.u = {{1, 1}, {2, 1}};
  CHECK(select_node({{0.0, shallow, 2, 5, 0}, {0.0, deep, 3, 4, 0}}) == 1);
}

TEST_CASE("branching variable") {
  CHECK(branch_variable(point({{4, 0.7}, {9, 0.4}}), {4, 9}) == 4);
  CHECK(branch_variable(point({{4, 0.5}, {9, 0.5}}), {9, 4}) == 4);
  CHECK(branch_variable(point({{9, 0.2}}), {9}) == 9);
}

TEST_CASE("case14 is solved at the root") {
  const RopfProblem p{load("case14.m"), MaxKShunts{4}};
  SdpBoundOracle o;
  const RelaxationPoint root = o.bound(p, {});
  const BnbResult r = run_bnb(p, root, o);
  CHECK(r.solved);
  CHECK(r.ub == doctest::Approx(5371.50).epsilon(1e-6));
  CHECK(*relative_gap(r.ub, r.lb) <= 1e-4);
  REQUIRE(r.best);
  CHECK(evaluate_candidate(p, *r.best).feasible);
}

TEST_CASE("no free shunt after fixing: a single node") {
  const RopfProblem p{load("case14.m"), MaxKShunts{4}};
  SdpBoundOracle o;
  const RelaxationPoint root = o.bound(p, {});
  BnbConfig cfg;
  cfg.thresholds = Thresholds{1.0, false, kInf, false};  // everything to 0
  const BnbResult r = run_bnb(p, root, o, cfg);
  CHECK(r.free_after_fixing == 0);
  CHECK(r.nodes == 1);
  CHECK(r.ub == solve_fixed(p, {{{p.net.shunt_buses()[0], 0}}}).upper_bound());
}

TEST_CASE("case30 agrees with enumeration") {
  const RopfProblem p{load("case30.m"), MaxKShunts{4}};
  SdpBoundOracle o;
  BnbConfig cfg;
  cfg.thresholds = Thresholds::none();
  cfg.gap_tol = 0.0;
  const BnbResult r = run_bnb(p, o.bound(p, {}), o, cfg);
  const double best = enumerate(p);
  CHECK(std::abs(r.ub - best) <= 1e-6 * best);
  CHECK(r.lb <= r.ub + 1e-6 * r.ub);
}

TEST_CASE("trace of the synthetic star: one-child first, two children per branching") {
  const RopfProblem p{load_network(oracle::test_data_path("star3.m"), CostPolicy::DropQuadratic), MaxKShunts{4}};
  SdpBoundOracle o;
  BnbConfig cfg;
  cfg.thresholds = Thresholds::none();
  const BnbResult r = run_bnb(p, o.bound(p, {}), o, cfg);
  REQUIRE(r.trace.size() >= 3);
  CHECK(r.trace[0].action == NodeAction::Branched);
  for (size_t i = 0; i < r.trace.size(); ++i) {
    const NodeRecord& n = r.trace[i];
    if (n.action != NodeAction::Branched) {
      CHECK(n.children.empty());
      continue;
    }
    CHECK(n.children.size() == 2);
    REQUIRE(i + 1 < r.trace.size());
    CHECK(r.trace[i + 1].parent == n.id);
    CHECK(r.trace[i + 1].fix.u.at(n.branch_bus) == 1);
  }
  CHECK(r.ub == doctest::Approx(enumerate(p)).epsilon(1e-6));
}

TEST_CASE("numerical failure inherits the father's bound and branches on the first free shunt") {
  const Network net = load("case30.m");
  const RopfProblem p{net, MaxKShunts{4}};
  const auto& s = net.shunt_buses();
  // Fail at the root node of the tree (empty fixing) only.
  FlakyOracle o([](const Fixings& f) { return f.u.empty(); });
  SdpBoundOracle plain;
  const RelaxationPoint root = plain.bound(p, {});
  BnbConfig cfg;
  cfg.thresholds = Thresholds::none();
  const BnbResult r = run_bnb(p, root, o, cfg);
  REQUIRE(!r.trace.empty());
  CHECK(r.trace[0].status == RelaxStatus::NumericalFailure);
  CHECK(r.trace[0].action == NodeAction::Branched);
  CHECK(r.trace[0].branch_bus == s[0]);
  CHECK(std::isinf(r.trace[0].lb));
  CHECK(r.lb >= r.lb_root);
  CHECK(r.ub == doctest::Approx(enumerate(p)).epsilon(1e-6));
}

TEST_CASE("infeasible root closes the tree") {
  const RopfProblem p{load("case14.m"), MaxKShunts{4}};
  RelaxationPoint root;
  root.status = RelaxStatus::Infeasible;
  SdpBoundOracle o;
  const BnbResult r = run_bnb(p, root, o);
  CHECK(r.nodes == 0);
  CHECK(std::isinf(r.lb));
  CHECK(r.lb > 0);
}

TEST_CASE("summary JSON") {
  BnbResult r;
  r.ub = 10.0;
  r.lb = 9.0;
  const std::string j = bnb_summary_json(r);
  CHECK(j.find("\"ub\":10.0") != std::string::npos);
  CHECK(j.find("\"lb_root\":\"-inf\"") != std::string::npos);
}
