// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ropf/error.hpp"
#include "ropf/matpower.hpp"
#include "ropf/quadratic.hpp"
#include "ropf/sdp_relaxation.hpp"

using namespace ropf;

namespace {

const Network& case14() {
  static const Network net = load_network(oracle::data_path("case14.m"), CostPolicy::DropQuadratic);
  return net;
}

// Smallest upper and largest lower envelope value at (u, V).
std::pair<double, double> envelope(double vmin2, double vmax2, double u, double v) {
  double lo = -kInf, hi = kInf;
  for (const LinearIneq& q : mccormick(vmin2, vmax2)) {
    // Each plane bounds ξ from one side: a_xi = ±1.
    const double bound = (q.rhs - q.a_u * u - q.a_v * v) / q.a_xi;
    if (q.a_xi > 0) {
      hi = std::min(hi, bound);
    } else {
      lo = std::max(lo, bound);
    }
  }
  return {lo, hi};
}

void set_lifted(const SdpInstance& inst, std::vector<double>& x, int p, int q, double v) {
  const EntryRef e = inst.entry(p, q);
  const int n = inst.prog.cones.psd[e.block];
  const int i = std::max(e.i, e.j), j = std::min(e.i, e.j);
  x[inst.prog.psd_offset(e.block) + conic::svec_index(n, i, j)] = i == j ? v : v * std::sqrt(2.0);
}

}  // namespace

TEST_CASE("McCormick planes at the binary endpoints") {
  const double vmin2 = 0.81, vmax2 = 1.21;
  for (double v : {0.81, 1.0, 1.21}) {
    auto [lo1, hi1] = envelope(vmin2, vmax2, 1.0, v);
    CHECK(lo1 == doctest::Approx(v));
    CHECK(hi1 == doctest::Approx(v));
    auto [lo0, hi0] = envelope(vmin2, vmax2, 0.0, v);
    CHECK(lo0 == doctest::Approx(0.0));
    CHECK(hi0 == doctest::Approx(0.0));
  }
}

TEST_CASE("McCormick envelope at u = 0.5 against corner interpolation") {
  const double vmin2 = 0.81, vmax2 = 1.21, u = 0.5;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dv(vmin2, vmax2);
  for (int t = 0; t < 200; ++t) {
    const double v = dv(rng);
    auto [lo, hi] = envelope(vmin2, vmax2, u, v);
    // Convex and concave envelopes of u·V over the box, written from the corners.
    const double lo_ref = std::max(vmin2 * u + 0.0 * v, vmax2 * u + 1.0 * v - vmax2);
    const double hi_ref = std::min(vmax2 * u, vmin2 * u + v - vmin2);
    CHECK(lo == doctest::Approx(lo_ref));
    CHECK(hi == doctest::Approx(hi_ref));
    CHECK(lo <= u * v + 1e-12);
    CHECK(hi >= u * v - 1e-12);
  }
  CHECK_THROWS_AS(mccormick(1.2, 1.0), Error);
}

TEST_CASE("case14 relaxation: one u, one xi, bound within 1e-4 of 5371.50") {
  const RopfProblem p{case14(), MaxKShunts{4}};
  const SdpOptions o;
  const CliqueDecomposition deco = lifted_decomposition(p.net, o);
  const SdpInstance inst = build_sdp(p, deco, {}, o);
  CHECK(inst.u_col.size() == 1);
  CHECK(inst.xi_col.size() == 1);
  CHECK(inst.mccormick_rows == 4);
  const RelaxationPoint rp = solve_relaxation(p, deco, {}, o);
  REQUIRE(rp.status == RelaxStatus::Optimal);
  CHECK(rp.lower_bound <= 5371.50 + 0.005);
  CHECK(rp.lower_bound >= 5371.50 * (1.0 - 1e-4));
  REQUIRE(rp.u.size() == 1);
  CHECK(rp.u.begin()->second >= 0.0);
  CHECK(rp.u.begin()->second <= 1.0);
  CHECK(rp.vdiag.size() == 14);
}

TEST_CASE("fixing every shunt to 0 removes the McCormick rows") {
  const Network net = load_network(oracle::data_path("case30.m"), CostPolicy::DropQuadratic);
  const RopfProblem p{net, MaxKShunts{4}};
  const SdpOptions o;
  Fixings f;
  for (int s : net.shunt_buses()) f.u[s] = 0;
  const SdpInstance inst = build_sdp(p, lifted_decomposition(net, o), f, o);
  CHECK(inst.mccormick_rows == 0);
  CHECK(inst.xi_col.empty());
  CHECK(inst.u_col.empty());
  CHECK_FALSE(inst.trivially_infeasible);
  Fixings bad;
  bad.u[0] = 1;
  CHECK_THROWS_AS(build_sdp(p, lifted_decomposition(net, o), bad, o), Error);
}

TEST_CASE("MAXkmoves with u0 = 0 builds the MAXkshunts program") {
  const Network net = load_network(oracle::data_path("case30.m"), CostPolicy::DropQuadratic);
  std::map<int, int> u0;
  for (int s : net.shunt_buses()) u0[s] = 0;
  const SdpOptions o;
  const CliqueDecomposition deco = lifted_decomposition(net, o);
  const SdpInstance a = build_sdp(RopfProblem{net, MaxKShunts{1}}, deco, {}, o);
  const SdpInstance b = build_sdp(RopfProblem{net, MaxKMoves{1, u0}}, deco, {}, o);
  CHECK(a.prog.num_rows == b.prog.num_rows);
  CHECK(a.prog.b == b.prog.b);
  CHECK(a.prog.c == b.prog.c);
  REQUIRE(a.prog.a.size() == b.prog.a.size());
  for (size_t i = 0; i < a.prog.a.size(); ++i) {
    CHECK(a.prog.a[i].row == b.prog.a[i].row);
    CHECK(a.prog.a[i].col == b.prog.a[i].col);
    CHECK(a.prog.a[i].val == b.prog.a[i].val);
  }
}

TEST_CASE("relaxation point extraction") {
  const RopfProblem p{case14(), MaxKShunts{4}};
  const SdpOptions o;
  const SdpInstance inst = build_sdp(p, lifted_decomposition(p.net, o), {}, o);
  const int s = p.net.shunt_buses()[0];
  conic::ConicSolution sol;
  sol.status = conic::Status::Optimal;
  sol.x.assign(inst.prog.num_vars(), 0.0);
  for (int i = 0; i < p.net.num_buses(); ++i) set_lifted(inst, sol.x, re_coord(i), re_coord(i), 1.0);
  sol.x[inst.xi_col.at(s)] = 0.9;
  sol.dobj = 100.0;
  RelaxationPoint rp = extract_relaxation_point(inst, sol);
  REQUIRE(rp.status == RelaxStatus::Optimal);
  CHECK(rp.u.at(s) == doctest::Approx(0.9));
  CHECK(rp.lower_bound == doctest::Approx(100.0 + inst.obj_const));
  sol.x[inst.xi_col.at(s)] = 1.05;
  CHECK(extract_relaxation_point(inst, sol).u.at(s) == 1.0);

  sol.status = conic::Status::PrimalInfeasible;
  CHECK(extract_relaxation_point(inst, sol).status == RelaxStatus::Infeasible);

  // Near-optimal iterates count only below the acceptance tolerance.
  sol.status = conic::Status::MaxIter;
  sol.res.primal = 1e-7;
  CHECK(extract_relaxation_point(inst, sol, 1e-6).status == RelaxStatus::Optimal);
  CHECK(extract_relaxation_point(inst, sol, 1e-8).status == RelaxStatus::NumericalFailure);
  sol.dobj = std::nan("");
  CHECK(extract_relaxation_point(inst, sol, 1e-6).status == RelaxStatus::NumericalFailure);
}

TEST_CASE("dense and decomposed relaxations agree on case14") {
  const RopfProblem p{case14(), MaxKShunts{4}};
  SdpOptions clique, dense;
  clique.ipm.tol = dense.ipm.tol = 1e-9;
  dense.dense = true;
  const RelaxationPoint a = solve_relaxation(p, lifted_decomposition(p.net, clique), {}, clique);
  const RelaxationPoint b = solve_relaxation(p, lifted_decomposition(p.net, dense), {}, dense);
  REQUIRE(a.status == RelaxStatus::Optimal);
  REQUIRE(b.status == RelaxStatus::Optimal);
  CHECK(std::abs(a.lower_bound - b.lower_bound) <= 1e-6 * std::abs(b.lower_bound));
  CHECK(lifted_decomposition(p.net, dense).cliques.size() == 1);
}

TEST_CASE("genmoves relaxation needs a direction") {
  const Network& net = case14();
  std::vector<double> p0;
  for (const Generator& g : net.generators) p0.push_back(0.5 * (g.pmin + g.pmax));
  const SdpOptions o;
  CHECK_THROWS_AS(build_sdp(RopfProblem{net, GenMoves{p0, Direction::Both}}, lifted_decomposition(net, o), {}, o),
                  Error);
  CHECK_NOTHROW(build_sdp(RopfProblem{net, GenMoves{p0, Direction::Up}}, lifted_decomposition(net, o), {}, o));
}

TEST_CASE("oracle bounds are monotone under fixing") {
  const Network net = load_network(oracle::data_path("case30.m"), CostPolicy::DropQuadratic);
  const RopfProblem p{net, MaxKShunts{4}};
  SdpBoundOracle oracle;
  const RelaxationPoint root = oracle.bound(p, {});
  REQUIRE(root.status == RelaxStatus::Optimal);
  for (int v : {0, 1}) {
    Fixings f;
    f.u[net.shunt_buses()[0]] = v;
    const RelaxationPoint child = oracle.bound(p, f);
    if (child.status == RelaxStatus::Optimal) CHECK(child.lower_bound >= root.lower_bound - 1e-6 * root.lower_bound);
    CHECK(child.u.at(net.shunt_buses()[0]) == v);
  }
}

TEST_CASE("SDPA export") {
  const RopfProblem p{case14(), MaxKShunts{4}};
  const SdpOptions o;
  const SdpInstance inst = build_sdp(p, lifted_decomposition(p.net, o), {}, o);
  std::ostringstream os;
  write_sdpa(inst.prog, os);
  std::istringstream in(os.str());
  std::string comment;
  std::getline(in, comment);
  int m = 0, nblocks = 0;
  in >> m >> nblocks;
  CHECK(m == inst.prog.num_rows);
  CHECK(nblocks >= static_cast<int>(inst.prog.cones.psd.size()));
}
