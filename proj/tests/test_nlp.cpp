// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "ropf/nlp.hpp"

using namespace ropf::nlp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Problem unbounded_box(int n) {
  Problem p;
  p.n = n;
  p.lb.assign(n, -kInf);
  p.ub.assign(n, kInf);
  return p;
}

}  // namespace

TEST_CASE("polynomial derivatives match finite differences") {
  Poly f;
  f.add(2.0, 0, 0, 1);  // 2 x0² x1
  f.add(-1.5, 1, 2);    // -1.5 x1 x2
  f.add(0.5, 2, 2, 2);  // 0.5 x2³
  f.add(3.0, 0);
  f.add(4.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> z{d(rng), d(rng), d(rng)};
    std::vector<double> g(3, 0.0);
    f.gradient(z, 1.0, [&](int i, double v) { g[i] += v; });
    std::map<std::pair<int, int>, double> h;
    f.hessian(z, 1.0, [&](int i, int j, double v) { h[{i, j}] += v; });
    const double e = 1e-6;
    for (int i = 0; i < 3; ++i) {
      auto zp = z, zm = z;
      zp[i] += e;
      zm[i] -= e;
      CHECK(g[i] == doctest::Approx((f.eval(zp) - f.eval(zm)) / (2 * e)).epsilon(1e-6));
      for (int j = 0; j < 3; ++j) {
        std::vector<double> gp(3, 0.0), gm(3, 0.0);
        f.gradient(zp, 1.0, [&](int k, double v) { gp[k] += v; });
        f.gradient(zm, 1.0, [&](int k, double v) { gm[k] += v; });
        CHECK(h[{i, j}] == doctest::Approx((gp[j] - gm[j]) / (2 * e)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("unconstrained quadratic") {
  Problem p = unbounded_box(2);
  p.objective.add(1.0, 0, 0);
  p.objective.add(-2.0, 0);
  p.objective.add(1.0, 1, 1);
  p.objective.add(-4.0, 1);
  const Result r = solve(p, {0.0, 0.0});
  REQUIRE(r.status == Status::Converged);
  CHECK(r.z[0] == doctest::Approx(1.0));
  CHECK(r.z[1] == doctest::Approx(2.0));
}

TEST_CASE("equality on the unit circle") {
  Problem p = unbounded_box(2);
  p.objective.add(1.0, 0);
  p.objective.add(1.0, 1);
  Poly c;
  c.add(1.0, 0, 0);
  c.add(1.0, 1, 1);
  c.add(-1.0);
  p.eq.push_back(c);
  const Result r = solve(p, {-0.5, -0.2});
  REQUIRE(r.status == Status::Converged);
  CHECK(r.objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-6));
  CHECK(r.violation <= 1e-8);
}

TEST_CASE("active inequality and bounds") {
  Problem p = unbounded_box(2);
  p.objective.add(-1.0, 0);
  p.objective.add(1.0, 1);
  Poly h;
  h.add(1.0, 0, 0);
  h.add(-4.0);
  p.ineq.push_back(h);
  p.lb[1] = 3.0;
  const Result r = solve(p, {0.0, 5.0});
  REQUIRE(r.status == Status::Converged);
  CHECK(r.z[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.z[1] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("fixed variables stay fixed") {
  Problem p = unbounded_box(2);
  p.objective.add(1.0, 0, 0);
  p.objective.add(1.0, 0, 1);
  p.lb[1] = p.ub[1] = 2.0;
  const Result r = solve(p, {1.0, 2.0});
  REQUIRE(r.status == Status::Converged);
  CHECK(r.z[1] == doctest::Approx(2.0));
  CHECK(r.z[0] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("infeasible constraints are not reported as converged") {
  Problem p = unbounded_box(1);
  p.objective.add(1.0, 0);
  Poly c;
  c.add(1.0, 0, 0);
  c.add(1.0);
  p.eq.push_back(c);
  Options o;
  o.max_iter = 60;
  const Result r = solve(p, {0.5}, o);
  CHECK(r.status != Status::Converged);
  CHECK(r.violation > 0.5);
}
