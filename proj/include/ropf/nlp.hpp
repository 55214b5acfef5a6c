// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ropf::nlp {

/// coef · Π z_v over the (up to three) listed variables; -1 marks an unused
/// slot. A variable may be listed more than once.
struct Mono {
  double coef = 0.0;
  std::array<int, 3> v{-1, -1, -1};
};

/// Sparse polynomial of degree ≤ 3.
struct Poly {
  std::vector<Mono> terms;

  void add(double coef, int a = -1, int b = -1, int c = -1);
  double eval(std::span<const double> z) const;
  /// Calls out(var, w·∂p/∂z_var) for every term contribution.
  template <class F>
  void gradient(std::span<const double> z, double w, F&& out) const;
  /// Calls out(i, j, w·∂²p/∂z_i∂z_j) for every ordered pair contribution.
  template <class F>
  void hessian(std::span<const double> z, double w, F&& out) const;
};

/// min f(z)  s.t.  g(z) = 0,  h(z) ≤ 0,  lb ≤ z ≤ ub.
struct Problem {
  int n = 0;
  Poly objective;
  std::vector<Poly> eq;
  std::vector<Poly> ineq;
  std::vector<double> lb, ub;  // ±infinity allowed; lb == ub fixes the variable
};

struct Options {
  double feas_tol = 1e-8;
  double grad_tol = 1e-6;
  double comp_tol = 1e-6;
  double cost_tol = 1e-6;
  int max_iter = 150;
  std::ostream* log = nullptr;
};

enum class Status { Converged, MaxIter, Failed };
std::string status_name(Status s);

struct Result {
  Status status = Status::Failed;
  std::vector<double> z;
  double objective = 0.0;
  /// max(|g|∞, max h⁺, bound violation) in absolute terms.
  double violation = 0.0;
  int iterations = 0;
};

/// Primal-dual interior-point method with a sparse LU solve of the reduced
/// KKT system per iteration.
Result solve(const Problem& prob, std::vector<double> z0, const Options& opts = {});

template <class F>
void Poly::gradient(std::span<const double> z, double w, F&& out) const {
  for (const Mono& m : terms) {
    for (int i = 0; i < 3; ++i) {
      if (m.v[i] < 0) continue;
      double r = w * m.coef;
      for (int k = 0; k < 3; ++k) {
        if (k != i && m.v[k] >= 0) r *= z[m.v[k]];
      }
      out(m.v[i], r);
    }
  }
}

template <class F>
void Poly::hessian(std::span<const double> z, double w, F&& out) const {
  for (const Mono& m : terms) {
    for (int i = 0; i < 3; ++i) {
      if (m.v[i] < 0) continue;
      for (int j = 0; j < 3; ++j) {
        if (j == i || m.v[j] < 0) continue;
        double r = w * m.coef;
        for (int k = 0; k < 3; ++k) {
          if (k != i && k != j && m.v[k] >= 0) r *= z[m.v[k]];
        }
        out(m.v[i], m.v[j], r);
      }
    }
  }
}

}  // namespace ropf::nlp
