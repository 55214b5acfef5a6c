// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "ropf/network.hpp"

namespace ropf {

/// Real voltage coordinates: x[2i] = Re(v_i), x[2i+1] = Im(v_i).
inline int re_coord(int bus) { return 2 * bus; }
inline int im_coord(int bus) { return 2 * bus + 1; }

struct QuadTerm {
  int p = 0;  // p <= q
  int q = 0;
  double coef = 0.0;
};

/// Σ coef·x_p·x_q over p <= q. In lifted form the same coefficients apply to
/// the entries W_pq of W = x·xᵀ.
class QuadForm {
 public:
  std::vector<QuadTerm> terms;

  void add(int p, int q, double coef);
  /// Adds Re(alpha·v_a·conj(v_b)) to `re` and Im(alpha·v_a·conj(v_b)) to `im`.
  static void add_product(QuadForm& re, QuadForm& im, Complex alpha, int a, int b);
  /// Merges duplicate entries and drops exact zeros.
  void compress();

  double eval(std::span<const double> x) const;
  /// g += w·∇(form)(x)
  void add_gradient(std::span<const double> x, double w, std::span<double> g) const;
};

/// Quadratic forms of the network equations in real voltage coordinates.
struct NetworkForms {
  std::vector<QuadForm> flow_p;     // per bus: Re Σ (S_orig + S_dest) of incident branches
  std::vector<QuadForm> flow_q;     // per bus: Im of the same sum
  std::vector<QuadForm> vmag2;      // per bus: |v_n|²
  std::vector<QuadForm> current_o;  // per branch: |i_orig|²
  std::vector<QuadForm> current_d;  // per branch: |i_dest|²

  static NetworkForms build(const Network& net);
};

}  // namespace ropf
