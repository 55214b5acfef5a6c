// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ropf/network.hpp"

namespace ropf {

/// No optional constraint. Used to build the initial shunt state.
struct Unconstrained {};

/// At most `k` shunts active.
struct MaxKShunts {
  int k = 4;
};

/// At most `k` shunts switched with respect to `u0` (shunt bus index -> 0/1).
struct MaxKMoves {
  int k = 4;
  std::map<int, int> u0;
};

enum class Direction { Up, Down, Both };

/// Active generation follows a uniform move of the plan `p0` (one entry per
/// generator, p.u.).
struct GenMoves {
  std::vector<double> p0;
  Direction direction = Direction::Both;
};

using Variant = std::variant<Unconstrained, MaxKShunts, MaxKMoves, GenMoves>;

std::string variant_name(const Variant& v);

struct RopfProblem {
  Network net;
  Variant variant = MaxKShunts{};

  /// Throws ErrorCode::InvalidArgument when the variant data does not match
  /// the network.
  void validate() const;
};

/// A point of the mixed-integer problem. Voltages are indexed by internal
/// bus index, generation by generator index, `u` by shunt bus index.
struct Candidate {
  std::vector<Complex> v;
  std::vector<Complex> s;
  std::map<int, double> u;
  std::optional<double> lambda_plus;
  std::optional<double> lambda_minus;
  std::optional<int> delta_plus;
  std::optional<int> delta_minus;
  double objective = 0.0;
};

/// S_orig = origin_power[0]·|v_o|² + origin_power[1]·v_o·conj(v_d)
/// S_dest = dest_power[0]·conj(v_o)·v_d + dest_power[1]·|v_d|²
/// i_orig = origin_current[0]·v_o + origin_current[1]·v_d
/// i_dest = dest_current[0]·v_o + dest_current[1]·v_d
struct FlowCoeffs {
  Complex origin_power[2];
  Complex dest_power[2];
  Complex origin_current[2];
  Complex dest_current[2];

  Complex s_orig(Complex vo, Complex vd) const;
  Complex s_dest(Complex vo, Complex vd) const;
  Complex i_orig(Complex vo, Complex vd) const;
  Complex i_dest(Complex vo, Complex vd) const;
};

FlowCoeffs branch_flow_coeffs(const Branch& br);

struct FeasibilityReport {
  double power_balance = 0.0;  // max |residual| over real and reactive parts
  double p_bounds = 0.0;
  double q_bounds = 0.0;
  double v_bounds = 0.0;   // squared magnitude units
  double current = 0.0;    // squared magnitude units
  double variant = 0.0;
  double integrality = 0.0;
  double objective = 0.0;
  bool feasible = false;

  double max_violation() const;
};

struct EvalOptions {
  double tol = 1e-6;
  /// Accept fractional u (the continuous relaxation).
  bool relaxed = false;
};

FeasibilityReport evaluate_candidate(const RopfProblem& p, const Candidate& c, EvalOptions opts = {});

/// Objective of `c`: Σ c_g·Re(S_g) + k_g.
double candidate_objective(const Network& net, const Candidate& c);

/// Power-balance residual S_n − S^l_n − (g_n − j b_n)|v_n|² u_n − Σ S_orig − Σ S_dest.
std::vector<Complex> balance_residuals(const Network& net, const Candidate& c);

/// Active power of a generator under a uniform generation move.
double genmoves_active_power(const Generator& g, double p0, double lambda_minus, double lambda_plus,
                             int delta_minus, int delta_plus);

/// (ub − lb)/ub; empty when ub is not finite or zero.
std::optional<double> relative_gap(double ub, double lb);

inline constexpr double kSolvedGap = 1e-4;
bool is_solved(std::optional<double> gap);

}  // namespace ropf
