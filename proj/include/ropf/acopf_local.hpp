// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "ropf/network_model.hpp"
#include "ropf/nlp.hpp"
#include "ropf/sdp_relaxation.hpp"

namespace ropf {

enum class NlpStatus { LocalOptimal, Infeasible, IterationLimit };
std::string nlp_status_name(NlpStatus s);

struct NlpResult {
  Candidate candidate;
  NlpStatus status = NlpStatus::Infeasible;
  double violation = kInf;
  double objective = kInf;

  /// A feasible point usable as an upper bound (LocalOptimal or a feasible
  /// IterationLimit point).
  bool feasible() const { return status != NlpStatus::Infeasible; }
  double upper_bound() const { return feasible() ? objective : kInf; }
};

struct LocalOptions {
  nlp::Options nlp;
  double feas_tol = 1e-6;
  /// Penalty weights, multiplied by rho_scale·max(1, |objective|).
  std::vector<double> rho_schedule{1.0, 10.0, 100.0, 1e3, 1e4};
  double rho_scale = 1e-3;
  double binary_tol = 1e-4;
  int dca_iters = 30;
};

/// Local solve with every shunt fixed. Tries `start` (if given) and the flat
/// start and keeps the better feasible point; a feasible `start` is never
/// worsened. GENmoves with direction Both solves both directions.
NlpResult solve_fixed(const RopfProblem& p, const Fixings& fix, const Candidate* start = nullptr,
                      const LocalOptions& opts = {});

/// Local solve with the free shunts relaxed to [0, 1].
NlpResult solve_continuous(const RopfProblem& p, const Fixings& fix = {}, const LocalOptions& opts = {});

/// Penalised continuous solves of f + ρ·Σ u(1−u) along the ρ schedule, each
/// by convex-concave iterations started from `start`.
NlpResult solve_mpec(const RopfProblem& p, const Candidate& start, const Fixings& fix = {},
                     const LocalOptions& opts = {});

/// Continuous relaxation, MPEC penalty, then rounding and a fixed solve. Only
/// the fixed solve runs when `fix` already assigns every shunt.
NlpResult three_step(const RopfProblem& p, const Fixings& fix = {}, const LocalOptions& opts = {});

/// Rounds free u at 0.5 (ties up) and repairs the variant's cardinality by
/// keeping the largest moves. Entries of `fix` are kept as they are.
Fixings round_with_repair(const RopfProblem& p, const std::map<int, double>& u, const Fixings& fix = {});

/// u ≥ 0.5 -> 1, keeping only the k largest when more than k qualify.
Fixings round_k_largest(const std::map<int, double>& u, int k);

/// Fixes per round_k_largest on the relaxation point, then solve_fixed.
NlpResult rounding_baseline(const RopfProblem& p, const RelaxationPoint& rp, int k, const LocalOptions& opts = {});

/// Rounded continuous solution of the problem without optional constraint.
/// Throws ErrorCode::Infeasible when that solve fails.
std::map<int, int> initial_shunt_state(const Network& net, const LocalOptions& opts = {});

}  // namespace ropf
