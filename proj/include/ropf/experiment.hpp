// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ropf/branch_and_bound.hpp"
#include "ropf/matpower.hpp"

namespace ropf {

enum class VariantKind { MaxKShunts, MaxKMoves, GenMoves };
std::string variant_kind_name(VariantKind v);
/// Accepts "maxkshunts", "maxkmoves", "genmoves". Throws InvalidArgument.
VariantKind parse_variant_kind(const std::string& s);

enum class U0Source { Initial, Zero };

struct RunConfig {
  std::vector<std::string> cases;
  VariantKind variant = VariantKind::MaxKShunts;
  int k = 4;
  U0Source u0 = U0Source::Initial;
  std::uint64_t seed = 42;
  int scenarios = 5;  // GENmoves plans per instance
  std::optional<Thresholds> thresholds;
  double time_limit_s = 3600.0;
  double gap_tol = kSolvedGap;
  int k_max = 1;
  double ipm_tol = 1e-8;
  bool dense = false;
  /// Increase k until the three-step heuristic finds a feasible point.
  bool find_min_k = false;
  bool run_bnb = true;
  bool run_rounding = true;
  CostPolicy cost_policy = CostPolicy::DropQuadratic;
  std::ostream* log = nullptr;

  void validate() const;
};

struct ResultRow {
  std::string instance;
  int num_shunts = 0;
  std::string k_label;  // k, or "+" / "-" for GENmoves
  double ub = kInf;
  double lb = -kInf;
  std::optional<double> gap;
  bool bnb_run = false;
  int binvar = 0;
  long nodes = 0;
  double bnb_time_s = 0.0;
  double bnb_ub = kInf;
  std::optional<double> bnb_gap;
  bool rounding_run = false;
  double rounding_ub = kInf;
  std::optional<double> rounding_gap;
  double total_time_s = 0.0;
  std::string note;  // error text for failed rows
  std::optional<Candidate> candidate;  // backs `ub`
};

/// Plans P0 with Pmin ≤ P0 ≤ Pmax and Σ P0 ≥ 1.02·Σ Re(load). Uses
/// std::mt19937_64 seeded with `seed`; deterministic across platforms.
std::vector<std::vector<double>> generate_genmoves_scenarios(const Network& net, std::uint64_t seed, int count = 5);

/// Runs the whole pipeline on one problem. GENmoves with direction Both
/// runs each direction and keeps the better one.
ResultRow run_problem(const RopfProblem& p, const RunConfig& cfg, const std::string& instance);

/// One row per (instance, scenario). Failing rows carry a note and do not
/// stop the batch.
std::vector<ResultRow> run_experiment(const RunConfig& cfg);

/// "0.00%" when gap ≤ 1e-4, "-" when undefined, two decimals otherwise.
std::string format_gap(std::optional<double> gap);
/// "Inf" when not finite.
std::string format_value(double v);

std::string format_table(const std::vector<ResultRow>& rows);
/// Same columns as the table; wall times only when `with_times`.
std::string format_csv(const std::vector<ResultRow>& rows, bool with_times = false);
std::string rows_json(const std::vector<ResultRow>& rows);

}  // namespace ropf
