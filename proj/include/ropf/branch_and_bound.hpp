// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ropf/acopf_local.hpp"
#include "ropf/sdp_relaxation.hpp"

namespace ropf {

/// Initial fixing rule: u* below `lower` -> 0, u* above `upper` -> 1. The
/// `*_strict` flags select < / > instead of ≤ / ≥.
struct Thresholds {
  double lower = -kInf;
  bool lower_strict = false;
  double upper = kInf;
  bool upper_strict = false;

  /// No initial fixing at all.
  static Thresholds none() { return {}; }
  /// Per-variant defaults: MAXkshunts u* ≤ 0.25 -> 0; MAXkmoves u* ≥ 0.75
  /// -> 1; GENmoves u* > 0.9 -> 1 and u* < 1e-4 -> 0.
  static Thresholds for_variant(const Variant& v);
};

Fixings initial_fixing(const RelaxationPoint& rp, const Thresholds& th);

/// Fixes every free shunt to 0 once MAXkshunts' budget is used up by the
/// shunts fixed to 1. Other variants are returned unchanged.
Fixings apply_cardinality_implication(const RopfProblem& p, Fixings fix);

struct BnbNode {
  double father_lb = -kInf;
  Fixings fix;
  int depth = 0;
  long id = 0;
  long parent = -1;
};

/// Deepest first, then more shunts fixed to 1, then the newest node.
/// Returns the index into `open`.
size_t select_node(const std::vector<BnbNode>& open);

/// argmax of u* over `free` (ties to the lowest bus index).
int branch_variable(const RelaxationPoint& rp, const std::vector<int>& free);

enum class NodeAction { Pruned, Infeasible, Binary, Branched, Leaf };
std::string node_action_name(NodeAction a);

struct NodeRecord {
  long id = 0;
  long parent = -1;
  int depth = 0;
  Fixings fix;
  RelaxStatus status = RelaxStatus::NumericalFailure;
  double lb = -kInf;  // father's bound when the SDP failed
  double father_lb = -kInf;
  NodeAction action = NodeAction::Leaf;
  int branch_bus = -1;  // internal index, Branched only
  double branch_value = 0.0;
  std::vector<long> children;  // ids spawned by this node
  double ub = kInf;     // incumbent after the node
};

struct BnbConfig {
  std::optional<Thresholds> thresholds;  // empty: Thresholds::for_variant
  double time_limit_s = 3600.0;
  double gap_tol = kSolvedGap;
  double binary_tol = 1e-4;
  LocalOptions local;
  std::ostream* log = nullptr;  // one line per node
};

struct BnbResult {
  double ub = kInf;
  std::optional<Candidate> best;
  double lb_root = -kInf;
  /// Smallest bound over closed leaves and open nodes, never below lb_root.
  double lb = -kInf;
  long nodes = 0;
  double time_s = 0.0;
  bool timed_out = false;
  bool solved = false;
  int free_after_fixing = 0;
  std::vector<NodeRecord> trace;
};

/// Branch-and-bound over the shunt binaries, DFS with SDP node bounds and
/// local-solve incumbents. `root` is the relaxation without fixings;
/// `first_phase`, when given, is a heuristic point computed beforehand and
/// only takes part in the final upper bound.
BnbResult run_bnb(const RopfProblem& p, const RelaxationPoint& root, BoundOracle& oracle, const BnbConfig& cfg = {},
                  const NlpResult* first_phase = nullptr);

/// Machine-readable summary of the result fields (no trace).
std::string bnb_summary_json(const BnbResult& r);

}  // namespace ropf
