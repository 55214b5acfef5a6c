// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "ropf/chordal.hpp"
#include "ropf/conic_ipm.hpp"
#include "ropf/network_model.hpp"

namespace ropf {

/// Partial assignment of shunt binaries (internal bus index -> 0/1).
struct Fixings {
  std::map<int, int> u;

  int count_ones() const;
};

/// a_xi·ξ + a_u·u + a_v·V ≤ rhs
struct LinearIneq {
  double a_xi = 0.0;
  double a_u = 0.0;
  double a_v = 0.0;
  double rhs = 0.0;

  double slack(double xi, double u, double v) const { return rhs - (a_xi * xi + a_u * u + a_v * v); }
};

/// Envelope of ξ = u·V over u ∈ [0,1], V ∈ [vmin², vmax²], in the order
/// ξ ≤ V + vmin²(u−1), ξ ≤ vmax²·u, ξ ≥ vmax²(u−1) + V, ξ ≥ vmin²·u.
std::array<LinearIneq, 4> mccormick(double vmin2, double vmax2);

struct SdpOptions {
  int k_max = 1;             // clique merging passes
  MergeParams merge;
  bool dense = false;        // single 2n×2n block instead of the clique decomposition
  bool keep_mccormick_when_fixed = false;
  conic::SolveOptions ipm{1e-8, 200, nullptr};
  /// A max-iter or numerical-failure solve whose residuals are all below
  /// this is still read as a bound.
  double accept_tol = 1e-6;
};

/// Lifted-matrix entry location: block and local indices inside it.
struct EntryRef {
  int block = -1;
  int i = 0;
  int j = 0;
};

/// The assembled conic program plus the bookkeeping needed to read a
/// relaxation point back.
struct SdpInstance {
  conic::ConicProgram prog;
  double obj_const = 0.0;
  CliqueDecomposition deco;
  std::map<int, int> u_col;   // free shunt -> column of u
  std::map<int, int> xi_col;  // free shunt -> column of ξ
  Fixings fixings;
  /// Set when constant propagation already proves infeasibility; `prog` is
  /// then empty and must not be solved.
  bool trivially_infeasible = false;
  int mccormick_rows = 0;

  EntryRef entry(int p, int q) const;
  double lifted(const std::vector<double>& x, int p, int q) const;

  /// Owner table: lifted entry (p, q), p ≤ q -> location in its lowest
  /// containing clique.
  std::map<std::pair<int, int>, EntryRef> owner;
};

/// Builds the decomposed relaxation. GENmoves requires direction Up or Down.
SdpInstance build_sdp(const RopfProblem& p, const CliqueDecomposition& deco, const Fixings& fix,
                      const SdpOptions& opts = {});

/// Decomposition of the lifted sparsity pattern used by build_sdp.
CliqueDecomposition lifted_decomposition(const Network& net, const SdpOptions& opts);

enum class RelaxStatus { Optimal, Infeasible, NumericalFailure };
std::string relax_status_name(RelaxStatus s);

struct RelaxationPoint {
  RelaxStatus status = RelaxStatus::NumericalFailure;
  double lower_bound = -kInf;
  std::map<int, double> u;  // every shunt: fixed value or ξ*/V*_ss clamped to [0,1]
  std::vector<double> vdiag;  // V*_nn per bus
  std::optional<double> lambda;
  int iterations = 0;
};

RelaxationPoint extract_relaxation_point(const SdpInstance& inst, const conic::ConicSolution& sol,
                                         double accept_tol = 0.0);

/// Solves build_sdp(p, deco, fix) with the embedded interior-point method.
RelaxationPoint solve_relaxation(const RopfProblem& p, const CliqueDecomposition& deco, const Fixings& fix,
                                 const SdpOptions& opts = {});

/// Node bound provider consumed by the branch-and-bound.
class BoundOracle {
 public:
  virtual ~BoundOracle() = default;
  virtual RelaxationPoint bound(const RopfProblem& p, const Fixings& fix) = 0;
};

/// Embedded SDP relaxation; the decomposition is computed once per oracle.
class SdpBoundOracle : public BoundOracle {
 public:
  explicit SdpBoundOracle(SdpOptions opts = {}) : opts_(std::move(opts)) {}
  RelaxationPoint bound(const RopfProblem& p, const Fixings& fix) override;

 private:
  SdpOptions opts_;
  std::mutex mu_;
  std::shared_ptr<const CliqueDecomposition> deco_;
  const Network* net_ = nullptr;
};

/// Writes the program in SDPA sparse format (the program's min form is
/// mapped onto SDPA's max form with F0 = −C, Fi = Ai, c = b).
void write_sdpa(const conic::ConicProgram& prog, std::ostream& os);

}  // namespace ropf
