// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ropf::conic {

/// Variable layout: the svec of every PSD block in order, then `nonneg`
/// nonnegative scalars, then `free` unrestricted scalars.
struct Cones {
  std::vector<int> psd;
  int nonneg = 0;
  int free = 0;
};

struct Triplet {
  int row = 0;
  int col = 0;
  double val = 0.0;
};

/// min cᵀx  s.t.  A x = b,  x ∈ K.
///
/// PSD blocks are stored as svec: the lower triangle in column-major order
/// with off-diagonal entries scaled by √2, so that ⟨A, X⟩ = svec(A)·svec(X).
struct ConicProgram {
  Cones cones;
  int num_rows = 0;
  std::vector<Triplet> a;  // duplicates are summed
  std::vector<double> b;
  std::vector<double> c;

  int num_vars() const;
  int psd_offset(int block) const;
  int nonneg_offset() const;
  int free_offset() const;

  /// Adds coef·X_ij of PSD block `block` to row `row` (row < 0: objective).
  /// For i ≠ j the entry is X_ij = X_ji counted once.
  void add_psd(int row, int block, int i, int j, double coef);
  /// Adds coef·x_col to row `row` (row < 0: objective).
  void add_scalar(int row, int col, double coef);
  int add_row(double rhs);

  /// Throws ErrorCode::InvalidArgument on inconsistent dimensions.
  void validate() const;
};

int svec_size(int n);
/// Position of (i, j), i ≥ j, inside the svec of an n×n block.
int svec_index(int n, int i, int j);
std::vector<double> svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const double* v, int n);

enum class Status { Optimal, PrimalInfeasible, DualInfeasible, MaxIter, NumericalFailure };
std::string status_name(Status s);

struct Residuals {
  /// ‖D(Ax − b)‖∞ / (1 + ‖Db‖∞) with D = diag(1/‖a_r‖∞), each row
  /// measured relative to its own coefficients.
  double primal = 0.0;
  double dual = 0.0;    // ‖Aᵀy + z − c‖∞ / (1 + ‖c‖∞)
  double gap = 0.0;     // |cᵀx − bᵀy| / (1 + |cᵀx|)
};

struct ConicSolution {
  Status status = Status::NumericalFailure;
  std::vector<double> x, y, z;
  double pobj = 0.0;
  double dobj = 0.0;
  Residuals res;
  int iterations = 0;
};

struct SolveOptions {
  double tol = 1e-7;
  int max_iter = 200;
  std::ostream* log = nullptr;
  // Ray test tolerance once tau has collapsed relative to kappa.
  double infeas_tol = 1e-6;
};

/// Homogeneous self-dual interior-point method with Nesterov–Todd scaling
/// and Mehrotra predictor-corrector steps. On PrimalInfeasible, (y, z) is a
/// Farkas ray normalised to bᵀy = 1; on DualInfeasible, x is a ray with
/// cᵀx = −1.
ConicSolution solve(const ConicProgram& prog, const SolveOptions& opts = {});

struct CertificateReport {
  Residuals res;
  double x_cone = 0.0;  // most negative eigenvalue / entry of x (≥ 0 when inside)
  double z_cone = 0.0;  // same for z; free components of z must be 0
  /// PrimalInfeasible: ‖Aᵀy + z‖∞ / bᵀy; DualInfeasible: ‖Ax‖∞ / (−cᵀx).
  double ray_residual = 0.0;
  double ray_objective = 0.0;  // bᵀy or −cᵀx
  bool valid = false;          // the certificate matching sol.status holds at `tol`
};

/// Recomputes residuals and cone membership from the raw program data.
CertificateReport check_certificate(const ConicProgram& prog, const ConicSolution& sol, double tol = 1e-7);

}  // namespace ropf::conic
