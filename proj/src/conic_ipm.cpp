// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/conic_ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "ropf/error.hpp"

namespace ropf::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInfD = std::numeric_limits<double>::infinity();

}  // namespace

int svec_size(int n) { return n * (n + 1) / 2; }

int svec_index(int n, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * n - j * (j - 1) / 2 + (i - j);
}

std::vector<double> svec(const MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<double> v(svec_size(n));
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) v[svec_index(n, i, j)] = i == j ? m(i, i) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

MatrixXd smat(const double* v, int n) {
  MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      const double x = v[svec_index(n, i, j)];
      m(i, j) = m(j, i) = i == j ? x : x / kSqrt2;
    }
  }
  return m;
}

std::string status_name(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::PrimalInfeasible: return "primal-infeasible";
    case Status::DualInfeasible: return "dual-infeasible";
    case Status::MaxIter: return "max-iter";
    case Status::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

int ConicProgram::num_vars() const { return free_offset() + cones.free; }

int ConicProgram::psd_offset(int block) const {
  int off = 0;
  for (int k = 0; k < block; ++k) off += svec_size(cones.psd[k]);
  return off;
}

int ConicProgram::nonneg_offset() const { return psd_offset(static_cast<int>(cones.psd.size())); }
int ConicProgram::free_offset() const { return nonneg_offset() + cones.nonneg; }

void ConicProgram::add_psd(int row, int block, int i, int j, double coef) {
  const int n = cones.psd.at(block);
  const int col = psd_offset(block) + svec_index(n, i, j);
  add_scalar(row, col, i == j ? coef : coef / kSqrt2);
}

void ConicProgram::add_scalar(int row, int col, double coef) {
  if (coef == 0.0) return;
  if (row < 0) {
    if (static_cast<int>(c.size()) <= col) c.resize(col + 1, 0.0);
    c[col] += coef;
  } else {
    a.push_back({row, col, coef});
  }
}

int ConicProgram::add_row(double rhs) {
  b.push_back(rhs);
  return num_rows++;
}

void ConicProgram::validate() const {
  for (int n : cones.psd) {
    if (n <= 0) throw Error(ErrorCode::InvalidArgument, "PSD block dimension must be positive");
  }
  if (cones.nonneg < 0 || cones.free < 0) throw Error(ErrorCode::InvalidArgument, "negative cone size");
  if (static_cast<int>(b.size()) != num_rows) throw Error(ErrorCode::InvalidArgument, "b has wrong length");
  if (static_cast<int>(c.size()) > num_vars()) throw Error(ErrorCode::InvalidArgument, "c longer than x");
  for (const Triplet& t : a) {
    if (t.row < 0 || t.row >= num_rows || t.col < 0 || t.col >= num_vars()) {
      throw Error(ErrorCode::InvalidArgument, "constraint entry out of range");
    }
    if (!std::isfinite(t.val)) throw Error(ErrorCode::InvalidArgument, "non-finite constraint entry");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite right-hand side");
  }
  for (double v : c) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite objective");
  }
}

namespace {

// Column-compressed copy of the raw data for residual evaluation.
struct RawOps {
  int m = 0, nv = 0;
  SpMat A;  // m × nv
  VectorXd b, c;

  VectorXd rownorm;  // 1 / ‖a_r‖∞ (1 for empty rows)

  explicit RawOps(const ConicProgram& p) : m(p.num_rows), nv(p.num_vars()), A(m, nv), b(m), c(nv) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(p.a.size());
    for (const Triplet& e : p.a) t.emplace_back(e.row, e.col, e.val);
    A.setFromTriplets(t.begin(), t.end());
    for (int i = 0; i < m; ++i) b[i] = p.b[i];
    rownorm = VectorXd::Zero(m);
    for (int k = 0; k < A.outerSize(); ++k) {
      for (SpMat::InnerIterator it(A, k); it; ++it) rownorm[it.row()] = std::max(rownorm[it.row()], std::abs(it.value()));
    }
    for (int i = 0; i < m; ++i) rownorm[i] = rownorm[i] > 0.0 ? 1.0 / rownorm[i] : 1.0;
    c.setZero();
    for (size_t i = 0; i < p.c.size(); ++i) c[i] = p.c[i];
  }

  static double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

  Residuals residuals(const VectorXd& x, const VectorXd& y, const VectorXd& z) const {
    Residuals r;
    const double pobj = c.dot(x), dobj = b.dot(y);
    r.primal = inf_norm(rownorm.cwiseProduct(A * x - b)) / (1.0 + inf_norm(rownorm.cwiseProduct(b)));
    r.dual = inf_norm(VectorXd(A.transpose() * y) + z - c) / (1.0 + inf_norm(c));
    r.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    return r;
  }
};

double min_cone_value(const ConicProgram& p, const VectorXd& v, bool zero_free) {
  double worst = kInfD;
  for (size_t k = 0; k < p.cones.psd.size(); ++k) {
    const int n = p.cones.psd[k];
    const MatrixXd m = smat(v.data() + p.psd_offset(static_cast<int>(k)), n);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  for (int i = 0; i < p.cones.nonneg; ++i) worst = std::min(worst, v[p.nonneg_offset() + i]);
  if (zero_free) {
    for (int i = 0; i < p.cones.free; ++i) worst = std::min(worst, -std::abs(v[p.free_offset() + i]));
  }
  return worst == kInfD ? 0.0 : worst;
}

struct Entry {
  int i = 0, j = 0;  // i >= j
  double a = 0.0;    // matrix-form coefficient: A_ij = A_ji = a
};

struct BlockRow {
  int row = 0;
  std::vector<Entry> e;
};

struct Block {
  int n = 0;
  std::vector<BlockRow> rows;
  MatrixXd C;
  std::vector<int> pos;  // Schur value index per row pair (a ≤ b)
};

struct LpColumn {
  std::vector<std::pair<int, double>> rows;
  std::vector<int> pos;
};

// Iterate or search direction in the internal (scaled, split) layout.
struct Pt {
  std::vector<MatrixXd> X, Z;
  std::vector<MatrixXd> Lx, Lz;  // X = Lx·Lxᵀ, Z = Lz·Lzᵀ (iterates only)
  VectorXd xl, zl, y;
  double tau = 1.0, kappa = 1.0;
};

struct Scaling {
  std::vector<MatrixXd> R, Rinv, G;
  std::vector<VectorXd> lam;
  VectorXd w, laml;
};

class Ipm {
 public:
  Ipm(const ConicProgram& p, const SolveOptions& o) : prog_(p), opt_(o), raw_(p) { setup(); }
  ConicSolution run();

 private:
  void setup();
  VectorXd apply_a(const std::vector<MatrixXd>& X, const VectorXd& xl) const;
  void apply_at(const VectorXd& y, std::vector<MatrixXd>& S, VectorXd& sl) const;
  bool compute_scaling(const Pt& p, Scaling& sc) const;
  bool factor_schur(const Scaling& sc);
  VectorXd msolve(const VectorXd& r) const;
  struct Rhs {
    VectorXd dp;                 // A Δx − b Δτ
    std::vector<MatrixXd> dd;    // Aᵀ Δy + Δz − c Δτ (PSD part)
    VectorXd ddl;                // same, scalar part
    double dg = 0.0;             // bᵀΔy − cᵀΔx − Δκ
    std::vector<MatrixXd> rc;    // λ∘(Δx̃ + Δz̃)
    VectorXd rcl;
    double rk = 0.0;             // κΔτ + τΔκ
  };
  Pt newton(const Pt& cur, const Scaling& sc, const Rhs& r, const VectorXd& q, const std::vector<MatrixXd>& x1,
            const VectorXd& x1l) const;
  Pt newton_refined(const Pt& cur, const Scaling& sc, const Rhs& r, const VectorXd& q,
                    const std::vector<MatrixXd>& x1, const VectorXd& x1l) const;
  double max_step(const Pt& cur, const Pt& d, const Scaling& sc) const;
  void scaled_dirs(const Pt& d, const Scaling& sc, std::vector<MatrixXd>& dx, VectorXd& dxl,
                   std::vector<MatrixXd>& dz, VectorXd& dzl) const;
  void unscale(const Pt& p, double div, VectorXd& x, VectorXd& y, VectorXd& z) const;
  double c_dot(const std::vector<MatrixXd>& X, const VectorXd& xl) const;

  const ConicProgram& prog_;
  SolveOptions opt_;
  RawOps raw_;

  int m_ = 0;
  int nl_ = 0;  // nonneg + 2·free
  std::vector<Block> blocks_;
  std::vector<LpColumn> lp_;
  SpMat alp_;  // m × nl_
  VectorXd clp_, b_;
  VectorXd rowscale_;
  double bscale_ = 1.0, cscale_ = 1.0;
  int nu_ = 0;  // barrier parameter

  SpMat schur_;
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  bool analyzed_ = false;
};

void Ipm::setup() {
  const ConicProgram& p = prog_;
  m_ = p.num_rows;
  const int nfree = p.cones.free;
  nl_ = p.cones.nonneg + 2 * nfree;
  const int nb = static_cast<int>(p.cones.psd.size());
  nu_ = nl_;
  for (int n : p.cones.psd) nu_ += n;

  // Row equilibration on the raw svec coefficients.
  VectorXd rmax = VectorXd::Zero(m_);
  for (const Triplet& t : p.a) rmax[t.row] = std::max(rmax[t.row], std::abs(t.val));
  rowscale_.resize(m_);
  for (int r = 0; r < m_; ++r) rowscale_[r] = rmax[r] > 0.0 ? 1.0 / rmax[r] : 1.0;
  b_.resize(m_);
  for (int r = 0; r < m_; ++r) b_[r] = p.b[r] * rowscale_[r];
  bscale_ = std::max(1.0, RawOps::inf_norm(b_));
  b_ /= bscale_;
  cscale_ = std::max(1.0, RawOps::inf_norm(raw_.c));

  // Map each column to its cone position.
  std::vector<int> col_block(p.num_vars(), -1), col_i(p.num_vars()), col_j(p.num_vars());
  for (int k = 0; k < nb; ++k) {
    const int n = p.cones.psd[k], off = p.psd_offset(k);
    for (int j = 0; j < n; ++j) {
      for (int i = j; i < n; ++i) {
        const int col = off + svec_index(n, i, j);
        col_block[col] = k;
        col_i[col] = i;
        col_j[col] = j;
      }
    }
  }
  const int nn_off = p.nonneg_offset(), fr_off = p.free_offset();

  blocks_.resize(nb);
  std::vector<std::vector<std::pair<int, Entry>>> per_block(nb);
  std::vector<Eigen::Triplet<double>> lt;
  for (const Triplet& t : p.a) {
    const double v = t.val * rowscale_[t.row];
    if (t.col < nn_off) {
      const int i = col_i[t.col], j = col_j[t.col];
      per_block[col_block[t.col]].push_back({t.row, {i, j, i == j ? v : v / kSqrt2}});
    } else if (t.col < fr_off) {
      lt.emplace_back(t.row, t.col - nn_off, v);
    } else {
      const int f = t.col - fr_off;
      lt.emplace_back(t.row, p.cones.nonneg + 2 * f, v);
      lt.emplace_back(t.row, p.cones.nonneg + 2 * f + 1, -v);
    }
  }
  for (int k = 0; k < nb; ++k) {
    Block& blk = blocks_[k];
    blk.n = p.cones.psd[k];
    auto& list = per_block[k];
    std::sort(list.begin(), list.end(), [](const auto& l, const auto& r) {
      return std::tie(l.first, l.second.j, l.second.i) < std::tie(r.first, r.second.j, r.second.i);
    });
    for (const auto& [row, e] : list) {
      if (blk.rows.empty() || blk.rows.back().row != row) blk.rows.push_back({row, {}});
      auto& es = blk.rows.back().e;
      if (!es.empty() && es.back().i == e.i && es.back().j == e.j) {
        es.back().a += e.a;
      } else {
        es.push_back(e);
      }
    }
    blk.C = MatrixXd::Zero(blk.n, blk.n);
  }
  alp_.resize(m_, nl_);
  alp_.setFromTriplets(lt.begin(), lt.end());
  clp_ = VectorXd::Zero(nl_);
  for (size_t col = 0; col < p.c.size(); ++col) {
    const double v = p.c[col] / cscale_;
    if (v == 0.0) continue;
    const int ic = static_cast<int>(col);
    if (ic < nn_off) {
      Block& blk = blocks_[col_block[ic]];
      const int i = col_i[ic], j = col_j[ic];
      if (i == j) {
        blk.C(i, i) += v;
      } else {
        blk.C(i, j) += v / kSqrt2;
        blk.C(j, i) += v / kSqrt2;
      }
    } else if (ic < fr_off) {
      clp_[ic - nn_off] += v;
    } else {
      const int f = ic - fr_off;
      clp_[p.cones.nonneg + 2 * f] += v;
      clp_[p.cones.nonneg + 2 * f + 1] -= v;
    }
  }

  // Schur complement pattern (lower triangle).
  std::vector<Eigen::Triplet<double>> st;
  for (int r = 0; r < m_; ++r) st.emplace_back(r, r, 0.0);
  for (const Block& blk : blocks_) {
    for (size_t a = 0; a < blk.rows.size(); ++a) {
      for (size_t c = a; c < blk.rows.size(); ++c) {
        const int r = blk.rows[a].row, s = blk.rows[c].row;
        st.emplace_back(std::max(r, s), std::min(r, s), 0.0);
      }
    }
  }
  lp_.resize(nl_);
  for (int k = 0; k < nl_; ++k) {
    for (SpMat::InnerIterator it(alp_, k); it; ++it) lp_[k].rows.emplace_back(static_cast<int>(it.row()), it.value());
    const auto& rows = lp_[k].rows;
    for (size_t a = 0; a < rows.size(); ++a) {
      for (size_t c = a; c < rows.size(); ++c) {
        st.emplace_back(std::max(rows[a].first, rows[c].first), std::min(rows[a].first, rows[c].first), 0.0);
      }
    }
  }
  schur_.resize(m_, m_);
  schur_.setFromTriplets(st.begin(), st.end());
  schur_.makeCompressed();
  auto position = [this](int r, int s) {
    if (r < s) std::swap(r, s);
    const int* inner = schur_.innerIndexPtr();
    const int lo = schur_.outerIndexPtr()[s], hi = schur_.outerIndexPtr()[s + 1];
    return static_cast<int>(std::lower_bound(inner + lo, inner + hi, r) - inner);
  };
  for (Block& blk : blocks_) {
    for (size_t a = 0; a < blk.rows.size(); ++a) {
      for (size_t c = a; c < blk.rows.size(); ++c) blk.pos.push_back(position(blk.rows[a].row, blk.rows[c].row));
    }
  }
  for (LpColumn& col : lp_) {
    for (size_t a = 0; a < col.rows.size(); ++a) {
      for (size_t c = a; c < col.rows.size(); ++c) col.pos.push_back(position(col.rows[a].first, col.rows[c].first));
    }
  }
}

VectorXd Ipm::apply_a(const std::vector<MatrixXd>& X, const VectorXd& xl) const {
  VectorXd out = alp_ * xl;
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const MatrixXd& x = X[k];
    for (const BlockRow& br : blocks_[k].rows) {
      double s = 0.0;
      for (const Entry& e : br.e) s += e.i == e.j ? e.a * x(e.i, e.i) : 2.0 * e.a * x(e.i, e.j);
      out[br.row] += s;
    }
  }
  return out;
}

void Ipm::apply_at(const VectorXd& y, std::vector<MatrixXd>& S, VectorXd& sl) const {
  S.resize(blocks_.size());
  for (size_t k = 0; k < blocks_.size(); ++k) {
    S[k] = MatrixXd::Zero(blocks_[k].n, blocks_[k].n);
    for (const BlockRow& br : blocks_[k].rows) {
      const double yr = y[br.row];
      for (const Entry& e : br.e) {
        S[k](e.i, e.j) += yr * e.a;
        if (e.i != e.j) S[k](e.j, e.i) += yr * e.a;
      }
    }
  }
  sl = alp_.transpose() * y;
}

double Ipm::c_dot(const std::vector<MatrixXd>& X, const VectorXd& xl) const {
  double s = clp_.dot(xl);
  for (size_t k = 0; k < blocks_.size(); ++k) s += blocks_[k].C.cwiseProduct(X[k]).sum();
  return s;
}

bool Ipm::compute_scaling(const Pt& p, Scaling& sc) const {
  const size_t nb = blocks_.size();
  sc.R.resize(nb);
  sc.Rinv.resize(nb);
  sc.G.resize(nb);
  sc.lam.resize(nb);
  for (size_t k = 0; k < nb; ++k) {
    const MatrixXd& Lx = p.Lx[k];
    const MatrixXd& Lz = p.Lz[k];
    Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd lam = svd.singularValues();
    if (lam.minCoeff() <= 0.0) return false;
    const VectorXd is = lam.cwiseSqrt().cwiseInverse();
    sc.R[k] = Lx * svd.matrixV() * is.asDiagonal();
    sc.Rinv[k] = is.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
    sc.G[k] = sc.R[k] * sc.R[k].transpose();
    sc.lam[k] = lam;
  }
  if ((p.xl.array() <= 0.0).any() || (p.zl.array() <= 0.0).any()) return false;
  sc.w = (p.xl.array() / p.zl.array()).sqrt();
  sc.laml = (p.xl.array() * p.zl.array()).sqrt();
  return true;
}

bool Ipm::factor_schur(const Scaling& sc) {
  double* val = schur_.valuePtr();
  std::fill(val, val + schur_.nonZeros(), 0.0);
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const Block& blk = blocks_[k];
    const MatrixXd& G = sc.G[k];
    MatrixXd T(blk.n, blk.n);
    size_t idx = 0;
    for (size_t a = 0; a < blk.rows.size(); ++a) {
      T.setZero();
      for (const Entry& e : blk.rows[a].e) {
        if (e.i == e.j) {
          T.noalias() += e.a * G.col(e.i) * G.col(e.i).transpose();
        } else {
          T.noalias() += e.a * G.col(e.i) * G.col(e.j).transpose();
          T.noalias() += e.a * G.col(e.j) * G.col(e.i).transpose();
        }
      }
      for (size_t c = a; c < blk.rows.size(); ++c) {
        double s = 0.0;
        for (const Entry& e : blk.rows[c].e) s += e.i == e.j ? e.a * T(e.i, e.i) : 2.0 * e.a * T(e.i, e.j);
        val[blk.pos[idx++]] += s;
      }
    }
  }
  for (int k = 0; k < nl_; ++k) {
    const LpColumn& col = lp_[k];
    const double d = sc.w[k] * sc.w[k];
    size_t idx = 0;
    for (size_t a = 0; a < col.rows.size(); ++a) {
      for (size_t c = a; c < col.rows.size(); ++c) val[col.pos[idx++]] += col.rows[a].second * col.rows[c].second * d;
    }
  }
  if (m_ == 0) return true;
  if (!analyzed_) {
    llt_.analyzePattern(schur_);
    analyzed_ = true;
  }
  double dmax = 0.0;
  for (int r = 0; r < m_; ++r) dmax = std::max(dmax, schur_.coeff(r, r));
  double shift = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    llt_.setShift(shift);
    llt_.factorize(schur_);
    if (llt_.info() == Eigen::Success) return true;
    shift = shift == 0.0 ? 1e-14 * std::max(dmax, 1.0) : shift * 100.0;
  }
  return false;
}

VectorXd Ipm::msolve(const VectorXd& r) const {
  if (m_ == 0) return VectorXd(0);
  VectorXd v = llt_.solve(r);
  for (int it = 0; it < 2; ++it) {
    const VectorXd res = r - schur_.selfadjointView<Eigen::Lower>() * v;
    v += llt_.solve(res);
  }
  return v;
}

void Ipm::scaled_dirs(const Pt& d, const Scaling& sc, std::vector<MatrixXd>& dx, VectorXd& dxl,
                      std::vector<MatrixXd>& dz, VectorXd& dzl) const {
  const size_t nb = blocks_.size();
  dx.resize(nb);
  dz.resize(nb);
  for (size_t k = 0; k < nb; ++k) {
    dx[k] = sc.Rinv[k] * d.X[k] * sc.Rinv[k].transpose();
    dz[k] = sc.R[k].transpose() * d.Z[k] * sc.R[k];
  }
  dxl = d.xl.array() / sc.w.array();
  dzl = d.zl.array() * sc.w.array();
}

Pt Ipm::newton(const Pt& cur, const Scaling& sc, const Rhs& r, const VectorXd& q, const std::vector<MatrixXd>& x1,
               const VectorXd& x1l) const {
  const size_t nb = blocks_.size();
  // d_s solves λ∘d_s = r_c; then x0 = Wᵀd_s − H(d_d − Aᵀp).
  std::vector<MatrixXd> wds(nb), hdd(nb);
  for (size_t k = 0; k < nb; ++k) {
    const VectorXd& l = sc.lam[k];
    const int n = blocks_[k].n;
    MatrixXd ds(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) ds(i, j) = 2.0 * r.rc[k](i, j) / (l[i] + l[j]);
    }
    wds[k] = sc.R[k] * ds * sc.R[k].transpose();
    hdd[k] = sc.G[k] * r.dd[k] * sc.G[k];
  }
  const VectorXd wdsl = sc.w.array() * (r.rcl.array() / sc.laml.array());
  const VectorXd hddl = sc.w.array().square() * r.ddl.array();

  const VectorXd p = msolve(r.dp - apply_a(wds, wdsl) + apply_a(hdd, hddl));
  std::vector<MatrixXd> atp;
  VectorXd atpl;
  apply_at(p, atp, atpl);
  std::vector<MatrixXd> x0(nb);
  for (size_t k = 0; k < nb; ++k) x0[k] = wds[k] - hdd[k] + sc.G[k] * atp[k] * sc.G[k];
  const VectorXd x0l = wdsl - hddl + (sc.w.array().square() * atpl.array()).matrix();

  const double denom = b_.dot(q) - c_dot(x1, x1l) + cur.kappa / cur.tau;
  const double dtau = (r.dg - b_.dot(p) + c_dot(x0, x0l) + r.rk / cur.tau) / denom;

  Pt d;
  d.tau = dtau;
  d.kappa = (r.rk - cur.kappa * dtau) / cur.tau;
  d.y = p + q * dtau;
  std::vector<MatrixXd> aty;
  VectorXd atyl;
  apply_at(d.y, aty, atyl);
  d.X.resize(nb);
  d.Z.resize(nb);
  for (size_t k = 0; k < nb; ++k) {
    d.Z[k] = r.dd[k] - aty[k] + blocks_[k].C * dtau;
    d.X[k] = wds[k] - sc.G[k] * d.Z[k] * sc.G[k];
  }
  d.zl = r.ddl - atyl + clp_ * dtau;
  d.xl = wdsl.array() - sc.w.array().square() * d.zl.array();
  return d;
}

// One step of iterative refinement on the equations that are only met
// through the Schur solve (primal rows and the gap row).
Pt Ipm::newton_refined(const Pt& cur, const Scaling& sc, const Rhs& r, const VectorXd& q,
                       const std::vector<MatrixXd>& x1, const VectorXd& x1l) const {
  Pt d = newton(cur, sc, r, q, x1, x1l);
  Rhs e;
  e.dp = r.dp - (apply_a(d.X, d.xl) - b_ * d.tau);
  e.dg = r.dg - (b_.dot(d.y) - c_dot(d.X, d.xl) - d.kappa);
  e.dd.resize(blocks_.size());
  e.rc.resize(blocks_.size());
  for (size_t k = 0; k < blocks_.size(); ++k) {
    e.dd[k] = MatrixXd::Zero(blocks_[k].n, blocks_[k].n);
    e.rc[k] = e.dd[k];
  }
  e.ddl = VectorXd::Zero(nl_);
  e.rcl = VectorXd::Zero(nl_);
  const Pt c = newton(cur, sc, e, q, x1, x1l);
  for (size_t k = 0; k < blocks_.size(); ++k) {
    d.X[k] += c.X[k];
    d.Z[k] += c.Z[k];
  }
  d.xl += c.xl;
  d.zl += c.zl;
  d.y += c.y;
  d.tau += c.tau;
  d.kappa += c.kappa;
  return d;
}

double Ipm::max_step(const Pt& cur, const Pt& d, const Scaling& sc) const {
  std::vector<MatrixXd> dx, dz;
  VectorXd dxl, dzl;
  scaled_dirs(d, sc, dx, dxl, dz, dzl);
  double alpha = kInfD;
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const VectorXd is = sc.lam[k].cwiseSqrt().cwiseInverse();
    for (const MatrixXd* m : {&dx[k], &dz[k]}) {
      MatrixXd s = is.asDiagonal() * (*m) * is.asDiagonal();
      s = 0.5 * (s + s.transpose());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
      const double e = es.eigenvalues().minCoeff();
      if (e < 0.0) alpha = std::min(alpha, -1.0 / e);
    }
  }
  for (int k = 0; k < nl_; ++k) {
    if (d.xl[k] < 0.0) alpha = std::min(alpha, -cur.xl[k] / d.xl[k]);
    if (d.zl[k] < 0.0) alpha = std::min(alpha, -cur.zl[k] / d.zl[k]);
  }
  if (d.tau < 0.0) alpha = std::min(alpha, -cur.tau / d.tau);
  if (d.kappa < 0.0) alpha = std::min(alpha, -cur.kappa / d.kappa);
  return alpha;
}

void Ipm::unscale(const Pt& p, double div, VectorXd& x, VectorXd& y, VectorXd& z) const {
  const ConicProgram& pr = prog_;
  x = VectorXd::Zero(pr.num_vars());
  z = VectorXd::Zero(pr.num_vars());
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const auto xs = svec(p.X[k]), zs = svec(p.Z[k]);
    const int off = pr.psd_offset(static_cast<int>(k));
    for (size_t i = 0; i < xs.size(); ++i) {
      x[off + i] = xs[i];
      z[off + i] = zs[i];
    }
  }
  const int nn = pr.cones.nonneg;
  for (int i = 0; i < nn; ++i) {
    x[pr.nonneg_offset() + i] = p.xl[i];
    z[pr.nonneg_offset() + i] = p.zl[i];
  }
  for (int f = 0; f < pr.cones.free; ++f) x[pr.free_offset() + f] = p.xl[nn + 2 * f] - p.xl[nn + 2 * f + 1];
  x *= bscale_ / div;
  z *= cscale_ / div;
  y = (cscale_ / div) * rowscale_.cwiseProduct(p.y);
}

ConicSolution Ipm::run() {
  const size_t nb = blocks_.size();
  Pt cur;
  cur.X.resize(nb);
  cur.Z.resize(nb);
  for (size_t k = 0; k < nb; ++k) {
    cur.X[k] = MatrixXd::Identity(blocks_[k].n, blocks_[k].n);
    cur.Z[k] = cur.X[k];
  }
  cur.Lx = cur.X;
  cur.Lz = cur.Z;
  cur.xl = VectorXd::Ones(nl_);
  cur.zl = VectorXd::Ones(nl_);
  cur.y = VectorXd::Zero(m_);

  ConicSolution best;
  best.status = Status::NumericalFailure;
  double best_err = kInfD;
  auto record = [&](const Pt& p, Status st, int it) {
    VectorXd x, y, z;
    unscale(p, p.tau, x, y, z);
    ConicSolution s;
    s.status = st;
    s.x.assign(x.data(), x.data() + x.size());
    s.y.assign(y.data(), y.data() + y.size());
    s.z.assign(z.data(), z.data() + z.size());
    s.pobj = raw_.c.dot(x);
    s.dobj = raw_.b.dot(y);
    s.res = raw_.residuals(x, y, z);
    s.iterations = it;
    return s;
  };

  Scaling sc;

  for (int it = 0;; ++it) {
    // Convergence and infeasibility tests on the unscaled data.
    ConicSolution now = record(cur, Status::Optimal, it);
    const double err = std::max({now.res.primal, now.res.dual, now.res.gap});
    if (opt_.log) {
      *opt_.log << "ipm " << it << " pobj " << now.pobj << " dobj " << now.dobj << " pres " << now.res.primal
                << " dres " << now.res.dual << " gap " << now.res.gap << " tau " << cur.tau << " kappa "
                << cur.kappa << '\n';
    }
    const bool finite = std::isfinite(err) && std::isfinite(now.pobj) && std::isfinite(now.dobj);
    if (finite && err <= opt_.tol) return now;
    if (finite && err < best_err) {
      best_err = err;
      best = now;
    }
    {
      const bool collapsed = cur.tau <= 1e-8 * cur.kappa;
      VectorXd xr, yr, zr;
      unscale(cur, 1.0, xr, yr, zr);
      const double bty = raw_.b.dot(yr);
      if (bty > 0.0) {
        const double res = RawOps::inf_norm(VectorXd(raw_.A.transpose() * yr) + zr);
        if (res / bty <= (collapsed ? opt_.infeas_tol : opt_.tol)) {
          ConicSolution s;
          s.status = Status::PrimalInfeasible;
          s.x.assign(raw_.c.size(), 0.0);
          yr /= bty;
          zr /= bty;
          s.y.assign(yr.data(), yr.data() + yr.size());
          s.z.assign(zr.data(), zr.data() + zr.size());
          s.dobj = 1.0;
          s.pobj = kInfD;
          s.iterations = it;
          return s;
        }
      }
      const double ctx = raw_.c.dot(xr);
      if (ctx < 0.0) {
        const double res = RawOps::inf_norm(raw_.A * xr);
        if (res / -ctx <= (collapsed ? opt_.infeas_tol : opt_.tol)) {
          ConicSolution s;
          s.status = Status::DualInfeasible;
          xr /= -ctx;
          s.x.assign(xr.data(), xr.data() + xr.size());
          s.y.assign(m_, 0.0);
          s.z.assign(raw_.c.size(), 0.0);
          s.pobj = -kInfD;
          s.dobj = -1.0;
          s.iterations = it;
          return s;
        }
      }
    }
    if (!(cur.tau > 1e-200)) {
      best.status = Status::NumericalFailure;
      return best;
    }
    if (it >= opt_.max_iter) {
      best.status = Status::MaxIter;
      return best;
    }
    if (!compute_scaling(cur, sc) || !factor_schur(sc)) {
      if (opt_.log) *opt_.log << "ipm: scaling or Schur factorization failed\n";
      best.status = Status::NumericalFailure;
      return best;
    }

    // Residuals of the embedding.
    const VectorXd rp = apply_a(cur.X, cur.xl) - b_ * cur.tau;
    std::vector<MatrixXd> aty, rd(nb);
    VectorXd atyl;
    apply_at(cur.y, aty, atyl);
    for (size_t k = 0; k < nb; ++k) rd[k] = aty[k] + cur.Z[k] - blocks_[k].C * cur.tau;
    const VectorXd rdl = atyl + cur.zl - clp_ * cur.tau;
    double xz = cur.xl.dot(cur.zl);
    for (size_t k = 0; k < nb; ++k) xz += cur.X[k].cwiseProduct(cur.Z[k]).sum();
    const double rg = b_.dot(cur.y) - c_dot(cur.X, cur.xl) - cur.kappa;
    const double mu = (xz + cur.tau * cur.kappa) / (nu_ + 1);

    // q = M⁻¹(A H c + b) and x1 = −H(c − Aᵀq), shared by both solves.
    std::vector<MatrixXd> hc(nb);
    for (size_t k = 0; k < nb; ++k) hc[k] = sc.G[k] * blocks_[k].C * sc.G[k];
    const VectorXd hcl = sc.w.array().square() * clp_.array();
    const VectorXd q = msolve(apply_a(hc, hcl) + b_);
    std::vector<MatrixXd> atq, x1(nb);
    VectorXd atql;
    apply_at(q, atq, atql);
    for (size_t k = 0; k < nb; ++k) x1[k] = -(hc[k] - sc.G[k] * atq[k] * sc.G[k]);
    const VectorXd x1l = -(hcl.array() - sc.w.array().square() * atql.array()).matrix();

    // Predictor.
    Rhs rhs;
    rhs.dp = -rp;
    rhs.dd.resize(nb);
    rhs.rc.resize(nb);
    for (size_t k = 0; k < nb; ++k) {
      rhs.dd[k] = -rd[k];
      rhs.rc[k] = -MatrixXd(sc.lam[k].array().square().matrix().asDiagonal());
    }
    rhs.ddl = -rdl;
    rhs.dg = -rg;
    rhs.rcl = -sc.laml.array().square();
    rhs.rk = -cur.tau * cur.kappa;
    const Pt da = newton_refined(cur, sc, rhs, q, x1, x1l);
    const double alpha_a = std::min(1.0, max_step(cur, da, sc));
    const double sigma = std::clamp(std::pow(1.0 - alpha_a, 3), 0.0, 1.0);

    // Corrector.
    std::vector<MatrixXd> dxa, dza;
    VectorXd dxal, dzal;
    scaled_dirs(da, sc, dxa, dxal, dza, dzal);
    const double eta = 1.0 - sigma;
    rhs.dp = -eta * rp;
    for (size_t k = 0; k < nb; ++k) {
      const MatrixXd prod = dxa[k] * dza[k];
      rhs.dd[k] = -eta * rd[k];
      rhs.rc[k] = sigma * mu * MatrixXd::Identity(blocks_[k].n, blocks_[k].n) -
                  MatrixXd(sc.lam[k].array().square().matrix().asDiagonal()) - 0.5 * (prod + prod.transpose());
    }
    rhs.ddl = -eta * rdl;
    rhs.dg = -eta * rg;
    rhs.rcl = (sigma * mu - sc.laml.array().square() - dxal.array() * dzal.array()).matrix();
    rhs.rk = sigma * mu - cur.tau * cur.kappa - da.tau * da.kappa;
    const Pt d = newton_refined(cur, sc, rhs, q, x1, x1l);
    const double amax = max_step(cur, d, sc);
    const double alpha = std::min(1.0, 0.99 * amax);
    if (opt_.log) *opt_.log << "    mu " << mu << " sigma " << sigma << " alpha_a " << alpha_a << " alpha " << alpha << '\n';
    if (!(alpha > 1e-12) || !std::isfinite(alpha)) {
      if (opt_.log) *opt_.log << "ipm: step length collapsed\n";
      best.status = Status::NumericalFailure;
      return best;
    }
    // Update the square-root factors in the scaled space, where the new
    // point Λ + αΔ is far from singular even when X or Z is.
    std::vector<MatrixXd> dxs, dzs;
    VectorXd dxsl, dzsl;
    scaled_dirs(d, sc, dxs, dxsl, dzs, dzsl);
    bool ok = true;
    for (size_t k = 0; k < nb && ok; ++k) {
      const MatrixXd lam = sc.lam[k].asDiagonal();
      MatrixXd xs = lam + alpha * dxs[k], zs = lam + alpha * dzs[k];
      Eigen::LLT<MatrixXd> cx(0.5 * (xs + xs.transpose())), cz(0.5 * (zs + zs.transpose()));
      if (cx.info() != Eigen::Success || cz.info() != Eigen::Success) {
        ok = false;
        break;
      }
      cur.Lx[k] = sc.R[k] * MatrixXd(cx.matrixL());
      cur.Lz[k] = sc.Rinv[k].transpose() * MatrixXd(cz.matrixL());
      cur.X[k] = cur.Lx[k] * cur.Lx[k].transpose();
      cur.Z[k] = cur.Lz[k] * cur.Lz[k].transpose();
    }
    if (!ok) {
      if (opt_.log) *opt_.log << "ipm: factor update failed\n";
      best.status = Status::NumericalFailure;
      return best;
    }
    cur.xl += alpha * d.xl;
    cur.zl += alpha * d.zl;
    cur.y += alpha * d.y;
    cur.tau += alpha * d.tau;
    cur.kappa += alpha * d.kappa;
  }
}

}  // namespace

ConicSolution solve(const ConicProgram& prog, const SolveOptions& opts) {
  prog.validate();
  Ipm ipm(prog, opts);
  return ipm.run();
}

CertificateReport check_certificate(const ConicProgram& prog, const ConicSolution& sol, double tol) {
  prog.validate();
  const RawOps raw(prog);
  CertificateReport rep;
  auto vec = [](const std::vector<double>& v, int n) {
    VectorXd out = VectorXd::Zero(n);
    for (int i = 0; i < std::min<int>(n, static_cast<int>(v.size())); ++i) out[i] = v[i];
    return out;
  };
  const VectorXd x = vec(sol.x, raw.nv), y = vec(sol.y, raw.m), z = vec(sol.z, raw.nv);
  rep.res = raw.residuals(x, y, z);
  rep.x_cone = min_cone_value(prog, x, false);
  rep.z_cone = min_cone_value(prog, z, true);
  switch (sol.status) {
    case Status::Optimal: {
      const double scale = 1.0 + RawOps::inf_norm(x) + RawOps::inf_norm(z);
      rep.valid = rep.res.primal <= tol && rep.res.dual <= tol && rep.res.gap <= tol &&
                  rep.x_cone >= -tol * scale && rep.z_cone >= -tol * scale;
      break;
    }
    case Status::PrimalInfeasible: {
      rep.ray_objective = raw.b.dot(y);
      const double res = RawOps::inf_norm(VectorXd(raw.A.transpose() * y) + z);
      rep.ray_residual = rep.ray_objective > 0.0 ? res / rep.ray_objective : kInfD;
      rep.valid = rep.ray_objective > 0.0 && rep.ray_residual <= tol &&
                  rep.z_cone >= -tol * (1.0 + RawOps::inf_norm(z));
      break;
    }
    case Status::DualInfeasible: {
      rep.ray_objective = -raw.c.dot(x);
      const double res = RawOps::inf_norm(raw.A * x);
      rep.ray_residual = rep.ray_objective > 0.0 ? res / rep.ray_objective : kInfD;
      rep.valid = rep.ray_objective > 0.0 && rep.ray_residual <= tol &&
                  rep.x_cone >= -tol * (1.0 + RawOps::inf_norm(x));
      break;
    }
    default:
      rep.valid = false;
  }
  return rep;
}

}  // namespace ropf::conic
