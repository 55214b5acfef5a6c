// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ropf/error.hpp"

namespace ropf::nlp {

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

constexpr double kXi = 0.99995;  // fraction to the boundary
constexpr double kSigma = 0.1;   // centering
constexpr double kZ0 = 1.0;

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

struct Eval {
  double f = 0.0;
  VectorXd df;
  VectorXd g, h;
  SpMat jg, jh;
};

class Mips {
 public:
  Mips(const Problem& p, const Options& o) : p_(p), o_(o) {
    eq_ = p.eq;
    ineq_ = p.ineq;
    for (int i = 0; i < p.n; ++i) {
      const double lo = p.lb.empty() ? -kInfD : p.lb[i];
      const double hi = p.ub.empty() ? kInfD : p.ub[i];
      if (lo == hi) {
        Poly r;
        r.add(1.0, i);
        r.add(-lo);
        eq_.push_back(std::move(r));
        continue;
      }
      if (std::isfinite(lo)) {
        Poly r;
        r.add(-1.0, i);
        r.add(lo);
        ineq_.push_back(std::move(r));
      }
      if (std::isfinite(hi)) {
        Poly r;
        r.add(1.0, i);
        r.add(-hi);
        ineq_.push_back(std::move(r));
      }
    }
  }

  Result run(std::vector<double> z0);

 private:
  static constexpr double kInfD = std::numeric_limits<double>::infinity();

  Eval evaluate(const VectorXd& x) const;
  SpMat hessian(const VectorXd& x, const VectorXd& lam, const VectorXd& mu) const;

  const Problem& p_;
  const Options& o_;
  std::vector<Poly> eq_, ineq_;
};

Eval Mips::evaluate(const VectorXd& x) const {
  const std::span<const double> xs(x.data(), x.size());
  const int n = p_.n;
  Eval e;
  e.f = p_.objective.eval(xs);
  e.df = VectorXd::Zero(n);
  p_.objective.gradient(xs, 1.0, [&](int v, double w) { e.df[v] += w; });
  auto rows = [&](const std::vector<Poly>& polys, VectorXd& val, SpMat& jac) {
    val.resize(polys.size());
    std::vector<Trip> t;
    for (size_t r = 0; r < polys.size(); ++r) {
      val[r] = polys[r].eval(xs);
      polys[r].gradient(xs, 1.0, [&](int v, double w) { t.emplace_back(static_cast<int>(r), v, w); });
    }
    jac.resize(static_cast<int>(polys.size()), n);
    jac.setFromTriplets(t.begin(), t.end());
  };
  rows(eq_, e.g, e.jg);
  rows(ineq_, e.h, e.jh);
  return e;
}

SpMat Mips::hessian(const VectorXd& x, const VectorXd& lam, const VectorXd& mu) const {
  const std::span<const double> xs(x.data(), x.size());
  std::vector<Trip> t;
  auto push = [&](int i, int j, double w) { t.emplace_back(i, j, w); };
  p_.objective.hessian(xs, 1.0, push);
  for (size_t r = 0; r < eq_.size(); ++r) {
    if (lam[r] != 0.0) eq_[r].hessian(xs, lam[r], push);
  }
  for (size_t r = 0; r < ineq_.size(); ++r) {
    if (mu[r] != 0.0) ineq_[r].hessian(xs, mu[r], push);
  }
  SpMat h(p_.n, p_.n);
  h.setFromTriplets(t.begin(), t.end());
  return h;
}

Result Mips::run(std::vector<double> z0) {
  const int n = p_.n;
  const int neq = static_cast<int>(eq_.size());
  const int niq = static_cast<int>(ineq_.size());
  if (static_cast<int>(z0.size()) != n) throw Error(ErrorCode::InvalidArgument, "start point has wrong size");

  VectorXd x = Eigen::Map<VectorXd>(z0.data(), n);
  Eval e = evaluate(x);
  VectorXd z = VectorXd::Constant(niq, kZ0);
  for (int i = 0; i < niq; ++i) {
    if (e.h[i] < -kZ0) z[i] = -e.h[i];
  }
  double gamma = 1.0;
  VectorXd mu = gamma * z.cwiseInverse();
  VectorXd lam = VectorXd::Zero(neq);

  auto violation = [&](const Eval& ev) {
    double v = inf_norm(ev.g);
    for (int i = 0; i < niq; ++i) v = std::max(v, ev.h[i]);
    return v;
  };

  Result res;
  double f0 = e.f;
  int it = 0;
  for (; it < o_.max_iter; ++it) {
    SpMat hl = hessian(x, lam, mu);
    const VectorXd zinv = z.cwiseInverse();
    const SpMat jht = e.jh.transpose();
    const SpMat m = hl + jht * (mu.cwiseProduct(zinv)).asDiagonal() * e.jh;
    const VectorXd lx = e.df + e.jg.transpose() * lam + jht * mu;
    const VectorXd nvec = lx + jht * (zinv.cwiseProduct(mu.cwiseProduct(e.h) + VectorXd::Constant(niq, gamma)));

    std::vector<Trip> t;
    t.reserve(m.nonZeros() + 2 * e.jg.nonZeros() + n);
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SpMat::InnerIterator i(m, k); i; ++i) t.emplace_back(i.row(), i.col(), i.value());
    }
    for (int k = 0; k < e.jg.outerSize(); ++k) {
      for (SpMat::InnerIterator i(e.jg, k); i; ++i) {
        t.emplace_back(n + i.row(), i.col(), i.value());
        t.emplace_back(i.col(), n + i.row(), i.value());
      }
    }
    VectorXd rhs(n + neq);
    rhs << -nvec, -e.g;

    VectorXd sol;
    bool ok = false;
    for (double reg : {0.0, 1e-10, 1e-8, 1e-6}) {
      std::vector<Trip> tr = t;
      if (reg > 0.0) {
        for (int i = 0; i < n; ++i) tr.emplace_back(i, i, reg);
        for (int i = 0; i < neq; ++i) tr.emplace_back(n + i, n + i, -reg);
      }
      SpMat kkt(n + neq, n + neq);
      kkt.setFromTriplets(tr.begin(), tr.end());
      kkt.makeCompressed();
      Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
      lu.compute(kkt);
      if (lu.info() != Eigen::Success) continue;
      sol = lu.solve(rhs);
      if (lu.info() == Eigen::Success && sol.allFinite()) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      if (o_.log) *o_.log << "nlp: singular KKT system at iteration " << it << '\n';
      res.status = Status::Failed;
      break;
    }
    const VectorXd dx = sol.head(n);
    const VectorXd dlam = sol.tail(neq);
    const VectorXd dz = -e.h - z - e.jh * dx;
    const VectorXd dmu = -mu + zinv.cwiseProduct(VectorXd::Constant(niq, gamma) - mu.cwiseProduct(dz));

    double ap = 1.0, ad = 1.0;
    for (int i = 0; i < niq; ++i) {
      if (dz[i] < 0.0) ap = std::min(ap, kXi * z[i] / -dz[i]);
      if (dmu[i] < 0.0) ad = std::min(ad, kXi * mu[i] / -dmu[i]);
    }
    x += ap * dx;
    z += ap * dz;
    lam += ad * dlam;
    mu += ad * dmu;
    if (niq > 0) gamma = kSigma * z.dot(mu) / niq;

    f0 = e.f;
    e = evaluate(x);
    if (!x.allFinite() || !std::isfinite(e.f)) {
      res.status = Status::Failed;
      break;
    }
    const VectorXd lx1 = e.df + e.jg.transpose() * lam + e.jh.transpose() * mu;
    const double feas = violation(e);
    const double grad = inf_norm(lx1) / (1.0 + std::max(inf_norm(lam), inf_norm(mu)));
    const double comp = (niq ? z.dot(mu) : 0.0) / (1.0 + inf_norm(x));
    const double cost = std::abs(e.f - f0) / (1.0 + std::abs(f0));
    if (o_.log) {
      *o_.log << "nlp it " << it << " f " << e.f << " feas " << feas << " grad " << grad << " comp " << comp
              << " ap " << ap << " ad " << ad << '\n';
    }
    if (feas <= o_.feas_tol && grad <= o_.grad_tol && comp <= o_.comp_tol && cost <= o_.cost_tol) {
      res.status = Status::Converged;
      ++it;
      break;
    }
    res.status = Status::MaxIter;
  }
  res.z.assign(x.data(), x.data() + n);
  res.objective = e.f;
  res.violation = violation(e);
  res.iterations = it;
  return res;
}

}  // namespace

void Poly::add(double coef, int a, int b, int c) {
  if (coef == 0.0) return;
  Mono m;
  m.coef = coef;
  m.v = {a, b, c};
  terms.push_back(m);
}

double Poly::eval(std::span<const double> z) const {
  double s = 0.0;
  for (const Mono& m : terms) {
    double r = m.coef;
    for (int v : m.v) {
      if (v >= 0) r *= z[v];
    }
    s += r;
  }
  return s;
}

std::string status_name(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIter: return "max-iter";
    case Status::Failed: return "failed";
  }
  return "unknown";
}

Result solve(const Problem& prob, std::vector<double> z0, const Options& opts) {
  if ((!prob.lb.empty() && static_cast<int>(prob.lb.size()) != prob.n) ||
      (!prob.ub.empty() && static_cast<int>(prob.ub.size()) != prob.n)) {
    throw Error(ErrorCode::InvalidArgument, "bound vectors have wrong size");
  }
  Mips m(prob, opts);
  return m.run(std::move(z0));
}

}  // namespace ropf::nlp
