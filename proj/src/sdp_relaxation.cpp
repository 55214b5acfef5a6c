// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/sdp_relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ropf/error.hpp"
#include "ropf/quadratic.hpp"

namespace ropf {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kEmptyRowTol = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

int Fixings::count_ones() const {
  int k = 0;
  for (const auto& [bus, v] : u) k += v == 1;
  return k;
}

std::array<LinearIneq, 4> mccormick(double vmin2, double vmax2) {
  if (vmin2 > vmax2) throw Error(ErrorCode::InvalidArgument, "McCormick bounds inverted");
  return {{
      {1.0, -vmin2, -1.0, -vmin2},
      {1.0, -vmax2, 0.0, 0.0},
      {-1.0, vmax2, 1.0, vmax2},
      {-1.0, vmin2, 0.0, 0.0},
  }};
}

std::string relax_status_name(RelaxStatus s) {
  switch (s) {
    case RelaxStatus::Optimal: return "optimal";
    case RelaxStatus::Infeasible: return "infeasible";
    case RelaxStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

EntryRef SdpInstance::entry(int p, int q) const {
  auto it = owner.find({std::min(p, q), std::max(p, q)});
  if (it == owner.end()) throw Error(ErrorCode::InvalidArgument, "lifted entry not covered by any clique");
  return it->second;
}

double SdpInstance::lifted(const std::vector<double>& x, int p, int q) const {
  const EntryRef e = entry(p, q);
  const int n = prog.cones.psd[e.block];
  const double v = x.at(prog.psd_offset(e.block) + conic::svec_index(n, e.i, e.j));
  return e.i == e.j ? v : v / kSqrt2;
}

CliqueDecomposition lifted_decomposition(const Network& net, const SdpOptions& opts) {
  const SparsityGraph g = SparsityGraph::from_network(net);
  if (opts.dense) {
    std::vector<int> all(g.num_vertices());
    for (int v = 0; v < g.num_vertices(); ++v) all[v] = v;
    return clique_tree({all}, g.num_vertices());
  }
  return merge_cliques(decompose(g), opts.k_max, opts.merge);
}

namespace {

class Builder {
 public:
  Builder(SdpInstance& inst) : inst_(inst) {
    const auto& cl = inst_.deco.cliques;
    inst_.prog.cones.psd.clear();
    for (size_t k = 0; k < cl.size(); ++k) {
      inst_.prog.cones.psd.push_back(static_cast<int>(cl[k].size()));
      block_off_.push_back(next_off_);
      next_off_ += conic::svec_size(static_cast<int>(cl[k].size()));
      for (size_t a = 0; a < cl[k].size(); ++a) {
        for (size_t b = a; b < cl[k].size(); ++b) {
          inst_.owner.emplace(std::make_pair(cl[k][a], cl[k][b]),
                              EntryRef{static_cast<int>(k), static_cast<int>(b), static_cast<int>(a)});
        }
      }
    }
  }

  int new_col() {
    ++inst_.prog.cones.nonneg;
    return next_off_ + inst_.prog.cones.nonneg - 1;
  }

  int entry_col(const EntryRef& e) const {
    const int n = inst_.prog.cones.psd[e.block];
    return block_off_[e.block] + conic::svec_index(n, e.i, e.j);
  }

  // Terms of the row under construction.
  void w(int p, int q, double coef) { terms_.emplace_back(entry_col(inst_.entry(p, q)), p == q ? coef : coef / kSqrt2); }
  void w_at(const EntryRef& e, double coef) { terms_.emplace_back(entry_col(e), e.i == e.j ? coef : coef / kSqrt2); }
  void form(const QuadForm& f, double scale = 1.0) {
    for (const QuadTerm& t : f.terms) w(t.p, t.q, scale * t.coef);
  }
  void col(int c, double coef) { terms_.emplace_back(c, coef); }

  /// Commits Σ terms = rhs. Returns the row or -1 when the row is empty.
  int commit(double rhs) {
    std::sort(terms_.begin(), terms_.end());
    std::vector<std::pair<int, double>> merged;
    for (const auto& t : terms_) {
      if (!merged.empty() && merged.back().first == t.first) {
        merged.back().second += t.second;
      } else {
        merged.push_back(t);
      }
    }
    terms_.clear();
    std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
    if (merged.empty()) {
      if (std::abs(rhs) > kEmptyRowTol) inst_.trivially_infeasible = true;
      return -1;
    }
    const int row = inst_.prog.add_row(rhs);
    for (const auto& [c, v] : merged) inst_.prog.a.push_back({row, c, v});
    return row;
  }
  int commit_le(double rhs) {
    if (terms_.empty()) {
      if (rhs < -kEmptyRowTol) inst_.trivially_infeasible = true;
      return -1;
    }
    col(new_col(), 1.0);
    return commit(rhs);
  }
  void objective(int c, double coef) { inst_.prog.add_scalar(-1, c, coef); }

  /// terms + offset = s with s ∈ [lo, hi]; returns (column, sign, constant)
  /// with s = constant + sign·column, or column -1 when s is fixed.
  struct Bounded {
    int col = -1;
    double sign = 0.0;
    double constant = 0.0;
    int col2 = -1;  // second column for a free quantity (s = col − col2)
  };
  Bounded bounded(double lo, double hi, double offset) {
    Bounded r;
    if (std::isfinite(lo) && std::isfinite(hi) && hi <= lo) {
      r.constant = lo;
      commit(lo - offset);
    } else if (std::isfinite(lo)) {
      r.col = new_col();
      r.sign = 1.0;
      r.constant = lo;
      col(r.col, -1.0);
      commit(lo - offset);
      if (std::isfinite(hi)) {
        col(r.col, 1.0);
        col(new_col(), 1.0);
        commit(hi - lo);
      }
    } else if (std::isfinite(hi)) {
      r.col = new_col();
      r.sign = -1.0;
      r.constant = hi;
      col(r.col, 1.0);
      commit(hi - offset);
    } else {
      r.col = new_col();
      r.col2 = new_col();
      r.sign = 1.0;
      col(r.col, -1.0);
      col(r.col2, 1.0);
      commit(-offset);
    }
    return r;
  }

 private:
  SdpInstance& inst_;
  std::vector<int> block_off_;
  int next_off_ = 0;
  std::vector<std::pair<int, double>> terms_;
};

// Identical end currents (no charging, unit ratio) would give duplicate rows.
bool same_form(const QuadForm& a, const QuadForm& b) {
  if (a.terms.size() != b.terms.size()) return false;
  for (size_t k = 0; k < a.terms.size(); ++k) {
    const QuadTerm &x = a.terms[k], &y = b.terms[k];
    if (x.p != y.p || x.q != y.q) return false;
    if (std::abs(x.coef - y.coef) > 1e-12 * std::max(std::abs(x.coef), std::abs(y.coef))) return false;
  }
  return true;
}

}  // namespace

SdpInstance build_sdp(const RopfProblem& p, const CliqueDecomposition& deco, const Fixings& fix,
                      const SdpOptions& opts) {
  const Network& net = p.net;
  const int n = net.num_buses();
  if (deco.num_vertices != 2 * n) throw Error(ErrorCode::InvalidArgument, "decomposition does not match network");
  for (const auto& [bus, val] : fix.u) {
    if (bus < 0 || bus >= n || !net.buses[bus].shunt) {
      throw Error(ErrorCode::InvalidArgument, "fixing refers to a bus without shunt");
    }
    if (val != 0 && val != 1) throw Error(ErrorCode::InvalidArgument, "fixings must be 0 or 1");
  }
  const GenMoves* gm = std::get_if<GenMoves>(&p.variant);
  if (gm && gm->direction == Direction::Both) {
    throw Error(ErrorCode::InvalidArgument, "GENmoves relaxation needs a single direction");
  }

  SdpInstance inst;
  inst.deco = deco;
  inst.fixings = fix;
  Builder bld(inst);
  const NetworkForms forms = NetworkForms::build(net);

  // Shunt variables.
  for (int s : net.shunt_buses()) {
    auto it = fix.u.find(s);
    if (it == fix.u.end() || opts.keep_mccormick_when_fixed) {
      inst.u_col[s] = bld.new_col();
      inst.xi_col[s] = bld.new_col();
    }
  }
  auto add_shunt_term = [&](int bus, double coef) {
    if (coef == 0.0) return;
    if (auto it = inst.xi_col.find(bus); it != inst.xi_col.end()) {
      bld.col(it->second, coef);
    } else if (fix.u.at(bus) == 1) {
      bld.form(forms.vmag2[bus], coef);
    }
  };

  // Uniform generation move: λ = lambda_base + t, t ∈ [0, 0.5].
  int t_col = -1;
  if (gm) {
    t_col = bld.new_col();
    bld.col(t_col, 1.0);
    bld.col(bld.new_col(), 1.0);
    bld.commit(0.5);
  }

  for (int i = 0; i < n; ++i) {
    const Bus& bus = net.buses[i];
    const int g = net.generator_at(i);
    // Active power.
    bld.form(forms.flow_p[i]);
    if (bus.shunt) add_shunt_term(i, bus.shunt->g);
    if (g < 0) {
      bld.commit(-bus.load.real());
    } else {
      const Generator& gen = net.generators[g];
      inst.obj_const += gen.const_cost;
      if (gm) {
        const double p0 = gm->p0.at(g);
        const double base = gm->direction == Direction::Down ? gen.pmin : p0;
        const double slope = gm->direction == Direction::Down ? 2.0 * (p0 - gen.pmin) : 2.0 * (gen.pmax - p0);
        bld.col(t_col, -slope);
        bld.commit(base - bus.load.real());
        inst.obj_const += gen.cost * base;
        bld.objective(t_col, gen.cost * slope);
      } else {
        const auto r = bld.bounded(gen.pmin, gen.pmax, bus.load.real());
        inst.obj_const += gen.cost * r.constant;
        if (r.col >= 0) bld.objective(r.col, gen.cost * r.sign);
        if (r.col2 >= 0) bld.objective(r.col2, -gen.cost);
      }
    }
    // Reactive power.
    bld.form(forms.flow_q[i]);
    if (bus.shunt) add_shunt_term(i, -bus.shunt->b);
    if (g < 0) {
      bld.commit(-bus.load.imag());
    } else {
      const Generator& gen = net.generators[g];
      bld.bounded(gen.qmin, gen.qmax, bus.load.imag());
    }
    // Voltage magnitude.
    bld.form(forms.vmag2[i]);
    bld.bounded(bus.vmin * bus.vmin, bus.vmax * bus.vmax, 0.0);
  }

  for (int l = 0; l < net.num_branches(); ++l) {
    const double imax = net.branches[l].imax;
    if (!std::isfinite(imax)) continue;
    bld.form(forms.current_o[l]);
    bld.commit_le(imax * imax);
    if (same_form(forms.current_o[l], forms.current_d[l])) continue;
    bld.form(forms.current_d[l]);
    bld.commit_le(imax * imax);
  }

  for (const auto& [s, ucol] : inst.u_col) {
    const int xcol = inst.xi_col.at(s);
    const Bus& bus = net.buses[s];
    if (auto it = fix.u.find(s); it != fix.u.end()) {
      bld.col(ucol, 1.0);
      bld.commit(it->second);
    } else {
      bld.col(ucol, 1.0);
      bld.commit_le(1.0);
    }
    for (const LinearIneq& q : mccormick(bus.vmin * bus.vmin, bus.vmax * bus.vmax)) {
      bld.col(xcol, q.a_xi);
      bld.col(ucol, q.a_u);
      bld.form(forms.vmag2[s], q.a_v);
      bld.commit_le(q.rhs);
      ++inst.mccormick_rows;
    }
  }

  // Optional constraint on the binaries.
  auto value_of = [&](int s) { return fix.u.at(s); };
  std::visit(Overloaded{
                 [](const Unconstrained&) {},
                 [&](const MaxKShunts& m) {
                   double rhs = m.k;
                   for (int s : net.shunt_buses()) {
                     if (inst.u_col.count(s) && !(opts.keep_mccormick_when_fixed && fix.u.count(s))) {
                       bld.col(inst.u_col.at(s), 1.0);
                     } else if (fix.u.count(s)) {
                       rhs -= value_of(s);
                     }
                   }
                   if (rhs < -kEmptyRowTol) inst.trivially_infeasible = true;
                   bld.commit_le(rhs);
                 },
                 [&](const MaxKMoves& m) {
                   double rhs = m.k;
                   for (int s : net.shunt_buses()) {
                     const int u0 = m.u0.at(s);
                     if (inst.u_col.count(s) && !(opts.keep_mccormick_when_fixed && fix.u.count(s))) {
                       bld.col(inst.u_col.at(s), u0 == 0 ? 1.0 : -1.0);
                       if (u0 == 1) rhs -= 1.0;
                     } else if (fix.u.count(s)) {
                       rhs -= value_of(s) != u0 ? 1.0 : 0.0;
                     }
                   }
                   if (rhs < -kEmptyRowTol && inst.u_col.empty()) inst.trivially_infeasible = true;
                   bld.commit_le(rhs);
                 },
                 [](const GenMoves&) {},
             },
             p.variant);

  // Linking equalities between overlapping cliques.
  for (const CliqueLink& link : deco.links) {
    const auto& pc = deco.cliques[link.parent];
    const auto& cc = deco.cliques[link.child];
    auto local = [](const std::vector<int>& c, int v) {
      return static_cast<int>(std::lower_bound(c.begin(), c.end(), v) - c.begin());
    };
    for (size_t a = 0; a < link.shared.size(); ++a) {
      for (size_t b = a; b < link.shared.size(); ++b) {
        const int va = link.shared[a], vb = link.shared[b];
        bld.w_at({link.child, local(cc, vb), local(cc, va)}, 1.0);
        bld.w_at({link.parent, local(pc, vb), local(pc, va)}, -1.0);
        bld.commit(0.0);
      }
    }
  }

  if (inst.trivially_infeasible) {
    inst.prog = conic::ConicProgram{};
  } else {
    inst.prog.c.resize(inst.prog.num_vars(), 0.0);
  }
  return inst;
}

RelaxationPoint extract_relaxation_point(const SdpInstance& inst, const conic::ConicSolution& sol,
                                         double accept_tol) {
  RelaxationPoint rp;
  rp.iterations = sol.iterations;
  if (inst.trivially_infeasible || sol.status == conic::Status::PrimalInfeasible) {
    rp.status = RelaxStatus::Infeasible;
    return rp;
  }
  const bool finite = std::isfinite(sol.dobj) && std::isfinite(sol.pobj) && std::isfinite(sol.res.primal) &&
                      std::isfinite(sol.res.dual) && std::isfinite(sol.res.gap);
  const double worst = std::max({sol.res.primal, sol.res.dual, sol.res.gap});
  const bool near = (sol.status == conic::Status::MaxIter || sol.status == conic::Status::NumericalFailure) &&
                    !sol.x.empty() && worst <= accept_tol;
  if (!finite || (sol.status != conic::Status::Optimal && !near)) {
    rp.status = RelaxStatus::NumericalFailure;
    return rp;
  }
  const int n = inst.deco.num_vertices / 2;
  rp.vdiag.resize(n);
  for (int i = 0; i < n; ++i) {
    rp.vdiag[i] = inst.lifted(sol.x, re_coord(i), re_coord(i)) + inst.lifted(sol.x, im_coord(i), im_coord(i));
  }
  for (const auto& [s, v] : inst.fixings.u) rp.u[s] = v;
  for (const auto& [s, xcol] : inst.xi_col) {
    if (inst.fixings.u.count(s)) continue;
    const double vss = rp.vdiag[s];
    if (!(vss > 0.0)) {
      rp.status = RelaxStatus::NumericalFailure;
      rp.u.clear();
      return rp;
    }
    rp.u[s] = std::clamp(sol.x[xcol] / vss, 0.0, 1.0);
  }
  rp.lower_bound = sol.dobj + inst.obj_const;
  rp.status = RelaxStatus::Optimal;
  return rp;
}

RelaxationPoint solve_relaxation(const RopfProblem& p, const CliqueDecomposition& deco, const Fixings& fix,
                                 const SdpOptions& opts) {
  const SdpInstance inst = build_sdp(p, deco, fix, opts);
  if (inst.trivially_infeasible) {
    RelaxationPoint rp;
    rp.status = RelaxStatus::Infeasible;
    return rp;
  }
  const conic::ConicSolution sol = conic::solve(inst.prog, opts.ipm);
  RelaxationPoint rp = extract_relaxation_point(inst, sol, opts.accept_tol);
  if (const GenMoves* gm = std::get_if<GenMoves>(&p.variant); gm && rp.status == RelaxStatus::Optimal) {
    // t is the first scalar column after the shunt pairs.
    const int t_col = inst.prog.nonneg_offset() + 2 * static_cast<int>(inst.u_col.size());
    rp.lambda = (gm->direction == Direction::Down ? 0.0 : 0.5) + sol.x[t_col];
  }
  return rp;
}

RelaxationPoint SdpBoundOracle::bound(const RopfProblem& p, const Fixings& fix) {
  std::shared_ptr<const CliqueDecomposition> deco;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!deco_ || net_ != &p.net || deco_->num_vertices != 2 * p.net.num_buses()) {
      deco_ = std::make_shared<const CliqueDecomposition>(lifted_decomposition(p.net, opts_));
      net_ = &p.net;
    }
    deco = deco_;
  }
  return solve_relaxation(p, *deco, fix, opts_);
}

void write_sdpa(const conic::ConicProgram& prog, std::ostream& os) {
  prog.validate();
  const int nb = static_cast<int>(prog.cones.psd.size());
  const int nlp = prog.cones.nonneg + 2 * prog.cones.free;
  os << "* ropf conic program: min <C,X> s.t. <A_i,X> = b_i, written as SDPA max form\n";
  os << prog.num_rows << '\n' << nb + (nlp > 0 ? 1 : 0) << '\n';
  for (int k = 0; k < nb; ++k) os << prog.cones.psd[k] << ' ';
  if (nlp > 0) os << -nlp;
  os << '\n';
  for (int r = 0; r < prog.num_rows; ++r) os << (r ? " " : "") << prog.b[r];
  os << '\n';
  std::vector<int> block_of(prog.num_vars(), -1), li(prog.num_vars()), lj(prog.num_vars());
  for (int k = 0; k < nb; ++k) {
    const int n = prog.cones.psd[k], off = prog.psd_offset(k);
    for (int j = 0; j < n; ++j) {
      for (int i = j; i < n; ++i) {
        const int c = off + conic::svec_index(n, i, j);
        block_of[c] = k;
        li[c] = j;
        lj[c] = i;
      }
    }
  }
  auto emit = [&](int mat, int col, double v) {
    if (v == 0.0) return;
    if (block_of[col] >= 0) {
      const bool diag = li[col] == lj[col];
      os << mat << ' ' << block_of[col] + 1 << ' ' << li[col] + 1 << ' ' << lj[col] + 1 << ' '
         << (diag ? v : v / kSqrt2) << '\n';
    } else if (col < prog.free_offset()) {
      const int d = col - prog.nonneg_offset() + 1;
      os << mat << ' ' << nb + 1 << ' ' << d << ' ' << d << ' ' << v << '\n';
    } else {
      const int f = col - prog.free_offset();
      const int d = prog.cones.nonneg + 2 * f + 1;
      os << mat << ' ' << nb + 1 << ' ' << d << ' ' << d << ' ' << v << '\n';
      os << mat << ' ' << nb + 1 << ' ' << d + 1 << ' ' << d + 1 << ' ' << -v << '\n';
    }
  };
  for (size_t col = 0; col < prog.c.size(); ++col) emit(0, static_cast<int>(col), -prog.c[col]);
  std::vector<conic::Triplet> a = prog.a;
  std::sort(a.begin(), a.end(), [](const auto& l, const auto& r) { return std::tie(l.row, l.col) < std::tie(r.row, r.col); });
  for (const auto& t : a) emit(t.row + 1, t.col, t.val);
}

}  // namespace ropf
