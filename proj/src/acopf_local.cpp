// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/acopf_local.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "ropf/error.hpp"
#include "ropf/quadratic.hpp"

namespace ropf {

namespace {

void add_quad(nlp::Poly& p, const QuadForm& q, double w) {
  for (const QuadTerm& t : q.terms) p.add(w * t.coef, t.p, t.q);
}

// |v|²·u shunt term, u either a constant or a variable.
void add_shunt(nlp::Poly& p, int bus, double w, int ucol, double uval) {
  const int e = re_coord(bus), f = im_coord(bus);
  if (ucol >= 0) {
    p.add(w, e, e, ucol);
    p.add(w, f, f, ucol);
  } else {
    p.add(w * uval, e, e);
    p.add(w * uval, f, f);
  }
}

/// ROPF in rectangular coordinates with some shunts relaxed.
class Model {
 public:
  Model(const RopfProblem& p, const Fixings& fix, std::optional<Direction> dir) : p_(p), fix_(fix), dir_(dir) {
    const Network& net = p.net;
    n_ = net.num_buses();
    ng_ = net.num_generators();
    int next = 2 * n_ + 2 * ng_;
    for (int s : net.shunt_buses()) {
      if (!fix.u.count(s)) ucol_[s] = next++;
    }
    if (dir_) lam_col_ = next++;
    nv_ = next;
    build();
  }

  const nlp::Problem& problem() const { return prob_; }
  const std::map<int, int>& ucol() const { return ucol_; }
  double obj_scale() const { return scale_; }

  std::vector<double> start_from(const Candidate* c) const;
  Candidate candidate(const std::vector<double>& z) const;

  /// Replaces the penalty part of the objective with Σ w_s·u_s.
  void set_linear_penalty(const std::map<int, double>& w) {
    prob_.objective = base_obj_;
    for (const auto& [s, ws] : w) prob_.objective.add(ws * scale_, ucol_.at(s));
  }

 private:
  void build();
  double lam_lo() const { return *dir_ == Direction::Down ? 0.0 : 0.5; }

  const RopfProblem& p_;
  const Fixings& fix_;
  std::optional<Direction> dir_;
  int n_ = 0, ng_ = 0, nv_ = 0, lam_col_ = -1;
  std::map<int, int> ucol_;
  double scale_ = 1.0;
  nlp::Poly base_obj_;
  nlp::Problem prob_;
};

void Model::build() {
  const Network& net = p_.net;
  const NetworkForms forms = NetworkForms::build(net);
  prob_.n = nv_;
  prob_.lb.assign(nv_, -kInf);
  prob_.ub.assign(nv_, kInf);

  double cmax = 1.0;
  for (const Generator& g : net.generators) cmax = std::max(cmax, std::abs(g.cost));
  scale_ = 1.0 / cmax;
  for (int g = 0; g < ng_; ++g) {
    base_obj_.add(scale_ * net.generators[g].cost, 2 * n_ + g);
    base_obj_.add(scale_ * net.generators[g].const_cost);
  }
  prob_.objective = base_obj_;

  for (int i = 0; i < n_; ++i) {
    const Bus& b = net.buses[i];
    nlp::Poly pr, qr;
    const int g = net.generator_at(i);
    if (g >= 0) {
      pr.add(1.0, 2 * n_ + g);
      qr.add(1.0, 2 * n_ + ng_ + g);
    }
    pr.add(-b.load.real());
    qr.add(-b.load.imag());
    if (b.shunt) {
      const auto it = ucol_.find(i);
      const int uc = it == ucol_.end() ? -1 : it->second;
      const double uv = uc < 0 ? fix_.u.at(i) : 0.0;
      add_shunt(pr, i, -b.shunt->g, uc, uv);
      add_shunt(qr, i, b.shunt->b, uc, uv);
    }
    add_quad(pr, forms.flow_p[i], -1.0);
    add_quad(qr, forms.flow_q[i], -1.0);
    prob_.eq.push_back(std::move(pr));
    prob_.eq.push_back(std::move(qr));

    nlp::Poly lo, hi;
    add_quad(lo, forms.vmag2[i], -1.0);
    lo.add(b.vmin * b.vmin);
    add_quad(hi, forms.vmag2[i], 1.0);
    hi.add(-b.vmax * b.vmax);
    prob_.ineq.push_back(std::move(lo));
    prob_.ineq.push_back(std::move(hi));
    for (int c : {re_coord(i), im_coord(i)}) {
      prob_.lb[c] = -b.vmax;
      prob_.ub[c] = b.vmax;
    }
  }
  prob_.lb[im_coord(net.reference)] = 0.0;
  prob_.ub[im_coord(net.reference)] = 0.0;

  for (int l = 0; l < net.num_branches(); ++l) {
    const double imax = net.branches[l].imax;
    if (!std::isfinite(imax)) continue;
    for (const QuadForm* q : {&forms.current_o[l], &forms.current_d[l]}) {
      nlp::Poly r;
      add_quad(r, *q, 1.0);
      r.add(-imax * imax);
      prob_.ineq.push_back(std::move(r));
    }
  }

  const GenMoves* gm = std::get_if<GenMoves>(&p_.variant);
  for (int g = 0; g < ng_; ++g) {
    const Generator& gen = net.generators[g];
    if (!gm) {
      prob_.lb[2 * n_ + g] = gen.pmin;
      prob_.ub[2 * n_ + g] = gen.pmax;
    }
    prob_.lb[2 * n_ + ng_ + g] = gen.qmin;
    prob_.ub[2 * n_ + ng_ + g] = gen.qmax;
  }
  if (gm) {
    if (!dir_ || *dir_ == Direction::Both) throw Error(ErrorCode::InvalidArgument, "GENmoves model needs a direction");
    prob_.lb[lam_col_] = lam_lo();
    prob_.ub[lam_col_] = lam_lo() + 0.5;
    for (int g = 0; g < ng_; ++g) {
      const Generator& gen = net.generators[g];
      const double p0 = gm->p0.at(g);
      // P = base + slope·(λ − λ_lo)
      const double base = *dir_ == Direction::Down ? gen.pmin : p0;
      const double slope = *dir_ == Direction::Down ? 2.0 * (p0 - gen.pmin) : 2.0 * (gen.pmax - p0);
      nlp::Poly r;
      r.add(1.0, 2 * n_ + g);
      r.add(-slope, lam_col_);
      r.add(-(base - slope * lam_lo()));
      prob_.eq.push_back(std::move(r));
    }
  }
  for (const auto& [s, c] : ucol_) {
    prob_.lb[c] = 0.0;
    prob_.ub[c] = 1.0;
  }

  if (const MaxKShunts* m = std::get_if<MaxKShunts>(&p_.variant); m && !ucol_.empty()) {
    nlp::Poly r;
    for (const auto& [s, c] : ucol_) r.add(1.0, c);
    r.add(fix_.count_ones() - m->k);
    prob_.ineq.push_back(std::move(r));
  }
  if (const MaxKMoves* m = std::get_if<MaxKMoves>(&p_.variant); m && !ucol_.empty()) {
    nlp::Poly r;
    double cst = -m->k;
    for (const auto& [s, v] : fix_.u) cst += v != m->u0.at(s) ? 1.0 : 0.0;
    for (const auto& [s, c] : ucol_) {
      if (m->u0.at(s) == 0) {
        r.add(1.0, c);
      } else {
        r.add(-1.0, c);
        cst += 1.0;
      }
    }
    r.add(cst);
    prob_.ineq.push_back(std::move(r));
  }
}

std::vector<double> Model::start_from(const Candidate* c) const {
  const Network& net = p_.net;
  std::vector<double> z(nv_, 0.0);
  for (int i = 0; i < n_; ++i) {
    const Complex v = c ? c->v.at(i) : Complex(1.0, 0.0);
    z[re_coord(i)] = v.real();
    z[im_coord(i)] = v.imag();
  }
  for (int g = 0; g < ng_; ++g) {
    const Generator& gen = net.generators[g];
    if (c) {
      z[2 * n_ + g] = c->s.at(g).real();
      z[2 * n_ + ng_ + g] = c->s.at(g).imag();
    } else {
      z[2 * n_ + g] = 0.5 * (gen.pmin + gen.pmax);
      z[2 * n_ + ng_ + g] = 0.5 * (gen.qmin + gen.qmax);
    }
  }
  for (const auto& [s, col] : ucol_) {
    double u = 0.5;
    if (c) {
      if (auto it = c->u.find(s); it != c->u.end()) u = it->second;
    }
    z[col] = std::clamp(u, 0.0, 1.0);
  }
  if (lam_col_ >= 0) {
    double lam = lam_lo() + 0.25;
    if (c && *dir_ == Direction::Down && c->lambda_minus && c->delta_minus == 1) lam = *c->lambda_minus;
    if (c && *dir_ == Direction::Up && c->lambda_plus && c->delta_plus == 1) lam = *c->lambda_plus;
    z[lam_col_] = std::clamp(lam, lam_lo(), lam_lo() + 0.5);
  }
  return z;
}

Candidate Model::candidate(const std::vector<double>& z) const {
  const Network& net = p_.net;
  Candidate c;
  c.v.resize(n_);
  for (int i = 0; i < n_; ++i) c.v[i] = Complex(z[re_coord(i)], z[im_coord(i)]);
  c.s.resize(ng_);
  for (int g = 0; g < ng_; ++g) c.s[g] = Complex(z[2 * n_ + g], z[2 * n_ + ng_ + g]);
  for (int s : net.shunt_buses()) {
    auto it = ucol_.find(s);
    c.u[s] = it == ucol_.end() ? fix_.u.at(s) : std::clamp(z[it->second], 0.0, 1.0);
  }
  if (lam_col_ >= 0) {
    const double lam = std::clamp(z[lam_col_], lam_lo(), lam_lo() + 0.5);
    const bool down = *dir_ == Direction::Down;
    c.lambda_minus = down ? lam : 0.5;
    c.lambda_plus = down ? 0.5 : lam;
    c.delta_minus = down ? 1 : 0;
    c.delta_plus = down ? 0 : 1;
  }
  c.objective = candidate_objective(net, c);
  return c;
}

NlpResult finish(const RopfProblem& p, const Model& m, const nlp::Result& r, const LocalOptions& opts, bool relaxed) {
  NlpResult out;
  out.candidate = m.candidate(r.z);
  EvalOptions eo;
  eo.tol = opts.feas_tol;
  eo.relaxed = relaxed;
  const FeasibilityReport rep = evaluate_candidate(p, out.candidate, eo);
  out.violation = rep.max_violation();
  out.objective = rep.objective;
  if (!rep.feasible) {
    out.status = NlpStatus::Infeasible;
  } else {
    out.status = r.status == nlp::Status::Converged ? NlpStatus::LocalOptimal : NlpStatus::IterationLimit;
  }
  return out;
}

bool better(const NlpResult& a, const NlpResult& b) {
  if (a.feasible() != b.feasible()) return a.feasible();
  if (a.feasible()) return a.objective < b.objective;
  return a.violation < b.violation;
}

std::vector<std::optional<Direction>> directions(const RopfProblem& p) {
  const GenMoves* gm = std::get_if<GenMoves>(&p.variant);
  if (!gm) return {std::nullopt};
  if (gm->direction == Direction::Both) return {Direction::Down, Direction::Up};
  return {gm->direction};
}

bool all_fixed(const Network& net, const Fixings& fix) {
  return std::all_of(net.shunt_buses().begin(), net.shunt_buses().end(),
                     [&](int s) { return fix.u.count(s) > 0; });
}

void check_fixings(const Network& net, const Fixings& fix) {
  for (const auto& [s, v] : fix.u) {
    if (s < 0 || s >= net.num_buses() || !net.buses[s].shunt) {
      throw Error(ErrorCode::InvalidArgument, "fixing refers to a bus without shunt");
    }
    if (v != 0 && v != 1) throw Error(ErrorCode::InvalidArgument, "fixings must be 0 or 1");
  }
}

// Variant constraints that involve fixed shunts only.
bool fixed_part_violates(const RopfProblem& p, const Fixings& fix) {
  if (const MaxKShunts* m = std::get_if<MaxKShunts>(&p.variant)) return fix.count_ones() > m->k;
  if (const MaxKMoves* m = std::get_if<MaxKMoves>(&p.variant)) {
    int moves = 0;
    for (const auto& [s, v] : fix.u) moves += v != m->u0.at(s);
    return moves > m->k;
  }
  return false;
}

NlpResult solve_relaxed_dir(const RopfProblem& p, const Fixings& fix, std::optional<Direction> dir,
                            const Candidate* start, const LocalOptions& opts) {
  Model m(p, fix, dir);
  NlpResult best;
  std::vector<const Candidate*> starts;
  if (start) starts.push_back(start);
  starts.push_back(nullptr);
  for (const Candidate* s : starts) {
    const nlp::Result r = nlp::solve(m.problem(), m.start_from(s), opts.nlp);
    NlpResult cur = finish(p, m, r, opts, true);
    if (better(cur, best)) best = std::move(cur);
  }
  return best;
}

}  // namespace

std::string nlp_status_name(NlpStatus s) {
  switch (s) {
    case NlpStatus::LocalOptimal: return "local-optimal";
    case NlpStatus::Infeasible: return "infeasible";
    case NlpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

NlpResult solve_fixed(const RopfProblem& p, const Fixings& fix, const Candidate* start, const LocalOptions& opts) {
  p.validate();
  check_fixings(p.net, fix);
  if (!all_fixed(p.net, fix)) throw Error(ErrorCode::InvalidArgument, "solve_fixed needs every shunt fixed");
  NlpResult best;
  if (fixed_part_violates(p, fix)) return best;
  for (const auto& dir : directions(p)) {
    Model m(p, fix, dir);
    std::vector<const Candidate*> starts;
    if (start) starts.push_back(start);
    starts.push_back(nullptr);
    for (const Candidate* s : starts) {
      const nlp::Result r = nlp::solve(m.problem(), m.start_from(s), opts.nlp);
      NlpResult cur = finish(p, m, r, opts, false);
      if (better(cur, best)) best = std::move(cur);
    }
  }
  if (start) {
    // Never return something worse than a feasible start with the same fixing.
    bool same = true;
    for (const auto& [s, v] : fix.u) same = same && start->u.count(s) && start->u.at(s) == v;
    if (same) {
      EvalOptions eo;
      eo.tol = opts.feas_tol;
      const FeasibilityReport rep = evaluate_candidate(p, *start, eo);
      if (rep.feasible && (!best.feasible() || rep.objective < best.objective)) {
        best.candidate = *start;
        best.candidate.objective = rep.objective;
        best.objective = rep.objective;
        best.violation = rep.max_violation();
        best.status = NlpStatus::LocalOptimal;
      }
    }
  }
  return best;
}

NlpResult solve_continuous(const RopfProblem& p, const Fixings& fix, const LocalOptions& opts) {
  p.validate();
  check_fixings(p.net, fix);
  NlpResult best;
  if (fixed_part_violates(p, fix)) return best;
  for (const auto& dir : directions(p)) {
    NlpResult cur = solve_relaxed_dir(p, fix, dir, nullptr, opts);
    if (better(cur, best)) best = std::move(cur);
  }
  return best;
}

NlpResult solve_mpec(const RopfProblem& p, const Candidate& start, const Fixings& fix, const LocalOptions& opts) {
  p.validate();
  check_fixings(p.net, fix);
  auto penalty = [&](const Candidate& c) {
    double s = 0.0;
    for (const auto& [bus, u] : c.u) {
      if (!fix.u.count(bus)) s += u * (1.0 - u);
    }
    return s;
  };
  auto binary = [&](const Candidate& c) {
    double worst = 0.0;
    for (const auto& [bus, u] : c.u) {
      if (!fix.u.count(bus)) worst = std::max(worst, std::min(u, 1.0 - u));
    }
    return worst <= opts.binary_tol;
  };

  NlpResult cur;
  cur.candidate = start;
  {
    EvalOptions eo;
    eo.tol = opts.feas_tol;
    eo.relaxed = true;
    const FeasibilityReport rep = evaluate_candidate(p, start, eo);
    cur.objective = rep.objective;
    cur.violation = rep.max_violation();
    cur.status = rep.feasible ? NlpStatus::LocalOptimal : NlpStatus::Infeasible;
  }
  if (binary(cur.candidate)) return cur;

  std::optional<Direction> dir;
  if (const GenMoves* gm = std::get_if<GenMoves>(&p.variant)) {
    dir = gm->direction;
    if (*dir == Direction::Both) dir = start.delta_plus == 1 ? Direction::Up : Direction::Down;
  }
  Model m(p, fix, dir);
  const double fscale = std::max(1.0, std::abs(cur.objective));
  double pen = penalty(cur.candidate);
  for (double rho_w : opts.rho_schedule) {
    const double rho = rho_w * opts.rho_scale * fscale;
    for (int it = 0; it < opts.dca_iters; ++it) {
      // u(1−u) linearised at the current point: (1 − 2u_k)·u + const.
      std::map<int, double> w;
      for (const auto& [s, col] : m.ucol()) w[s] = rho * (1.0 - 2.0 * cur.candidate.u.at(s));
      m.set_linear_penalty(w);
      const nlp::Result r = nlp::solve(m.problem(), m.start_from(&cur.candidate), opts.nlp);
      NlpResult next = finish(p, m, r, opts, true);
      if (!next.feasible()) break;
      const double npen = penalty(next.candidate);
      if (npen > pen + 1e-12) break;
      double move = 0.0;
      for (const auto& [s, u] : next.candidate.u) move = std::max(move, std::abs(u - cur.candidate.u.at(s)));
      cur = std::move(next);
      pen = npen;
      if (move <= 1e-6 || binary(cur.candidate)) break;
    }
    if (binary(cur.candidate)) return cur;
  }
  if (cur.feasible()) cur.status = NlpStatus::IterationLimit;
  return cur;
}

Fixings round_with_repair(const RopfProblem& p, const std::map<int, double>& u, const Fixings& fix) {
  Fixings out = fix;
  std::vector<std::pair<double, int>> free;  // (distance of the move, bus)
  const MaxKMoves* mm = std::get_if<MaxKMoves>(&p.variant);
  for (const auto& [s, val] : u) {
    if (fix.u.count(s)) continue;
    const int r = val >= 0.5 ? 1 : 0;
    out.u[s] = r;
    if (mm) {
      if (r != mm->u0.at(s)) free.emplace_back(std::abs(val - mm->u0.at(s)), s);
    } else if (r == 1) {
      free.emplace_back(val, s);
    }
  }
  int budget = -1;
  int used = 0;
  if (const MaxKShunts* m = std::get_if<MaxKShunts>(&p.variant)) {
    budget = m->k;
    used = fix.count_ones();
  } else if (mm) {
    budget = mm->k;
    for (const auto& [s, v] : fix.u) used += v != mm->u0.at(s);
  }
  if (budget < 0) return out;
  std::stable_sort(free.begin(), free.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const int keep = std::max(0, budget - used);
  for (size_t i = keep; i < free.size(); ++i) {
    const int s = free[i].second;
    out.u[s] = mm ? mm->u0.at(s) : 0;
  }
  return out;
}

Fixings round_k_largest(const std::map<int, double>& u, int k) {
  std::vector<std::pair<double, int>> ones;
  Fixings out;
  for (const auto& [s, val] : u) {
    out.u[s] = 0;
    if (val >= 0.5) ones.emplace_back(val, s);
  }
  std::stable_sort(ones.begin(), ones.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (size_t i = 0; i < ones.size() && static_cast<int>(i) < k; ++i) out.u[ones[i].second] = 1;
  return out;
}

NlpResult three_step(const RopfProblem& p, const Fixings& fix, const LocalOptions& opts) {
  p.validate();
  check_fixings(p.net, fix);
  if (all_fixed(p.net, fix)) return solve_fixed(p, fix, nullptr, opts);
  NlpResult best;
  for (const auto& dir : directions(p)) {
    RopfProblem sub = p;
    if (dir) std::get<GenMoves>(sub.variant).direction = *dir;
    const NlpResult cont = solve_continuous(sub, fix, opts);
    if (!cont.feasible()) continue;
    const NlpResult mpec = solve_mpec(sub, cont.candidate, fix, opts);
    const Candidate& base = mpec.feasible() ? mpec.candidate : cont.candidate;
    const Fixings full = round_with_repair(sub, base.u, fix);
    NlpResult cur = solve_fixed(sub, full, &base, opts);
    if (better(cur, best)) best = std::move(cur);
  }
  return best;
}

NlpResult rounding_baseline(const RopfProblem& p, const RelaxationPoint& rp, int k, const LocalOptions& opts) {
  if (rp.status != RelaxStatus::Optimal) return {};
  return solve_fixed(p, round_k_largest(rp.u, k), nullptr, opts);
}

std::map<int, int> initial_shunt_state(const Network& net, const LocalOptions& opts) {
  RopfProblem p{net, Unconstrained{}};
  const NlpResult r = solve_continuous(p, {}, opts);
  if (!r.feasible()) throw Error(ErrorCode::Infeasible, "continuous relaxation has no feasible point");
  std::map<int, int> u0;
  for (const auto& [s, u] : r.candidate.u) u0[s] = u >= 0.5 ? 1 : 0;
  return u0;
}

}  // namespace ropf
