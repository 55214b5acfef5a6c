// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/network_model.hpp"

#include <algorithm>
#include <cmath>

#include "ropf/error.hpp"

namespace ropf {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr Complex kJ(0.0, 1.0);

}  // namespace

std::string variant_name(const Variant& v) {
  return std::visit(Overloaded{[](const Unconstrained&) { return std::string("none"); },
                               [](const MaxKShunts&) { return std::string("maxkshunts"); },
                               [](const MaxKMoves&) { return std::string("maxkmoves"); },
                               [](const GenMoves&) { return std::string("genmoves"); }},
                    v);
}

void RopfProblem::validate() const {
  std::visit(Overloaded{
                 [](const Unconstrained&) {},
                 [](const MaxKShunts& m) {
                   if (m.k < 0) throw Error(ErrorCode::InvalidArgument, "k must be nonnegative");
                 },
                 [this](const MaxKMoves& m) {
                   if (m.k < 0) throw Error(ErrorCode::InvalidArgument, "k must be nonnegative");
                   const auto& shunts = net.shunt_buses();
                   if (m.u0.size() != shunts.size()) {
                     throw Error(ErrorCode::InvalidArgument, "u0 must be defined exactly on the shunt set");
                   }
                   for (int s : shunts) {
                     auto it = m.u0.find(s);
                     if (it == m.u0.end() || (it->second != 0 && it->second != 1)) {
                       throw Error(ErrorCode::InvalidArgument, "u0 must be binary on every shunt");
                     }
                   }
                 },
                 [this](const GenMoves& m) {
                   if (static_cast<int>(m.p0.size()) != net.num_generators()) {
                     throw Error(ErrorCode::InvalidArgument, "P0 must be defined exactly on the generators");
                   }
                   for (int g = 0; g < net.num_generators(); ++g) {
                     const auto& gen = net.generators[g];
                     if (m.p0[g] < gen.pmin - 1e-12 || m.p0[g] > gen.pmax + 1e-12) {
                       throw Error(ErrorCode::InvalidArgument, "P0 outside generator limits");
                     }
                   }
                 }},
             variant);
}

Complex FlowCoeffs::s_orig(Complex vo, Complex vd) const {
  return origin_power[0] * std::norm(vo) + origin_power[1] * vo * std::conj(vd);
}
Complex FlowCoeffs::s_dest(Complex vo, Complex vd) const {
  return dest_power[0] * std::conj(vo) * vd + dest_power[1] * std::norm(vd);
}
Complex FlowCoeffs::i_orig(Complex vo, Complex vd) const {
  return origin_current[0] * vo + origin_current[1] * vd;
}
Complex FlowCoeffs::i_dest(Complex vo, Complex vd) const {
  return dest_current[0] * vo + dest_current[1] * vd;
}

FlowCoeffs branch_flow_coeffs(const Branch& br) {
  const Complex yc = std::conj(br.y);
  const Complex rot = std::polar(1.0, br.theta);
  const double t = br.tau;
  const Complex jb = kJ * br.charging;
  FlowCoeffs f;
  f.origin_power[0] = (yc - jb) / (t * t);
  f.origin_power[1] = -yc * rot / t;
  f.dest_power[0] = -yc * std::conj(rot) / t;
  f.dest_power[1] = yc - jb;
  // Currents use y (not its conjugate) so that S = v·conj(i) at both ends.
  f.origin_current[0] = (br.y + jb) / (t * t);
  f.origin_current[1] = -br.y * std::conj(rot) / t;
  f.dest_current[0] = -br.y * rot / t;
  f.dest_current[1] = br.y + jb;
  return f;
}

double FeasibilityReport::max_violation() const {
  return std::max({power_balance, p_bounds, q_bounds, v_bounds, current, variant, integrality});
}

double candidate_objective(const Network& net, const Candidate& c) {
  double obj = 0.0;
  for (int g = 0; g < net.num_generators(); ++g) {
    obj += net.generators[g].cost * c.s.at(g).real() + net.generators[g].const_cost;
  }
  return obj;
}

std::vector<Complex> balance_residuals(const Network& net, const Candidate& c) {
  const int n = net.num_buses();
  std::vector<Complex> r(n);
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.buses[i];
    const int g = net.generator_at(i);
    r[i] = (g >= 0 ? c.s[g] : Complex{}) - b.load;
    if (b.shunt) {
      auto it = c.u.find(i);
      if (it == c.u.end()) {
        throw Error(ErrorCode::InvalidArgument, "candidate has no u for shunt bus " + std::to_string(b.id));
      }
      r[i] -= Complex(b.shunt->g, -b.shunt->b) * std::norm(c.v[i]) * it->second;
    }
  }
  for (const Branch& br : net.branches) {
    const FlowCoeffs f = branch_flow_coeffs(br);
    const Complex vo = c.v[br.from], vd = c.v[br.to];
    r[br.from] -= f.s_orig(vo, vd);
    r[br.to] -= f.s_dest(vo, vd);
  }
  return r;
}

double genmoves_active_power(const Generator& g, double p0, double lambda_minus, double lambda_plus,
                             int delta_minus, int delta_plus) {
  if (lambda_minus < 0.0 || lambda_minus > 0.5) {
    throw Error(ErrorCode::InvalidArgument, "lambda_minus outside [0, 0.5]");
  }
  if (lambda_plus < 0.5 || lambda_plus > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "lambda_plus outside [0.5, 1]");
  }
  if (delta_minus + delta_plus != 1 || delta_minus < 0 || delta_plus < 0) {
    throw Error(ErrorCode::InvalidArgument, "exactly one of delta_minus, delta_plus must be 1");
  }
  const double down = g.pmin + 2.0 * (p0 - g.pmin) * lambda_minus;
  const double up = 2.0 * p0 - g.pmax + 2.0 * (g.pmax - p0) * lambda_plus;
  return down * delta_minus + up * delta_plus;
}

FeasibilityReport evaluate_candidate(const RopfProblem& p, const Candidate& c, EvalOptions opts) {
  const Network& net = p.net;
  if (static_cast<int>(c.v.size()) != net.num_buses() ||
      static_cast<int>(c.s.size()) != net.num_generators()) {
    throw Error(ErrorCode::InvalidArgument, "candidate dimensions do not match the network");
  }
  for (int s : net.shunt_buses()) {
    if (!c.u.count(s)) {
      throw Error(ErrorCode::InvalidArgument,
                  "candidate has no u for shunt bus " + std::to_string(net.buses[s].id));
    }
  }
  FeasibilityReport rep;
  for (const Complex& r : balance_residuals(net, c)) {
    rep.power_balance = std::max({rep.power_balance, std::abs(r.real()), std::abs(r.imag())});
  }
  for (int g = 0; g < net.num_generators(); ++g) {
    const Generator& gen = net.generators[g];
    const double pg = c.s[g].real(), qg = c.s[g].imag();
    rep.p_bounds = std::max({rep.p_bounds, gen.pmin - pg, pg - gen.pmax});
    rep.q_bounds = std::max({rep.q_bounds, gen.qmin - qg, qg - gen.qmax});
  }
  for (int i = 0; i < net.num_buses(); ++i) {
    const Bus& b = net.buses[i];
    const double m2 = std::norm(c.v[i]);
    rep.v_bounds = std::max({rep.v_bounds, b.vmin * b.vmin - m2, m2 - b.vmax * b.vmax});
  }
  for (const Branch& br : net.branches) {
    if (!std::isfinite(br.imax)) continue;
    const FlowCoeffs f = branch_flow_coeffs(br);
    const double lim = br.imax * br.imax;
    const Complex vo = c.v[br.from], vd = c.v[br.to];
    rep.current = std::max({rep.current, std::norm(f.i_orig(vo, vd)) - lim, std::norm(f.i_dest(vo, vd)) - lim});
  }
  double usum = 0.0;
  for (const auto& [bus, val] : c.u) {
    if (!net.buses.at(bus).shunt) {
      throw Error(ErrorCode::InvalidArgument, "u defined on a bus without shunt");
    }
    rep.integrality = std::max({rep.integrality, -val, val - 1.0});
    if (!opts.relaxed) rep.integrality = std::max(rep.integrality, std::min(val, 1.0 - val));
    usum += val;
  }
  std::visit(Overloaded{
                 [](const Unconstrained&) {},
                 [&](const MaxKShunts& m) { rep.variant = std::max(0.0, usum - m.k); },
                 [&](const MaxKMoves& m) {
                   double moves = 0.0;
                   for (const auto& [bus, val] : c.u) moves += m.u0.at(bus) == 0 ? val : 1.0 - val;
                   rep.variant = std::max(0.0, moves - m.k);
                 },
                 [&](const GenMoves& m) {
                   if (!c.lambda_minus || !c.lambda_plus || !c.delta_minus || !c.delta_plus) {
                     throw Error(ErrorCode::InvalidArgument, "GENmoves candidate needs lambda and delta");
                   }
                   const double lm = *c.lambda_minus, lp = *c.lambda_plus;
                   const int dm = *c.delta_minus, dp = *c.delta_plus;
                   double v = std::max({0.0, -lm, lm - 0.5, 0.5 - lp, lp - 1.0});
                   if (dm + dp != 1 || dm < 0 || dp < 0) {
                     rep.variant = std::max(v, 1.0);
                     return;
                   }
                   const double lmc = std::clamp(lm, 0.0, 0.5), lpc = std::clamp(lp, 0.5, 1.0);
                   for (int g = 0; g < net.num_generators(); ++g) {
                     const double target = genmoves_active_power(net.generators[g], m.p0.at(g), lmc, lpc, dm, dp);
                     v = std::max(v, std::abs(c.s[g].real() - target));
                   }
                   rep.variant = v;
                 }},
             p.variant);
  rep.p_bounds = std::max(rep.p_bounds, 0.0);
  rep.q_bounds = std::max(rep.q_bounds, 0.0);
  rep.v_bounds = std::max(rep.v_bounds, 0.0);
  rep.current = std::max(rep.current, 0.0);
  rep.integrality = std::max(rep.integrality, 0.0);
  rep.objective = candidate_objective(net, c);
  rep.feasible = rep.max_violation() <= opts.tol;
  return rep;
}

std::optional<double> relative_gap(double ub, double lb) {
  if (!std::isfinite(ub) || ub == 0.0) return std::nullopt;
  if (!std::isfinite(lb)) return std::nullopt;
  return (ub - lb) / ub;
}

bool is_solved(std::optional<double> gap) { return gap && *gap <= kSolvedGap; }

}  // namespace ropf
