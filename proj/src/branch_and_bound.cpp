// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/branch_and_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <tuple>

#include <json.hpp>

namespace ropf {

Thresholds Thresholds::for_variant(const Variant& v) {
  Thresholds t;
  if (std::holds_alternative<MaxKShunts>(v)) {
    t.lower = 0.25;
  } else if (std::holds_alternative<MaxKMoves>(v)) {
    t.upper = 0.75;
  } else if (std::holds_alternative<GenMoves>(v)) {
    t.lower = 1e-4;
    t.lower_strict = true;
    t.upper = 0.9;
    t.upper_strict = true;
  }
  return t;
}

Fixings initial_fixing(const RelaxationPoint& rp, const Thresholds& th) {
  Fixings f;
  for (const auto& [s, u] : rp.u) {
    const bool zero = th.lower_strict ? u < th.lower : u <= th.lower;
    const bool one = th.upper_strict ? u > th.upper : u >= th.upper;
    if (zero) {
      f.u[s] = 0;
    } else if (one) {
      f.u[s] = 1;
    }
  }
  return f;
}

Fixings apply_cardinality_implication(const RopfProblem& p, Fixings fix) {
  const MaxKShunts* m = std::get_if<MaxKShunts>(&p.variant);
  if (!m || fix.count_ones() < m->k) return fix;
  for (int s : p.net.shunt_buses()) fix.u.emplace(s, 0);
  return fix;
}

size_t select_node(const std::vector<BnbNode>& open) {
  size_t best = 0;
  for (size_t i = 1; i < open.size(); ++i) {
    const auto key = [&](size_t k) { return std::make_tuple(open[k].depth, open[k].fix.count_ones(), open[k].id); };
    if (key(i) > key(best)) best = i;
  }
  return best;
}

int branch_variable(const RelaxationPoint& rp, const std::vector<int>& free) {
  int best = -1;
  double bu = -kInf;
  for (int s : free) {
    auto it = rp.u.find(s);
    const double u = it == rp.u.end() ? 0.0 : it->second;
    if (best < 0 || u > bu || (u == bu && s < best)) {
      best = s;
      bu = u;
    }
  }
  return best;
}

std::string node_action_name(NodeAction a) {
  switch (a) {
    case NodeAction::Pruned: return "pruned";
    case NodeAction::Infeasible: return "infeasible";
    case NodeAction::Binary: return "binary";
    case NodeAction::Branched: return "branched";
    case NodeAction::Leaf: return "leaf";
  }
  return "unknown";
}

namespace {

std::string fix_string(const Network& net, const Fixings& f) {
  std::string s = "{";
  for (const auto& [bus, v] : f.u) {
    if (s.size() > 1) s += ',';
    s += std::to_string(net.buses[bus].id) + ':' + std::to_string(v);
  }
  return s + '}';
}

}  // namespace

BnbResult run_bnb(const RopfProblem& p, const RelaxationPoint& root, BoundOracle& oracle, const BnbConfig& cfg,
                  const NlpResult* first_phase) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  BnbResult res;
  auto offer = [&](const NlpResult& r) {
    if (r.feasible() && r.objective < res.ub) {
      res.ub = r.objective;
      res.best = r.candidate;
      return true;
    }
    return false;
  };
  auto finish = [&] {
    if (first_phase) offer(*first_phase);
    res.time_s = elapsed();
    res.solved = is_solved(relative_gap(res.ub, res.lb));
    return res;
  };

  if (root.status != RelaxStatus::Optimal) {
    res.lb = root.status == RelaxStatus::Infeasible ? kInf : -kInf;
    res.lb_root = res.lb;
    if (root.status == RelaxStatus::NumericalFailure) offer(three_step(p, {}, cfg.local));
    return finish();
  }
  res.lb_root = root.lower_bound;

  const Thresholds th = cfg.thresholds.value_or(Thresholds::for_variant(p.variant));
  const Fixings fix0 = apply_cardinality_implication(p, initial_fixing(root, th));
  res.free_after_fixing = p.net.num_shunts() - static_cast<int>(fix0.u.size());
  offer(three_step(p, fix0, cfg.local));

  auto prune_at = [&] { return res.ub - cfg.gap_tol * std::abs(res.ub); };
  std::vector<BnbNode> open{BnbNode{-kInf, fix0, 0, 0, -1}};
  long next_id = 1;
  double leaf_min = kInf;

  while (!open.empty()) {
    if (elapsed() > cfg.time_limit_s) {
      res.timed_out = true;
      break;
    }
    const size_t pick = select_node(open);
    const BnbNode node = open[pick];
    open.erase(open.begin() + static_cast<long>(pick));
    ++res.nodes;

    NodeRecord rec;
    rec.id = node.id;
    rec.parent = node.parent;
    rec.depth = node.depth;
    rec.fix = node.fix;
    rec.father_lb = node.father_lb;

    const RelaxationPoint rp = oracle.bound(p, node.fix);
    rec.status = rp.status;
    rec.lb = rp.status == RelaxStatus::Optimal ? rp.lower_bound : node.father_lb;

    std::vector<int> free;
    for (int s : p.net.shunt_buses()) {
      if (!node.fix.u.count(s)) free.push_back(s);
    }
    bool binary = rp.status == RelaxStatus::Optimal;
    for (int s : free) {
      if (!binary) break;
      const double u = rp.u.at(s);
      binary = std::min(u, 1.0 - u) <= cfg.binary_tol;
    }

    if (rp.status == RelaxStatus::Infeasible) {
      rec.action = NodeAction::Infeasible;
    } else if (rp.status == RelaxStatus::Optimal && rec.lb > prune_at()) {
      rec.action = NodeAction::Pruned;
      leaf_min = std::min(leaf_min, rec.lb);
    } else if (free.empty() || binary) {
      rec.action = NodeAction::Binary;
      leaf_min = std::min(leaf_min, rec.lb);
      Fixings full = node.fix;
      for (int s : free) full.u[s] = rp.u.at(s) >= 0.5 ? 1 : 0;
      full = round_with_repair(p, {}, full);
      if (offer(solve_fixed(p, full, nullptr, cfg.local))) {
        std::erase_if(open, [&](const BnbNode& n) {
          if (n.father_lb <= prune_at()) return false;
          leaf_min = std::min(leaf_min, n.father_lb);
          return true;
        });
      }
    } else {
      rec.action = NodeAction::Branched;
      const int var = rp.status == RelaxStatus::Optimal ? branch_variable(rp, free) : free.front();
      rec.branch_bus = var;
      rec.branch_value = rp.status == RelaxStatus::Optimal ? rp.u.at(var) : 0.0;
      BnbNode zero{rec.lb, node.fix, node.depth + 1, next_id++, node.id};
      zero.fix.u[var] = 0;
      BnbNode one{rec.lb, node.fix, node.depth + 1, next_id++, node.id};
      one.fix.u[var] = 1;
      one.fix = apply_cardinality_implication(p, one.fix);
      rec.children = {zero.id, one.id};
      open.push_back(std::move(zero));
      open.push_back(std::move(one));
    }
    rec.ub = res.ub;
    if (cfg.log) {
      *cfg.log << "node " << rec.id << " depth " << rec.depth << " fix " << fix_string(p.net, rec.fix) << " status "
               << relax_status_name(rec.status) << " lb " << rec.lb << " ub " << rec.ub << ' '
               << node_action_name(rec.action);
      if (rec.action == NodeAction::Branched) *cfg.log << " on " << p.net.buses[rec.branch_bus].id;
      *cfg.log << '\n';
    }
    res.trace.push_back(std::move(rec));
  }

  for (const BnbNode& n : open) leaf_min = std::min(leaf_min, n.father_lb);
  res.lb = std::max(res.lb_root, std::min(leaf_min, res.ub));
  if (!std::isfinite(res.ub) && !res.timed_out && leaf_min == kInf) res.lb = kInf;
  return finish();
}

std::string bnb_summary_json(const BnbResult& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  nlohmann::json j;
  j["ub"] = num(r.ub);
  j["lb"] = num(r.lb);
  j["lb_root"] = num(r.lb_root);
  const auto gap = relative_gap(r.ub, r.lb);
  j["gap"] = gap ? nlohmann::json(*gap) : nlohmann::json(nullptr);
  j["nodes"] = r.nodes;
  j["time_s"] = r.time_s;
  j["timed_out"] = r.timed_out;
  j["solved"] = r.solved;
  j["free_after_fixing"] = r.free_after_fixing;
  j["has_candidate"] = r.best.has_value();
  return j.dump();
}

}  // namespace ropf
