// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ropf/error.hpp"

namespace ropf {

std::string variant_kind_name(VariantKind v) {
  switch (v) {
    case VariantKind::MaxKShunts: return "maxkshunts";
    case VariantKind::MaxKMoves: return "maxkmoves";
    case VariantKind::GenMoves: return "genmoves";
  }
  return "unknown";
}

VariantKind parse_variant_kind(const std::string& s) {
  for (VariantKind v : {VariantKind::MaxKShunts, VariantKind::MaxKMoves, VariantKind::GenMoves}) {
    if (s == variant_kind_name(v)) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown variant '" + s + "'");
}

void RunConfig::validate() const {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "k must be nonnegative");
  if (!(time_limit_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "time limit must be positive");
  if (scenarios < 1) throw Error(ErrorCode::InvalidArgument, "scenario count must be positive");
  if (k_max < 0) throw Error(ErrorCode::InvalidArgument, "k_max must be nonnegative");
  if (!(ipm_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<std::vector<double>> generate_genmoves_scenarios(const Network& net, std::uint64_t seed, int count) {
  if (count < 0) throw Error(ErrorCode::InvalidArgument, "scenario count must be nonnegative");
  double load = 0.0;
  for (const Bus& b : net.buses) load += b.load.real();
  const double target = 1.02 * load;
  double pmax_sum = 0.0, pmin_sum = 0.0;
  for (const Generator& g : net.generators) {
    pmax_sum += g.pmax;
    pmin_sum += g.pmin;
  }
  if (pmax_sum < target) throw Error(ErrorCode::InvalidArgument, "generation capacity below 1.02 times the load");

  std::mt19937_64 rng(seed);
  const int ng = net.num_generators();
  std::vector<std::vector<double>> out;
  for (int sc = 0; sc < count; ++sc) {
    std::vector<double> p0(ng);
    for (int g = 0; g < ng; ++g) {
      const Generator& gen = net.generators[g];
      p0[g] = gen.pmin + uniform01(rng) * (gen.pmax - gen.pmin);
    }
    double sum = std::accumulate(p0.begin(), p0.end(), 0.0);
    if (sum < target) {
      // Move every generator the same fraction of its remaining margin.
      double margin = 0.0;
      for (int g = 0; g < ng; ++g) margin += net.generators[g].pmax - p0[g];
      const double f = std::min(1.0, (target - sum) / margin);
      for (int g = 0; g < ng; ++g) p0[g] += f * (net.generators[g].pmax - p0[g]);
    } else if (sum > target && pmin_sum < target) {
      const double f = (target - pmin_sum) / (sum - pmin_sum);
      for (int g = 0; g < ng; ++g) p0[g] = net.generators[g].pmin + f * (p0[g] - net.generators[g].pmin);
    }
    // Random pass over the generators to cover what rounding left over.
    std::vector<int> order(ng);
    std::iota(order.begin(), order.end(), 0);
    for (int i = ng - 1; i > 0; --i) std::swap(order[i], order[rng() % static_cast<std::uint64_t>(i + 1)]);
    sum = std::accumulate(p0.begin(), p0.end(), 0.0);
    for (int g : order) {
      if (sum >= target) break;
      const double add = std::min(target - sum, net.generators[g].pmax - p0[g]);
      if (add > 0.0) {
        p0[g] += add;
        sum = std::accumulate(p0.begin(), p0.end(), 0.0);
      }
    }
    for (int g = 0; g < ng; ++g) p0[g] = std::clamp(p0[g], net.generators[g].pmin, net.generators[g].pmax);
    out.push_back(std::move(p0));
  }
  return out;
}

namespace {

SdpOptions sdp_options(const RunConfig& cfg) {
  SdpOptions so;
  so.k_max = cfg.k_max;
  so.dense = cfg.dense;
  so.ipm.tol = cfg.ipm_tol;
  return so;
}

ResultRow run_single(const RopfProblem& p, const RunConfig& cfg, const std::string& instance) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultRow row;
  row.instance = instance;
  row.num_shunts = p.net.num_shunts();
  if (const MaxKShunts* m = std::get_if<MaxKShunts>(&p.variant)) row.k_label = std::to_string(m->k);
  if (const MaxKMoves* m = std::get_if<MaxKMoves>(&p.variant)) row.k_label = std::to_string(m->k);
  if (const GenMoves* g = std::get_if<GenMoves>(&p.variant)) row.k_label = g->direction == Direction::Up ? "+" : "-";

  SdpBoundOracle oracle(sdp_options(cfg));
  const RelaxationPoint root = oracle.bound(p, {});
  const LocalOptions local;
  const NlpResult heur = three_step(p, {}, local);
  row.ub = heur.upper_bound();
  if (heur.feasible()) row.candidate = heur.candidate;
  if (root.status == RelaxStatus::Optimal) row.lb = root.lower_bound;
  if (root.status == RelaxStatus::Infeasible) row.lb = kInf;
  row.gap = relative_gap(row.ub, row.lb);
  if (cfg.log) {
    *cfg.log << instance << ' ' << row.k_label << " root " << relax_status_name(root.status) << " lb "
             << format_value(row.lb) << " ub " << format_value(row.ub) << '\n';
  }

  if (cfg.run_bnb && root.status == RelaxStatus::Optimal && !is_solved(row.gap)) {
    BnbConfig bc;
    bc.thresholds = cfg.thresholds;
    bc.time_limit_s = cfg.time_limit_s;
    bc.gap_tol = cfg.gap_tol;
    bc.log = cfg.log;
    const BnbResult b = run_bnb(p, root, oracle, bc, &heur);
    row.bnb_run = true;
    row.binvar = b.free_after_fixing;
    row.nodes = b.nodes;
    row.bnb_time_s = b.time_s;
    row.bnb_ub = b.ub;
    row.bnb_gap = relative_gap(b.ub, b.lb);
  }
  if (cfg.run_rounding && root.status == RelaxStatus::Optimal) {
    NlpResult r;
    if (const MaxKShunts* m = std::get_if<MaxKShunts>(&p.variant)) {
      r = rounding_baseline(p, root, m->k, local);
    } else {
      r = solve_fixed(p, round_with_repair(p, root.u), nullptr, local);
    }
    row.rounding_run = true;
    row.rounding_ub = r.upper_bound();
    row.rounding_gap = relative_gap(row.rounding_ub, row.lb);
  }
  row.total_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

double final_ub(const ResultRow& r) { return std::min(r.ub, r.bnb_ub); }

}  // namespace

ResultRow run_problem(const RopfProblem& p, const RunConfig& cfg, const std::string& instance) {
  p.validate();
  const GenMoves* gm = std::get_if<GenMoves>(&p.variant);
  if (!gm || gm->direction != Direction::Both) return run_single(p, cfg, instance);
  std::optional<ResultRow> best;
  for (Direction d : {Direction::Up, Direction::Down}) {
    RopfProblem sub = p;
    std::get<GenMoves>(sub.variant).direction = d;
    ResultRow r = run_single(sub, cfg, instance);
    if (!best || final_ub(r) < final_ub(*best)) best = std::move(r);
  }
  return *best;
}

std::vector<ResultRow> run_experiment(const RunConfig& cfg) {
  cfg.validate();
  std::vector<ResultRow> rows;
  for (const std::string& path : cfg.cases) {
    std::string name = path;
    if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
    if (name.size() > 2 && name.ends_with(".m")) name.resize(name.size() - 2);
    try {
      const Network net = load_network(path, cfg.cost_policy);
      std::vector<RopfProblem> problems;
      switch (cfg.variant) {
        case VariantKind::MaxKShunts: {
          RopfProblem p{net, MaxKShunts{cfg.k}};
          if (cfg.find_min_k) {
            while (!three_step(p).feasible() && std::get<MaxKShunts>(p.variant).k < net.num_shunts()) {
              ++std::get<MaxKShunts>(p.variant).k;
            }
          }
          problems.push_back(std::move(p));
          break;
        }
        case VariantKind::MaxKMoves: {
          MaxKMoves m{cfg.k, {}};
          if (cfg.u0 == U0Source::Initial) {
            m.u0 = initial_shunt_state(net);
          } else {
            for (int s : net.shunt_buses()) m.u0[s] = 0;
          }
          problems.push_back(RopfProblem{net, m});
          break;
        }
        case VariantKind::GenMoves:
          for (auto& p0 : generate_genmoves_scenarios(net, cfg.seed, cfg.scenarios)) {
            problems.push_back(RopfProblem{net, GenMoves{std::move(p0), Direction::Both}});
          }
          break;
      }
      for (const RopfProblem& p : problems) rows.push_back(run_problem(p, cfg, name));
    } catch (const std::exception& e) {
      ResultRow r;
      r.instance = name;
      r.note = e.what();
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::string format_gap(std::optional<double> gap) {
  if (!gap) return "-";
  if (*gap <= kSolvedGap) return "0.00%";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *gap * 100.0);
  if (std::string(buf) == "0.00%") return "0.01%";
  return buf;
}

std::string format_value(double v) {
  if (!std::isfinite(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

namespace {

std::vector<std::string> header(bool with_times) {
  std::vector<std::string> h{"instance", "|S|", "k", "UB", "LB", "gap", "#binvar", "#nodes"};
  if (with_times) h.push_back("time_s");
  for (const char* c : {"bnb_UB", "bnb_gap", "rounding_UB", "rounding_gap", "note"}) h.push_back(c);
  return h;
}

std::vector<std::string> cells(const ResultRow& r, bool with_times) {
  std::vector<std::string> c{r.instance, std::to_string(r.num_shunts), r.k_label, format_value(r.ub),
                             format_value(r.lb), format_gap(r.gap)};
  c.push_back(r.bnb_run ? std::to_string(r.binvar) : "-");
  c.push_back(r.bnb_run ? std::to_string(r.nodes) : "-");
  if (with_times) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", r.bnb_time_s);
    c.push_back(r.bnb_run ? buf : "-");
  }
  c.push_back(r.bnb_run ? format_value(r.bnb_ub) : "-");
  c.push_back(r.bnb_run ? format_gap(r.bnb_gap) : "-");
  c.push_back(r.rounding_run ? format_value(r.rounding_ub) : "-");
  c.push_back(r.rounding_run ? format_gap(r.rounding_gap) : "-");
  c.push_back(r.note);
  return c;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

std::string format_table(const std::vector<ResultRow>& rows) {
  std::vector<std::vector<std::string>> all{header(true)};
  for (const ResultRow& r : rows) all.push_back(cells(r, true));
  std::vector<size_t> width(all[0].size(), 0);
  for (const auto& line : all) {
    for (size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::ostringstream os;
  for (const auto& line : all) {
    std::string text;
    for (size_t i = 0; i < line.size(); ++i) {
      if (i) text += "  ";
      text += line[i] + std::string(width[i] - line[i].size(), ' ');
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    os << text << '\n';
  }
  return os.str();
}

std::string format_csv(const std::vector<ResultRow>& rows, bool with_times) {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& v) {
    for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << csv_field(v[i]);
    os << '\n';
  };
  line(header(with_times));
  for (const ResultRow& r : rows) line(cells(r, with_times));
  return os.str();
}

std::string rows_json(const std::vector<ResultRow>& rows) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json arr = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    nlohmann::json j;
    j["instance"] = r.instance;
    j["num_shunts"] = r.num_shunts;
    j["k"] = r.k_label;
    j["ub"] = num(r.ub);
    j["lb"] = num(r.lb);
    j["gap"] = opt(r.gap);
    j["bnb_run"] = r.bnb_run;
    j["binvar"] = r.binvar;
    j["nodes"] = r.nodes;
    j["bnb_time_s"] = r.bnb_time_s;
    j["bnb_ub"] = num(r.bnb_ub);
    j["bnb_gap"] = opt(r.bnb_gap);
    j["rounding_ub"] = num(r.rounding_ub);
    j["rounding_gap"] = opt(r.rounding_gap);
    j["total_time_s"] = r.total_time_s;
    j["note"] = r.note;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace ropf
