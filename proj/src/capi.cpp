// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/ropf.h"

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <limits>
#include <memory>
#include <string>

#include "ropf/acopf_local.hpp"
#include "ropf/chordal.hpp"
#include "ropf/error.hpp"
#include "ropf/experiment.hpp"
#include "ropf/matpower.hpp"

struct ropf_network {
  ropf::Network net;
};

struct ropf_problem {
  ropf::RopfProblem p;
};

struct ropf_report {
  std::vector<ropf::ResultRow> rows;
  std::string table, csv, csv_times, json;
};

namespace {

thread_local std::string g_last_error;

ropf_status fail(ropf_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

template <class F>
ropf_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return ROPF_OK;
  } catch (const ropf::Error& e) {
    return fail(static_cast<ropf_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ROPF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ROPF_ERR_INTERNAL, e.what());
  }
}

#define ROPF_REQUIRE(ptr)                                              \
  do {                                                                 \
    if (!(ptr)) return fail(ROPF_ERR_NULL_POINTER, #ptr " is null");   \
  } while (0)

ropf::RunConfig run_config(const ropf_options& o) {
  ropf::RunConfig cfg;
  cfg.ipm_tol = o.ipm_tol;
  cfg.k_max = o.k_max;
  cfg.dense = o.dense != 0;
  cfg.time_limit_s = o.time_limit_s;
  cfg.gap_tol = o.gap_tol;
  cfg.run_bnb = o.run_bnb != 0;
  cfg.run_rounding = o.run_rounding != 0;
  cfg.log = o.verbose ? &std::cerr : nullptr;
  switch (o.fixing_mode) {
    case ROPF_FIXING_VARIANT: break;
    case ROPF_FIXING_NONE: cfg.thresholds = ropf::Thresholds::none(); break;
    case ROPF_FIXING_CUSTOM: {
      ropf::Thresholds t;
      t.lower = o.fix_lower;
      t.upper = o.fix_upper;
      cfg.thresholds = t;
      break;
    }
    default: throw ropf::Error(ropf::ErrorCode::InvalidArgument, "unknown fixing mode");
  }
  return cfg;
}

void fill_summary(const ropf::ResultRow& r, ropf_summary* out) {
  std::memset(out, 0, sizeof *out);
  out->ub = r.ub;
  out->lb = r.lb;
  out->gap_defined = r.gap.has_value();
  out->gap = r.gap.value_or(0.0);
  out->num_shunts = r.num_shunts;
  std::strncpy(out->k_label, r.k_label.c_str(), sizeof out->k_label - 1);
  out->bnb_run = r.bnb_run;
  out->binvar = r.binvar;
  out->nodes = r.nodes;
  out->bnb_time_s = r.bnb_time_s;
  out->bnb_ub = r.bnb_ub;
  out->bnb_gap_defined = r.bnb_gap.has_value();
  out->bnb_gap = r.bnb_gap.value_or(0.0);
  out->rounding_run = r.rounding_run;
  out->rounding_ub = r.rounding_ub;
  out->rounding_gap_defined = r.rounding_gap.has_value();
  out->rounding_gap = r.rounding_gap.value_or(0.0);
  out->total_time_s = r.total_time_s;
  out->failed = !r.note.empty();
}

ropf::Fixings full_fixing(const ropf::Network& net, const int* u) {
  ropf::Fixings f;
  const auto& s = net.shunt_buses();
  for (size_t i = 0; i < s.size(); ++i) f.u[s[i]] = u[i];
  return f;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* ropf_version(void) { return "0.1.0"; }

const char* ropf_last_error(void) { return g_last_error.c_str(); }

const char* ropf_status_string(ropf_status s) {
  switch (s) {
    case ROPF_OK: return "ok";
    case ROPF_ERR_SYNTAX: return "syntax error";
    case ROPF_ERR_UNSUPPORTED_VERSION: return "unsupported case version";
    case ROPF_ERR_MISSING_TABLE: return "missing table";
    case ROPF_ERR_REFERENCE: return "dangling reference";
    case ROPF_ERR_INVALID_DATA: return "invalid data";
    case ROPF_ERR_UNSUPPORTED_COST: return "unsupported cost";
    case ROPF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ROPF_ERR_INFEASIBLE: return "infeasible";
    case ROPF_ERR_NUMERICAL: return "numerical failure";
    case ROPF_ERR_IO: return "i/o error";
    case ROPF_ERR_NULL_POINTER: return "null pointer";
    case ROPF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ropf_options_default(ropf_options* o) {
  if (!o) return;
  const ropf::RunConfig d;
  o->ipm_tol = d.ipm_tol;
  o->k_max = d.k_max;
  o->dense = 0;
  o->time_limit_s = d.time_limit_s;
  o->gap_tol = d.gap_tol;
  o->fixing_mode = ROPF_FIXING_VARIANT;
  o->fix_lower = 0.0;
  o->fix_upper = 1.0;
  o->run_bnb = 1;
  o->run_rounding = 1;
  o->verbose = 0;
}

void ropf_bench_config_default(ropf_bench_config* c) {
  if (!c) return;
  c->cases = nullptr;
  c->num_cases = 0;
  c->variant = ROPF_MAXKSHUNTS;
  c->k = 4;
  c->u0_zero = 0;
  c->seed = 42;
  c->scenarios = 5;
  c->find_min_k = 0;
  c->keep_quadratic_cost = 0;
  ropf_options_default(&c->options);
}

ropf_status ropf_network_load(const char* path, int drop_quadratic, ropf_network** out) {
  ROPF_REQUIRE(path);
  ROPF_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    const auto policy = drop_quadratic ? ropf::CostPolicy::DropQuadratic : ropf::CostPolicy::Reject;
    *out = new ropf_network{ropf::load_network(path, policy)};
  });
}

ropf_status ropf_network_parse(const char* text, int drop_quadratic, ropf_network** out) {
  ROPF_REQUIRE(text);
  ROPF_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    const auto policy = drop_quadratic ? ropf::CostPolicy::DropQuadratic : ropf::CostPolicy::Reject;
    const ropf::RawCase raw = ropf::aggregate_generators(ropf::parse_case_text(text));
    *out = new ropf_network{ropf::to_network(raw, policy)};
  });
}

void ropf_network_free(ropf_network* net) { delete net; }

int ropf_network_num_buses(const ropf_network* net) { return net ? net->net.num_buses() : -1; }
int ropf_network_num_generators(const ropf_network* net) { return net ? net->net.num_generators() : -1; }
int ropf_network_num_branches(const ropf_network* net) { return net ? net->net.num_branches() : -1; }
int ropf_network_num_shunts(const ropf_network* net) { return net ? net->net.num_shunts() : -1; }

ropf_status ropf_network_shunt_id(const ropf_network* net, int i, int* id) {
  ROPF_REQUIRE(net);
  ROPF_REQUIRE(id);
  if (i < 0 || i >= net->net.num_shunts()) return fail(ROPF_ERR_INVALID_ARGUMENT, "shunt index out of range");
  *id = net->net.buses[net->net.shunt_buses()[i]].id;
  return ROPF_OK;
}

ropf_status ropf_network_cliques(const ropf_network* net, int k_max, char** jsonl) {
  ROPF_REQUIRE(net);
  ROPF_REQUIRE(jsonl);
  *jsonl = nullptr;
  return guard([&] {
    ropf::SdpOptions o;
    o.k_max = k_max;
    *jsonl = dup_string(ropf::cliques_jsonl(ropf::lifted_decomposition(net->net, o)));
  });
}

void ropf_string_free(char* s) { std::free(s); }

ropf_status ropf_initial_shunt_state(const ropf_network* net, int* u0) {
  ROPF_REQUIRE(net);
  ROPF_REQUIRE(u0);
  return guard([&] {
    const auto st = ropf::initial_shunt_state(net->net);
    const auto& s = net->net.shunt_buses();
    for (size_t i = 0; i < s.size(); ++i) u0[i] = st.at(s[i]);
  });
}

ropf_status ropf_genmoves_scenarios(const ropf_network* net, uint64_t seed, int count, double* p0) {
  ROPF_REQUIRE(net);
  ROPF_REQUIRE(p0);
  return guard([&] {
    const auto plans = ropf::generate_genmoves_scenarios(net->net, seed, count);
    size_t k = 0;
    for (const auto& plan : plans) {
      for (double v : plan) p0[k++] = v;
    }
  });
}

ropf_status ropf_problem_maxkshunts(const ropf_network* net, int k, ropf_problem** out) {
  ROPF_REQUIRE(net);
  ROPF_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    ropf::RopfProblem p{net->net, ropf::MaxKShunts{k}};
    p.validate();
    *out = new ropf_problem{std::move(p)};
  });
}

ropf_status ropf_problem_maxkmoves(const ropf_network* net, int k, const int* u0, ropf_problem** out) {
  ROPF_REQUIRE(net);
  ROPF_REQUIRE(out);
  *out = nullptr;
  if (net->net.num_shunts() > 0) ROPF_REQUIRE(u0);
  return guard([&] {
    ropf::MaxKMoves m{k, {}};
    const auto& s = net->net.shunt_buses();
    for (size_t i = 0; i < s.size(); ++i) m.u0[s[i]] = u0[i];
    ropf::RopfProblem p{net->net, m};
    p.validate();
    *out = new ropf_problem{std::move(p)};
  });
}

ropf_status ropf_problem_genmoves(const ropf_network* net, const double* p0, int direction, ropf_problem** out) {
  ROPF_REQUIRE(net);
  ROPF_REQUIRE(p0);
  ROPF_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    ropf::GenMoves g;
    g.p0.assign(p0, p0 + net->net.num_generators());
    switch (direction) {
      case ROPF_DOWN: g.direction = ropf::Direction::Down; break;
      case ROPF_UP: g.direction = ropf::Direction::Up; break;
      case ROPF_BOTH: g.direction = ropf::Direction::Both; break;
      default: throw ropf::Error(ropf::ErrorCode::InvalidArgument, "unknown direction");
    }
    ropf::RopfProblem p{net->net, std::move(g)};
    p.validate();
    *out = new ropf_problem{std::move(p)};
  });
}

void ropf_problem_free(ropf_problem* p) { delete p; }

ropf_status ropf_root_bound(const ropf_problem* p, const ropf_options* opts, int* status, double* lb, double* u) {
  ROPF_REQUIRE(p);
  ROPF_REQUIRE(lb);
  return guard([&] {
    ropf_options o;
    ropf_options_default(&o);
    if (opts) o = *opts;
    ropf::SdpOptions so;
    so.ipm.tol = o.ipm_tol;
    so.k_max = o.k_max;
    so.dense = o.dense != 0;
    ropf::RopfProblem prob = p->p;
    if (auto* g = std::get_if<ropf::GenMoves>(&prob.variant); g && g->direction == ropf::Direction::Both) {
      throw ropf::Error(ropf::ErrorCode::InvalidArgument, "root bound needs a single GENmoves direction");
    }
    ropf::SdpBoundOracle oracle(so);
    const ropf::RelaxationPoint rp = oracle.bound(prob, {});
    if (status) *status = static_cast<int>(rp.status);
    *lb = rp.lower_bound;
    if (u) {
      const auto& s = prob.net.shunt_buses();
      for (size_t i = 0; i < s.size(); ++i) {
        auto it = rp.u.find(s[i]);
        u[i] = it == rp.u.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
      }
    }
  });
}

ropf_status ropf_three_step(const ropf_problem* p, double* ub) {
  ROPF_REQUIRE(p);
  ROPF_REQUIRE(ub);
  return guard([&] { *ub = ropf::three_step(p->p).upper_bound(); });
}

ropf_status ropf_solve_fixed(const ropf_problem* p, const int* u, double* ub) {
  ROPF_REQUIRE(p);
  ROPF_REQUIRE(ub);
  if (p->p.net.num_shunts() > 0) ROPF_REQUIRE(u);
  return guard([&] { *ub = ropf::solve_fixed(p->p, full_fixing(p->p.net, u)).upper_bound(); });
}

ropf_status ropf_solve(const ropf_problem* p, const ropf_options* opts, ropf_summary* out) {
  ROPF_REQUIRE(p);
  ROPF_REQUIRE(out);
  return guard([&] {
    ropf_options o;
    ropf_options_default(&o);
    if (opts) o = *opts;
    const ropf::RunConfig cfg = run_config(o);
    cfg.validate();
    fill_summary(ropf::run_problem(p->p, cfg, p->p.net.name), out);
  });
}

ropf_status ropf_bench(const ropf_bench_config* c, ropf_report** out) {
  ROPF_REQUIRE(c);
  ROPF_REQUIRE(out);
  *out = nullptr;
  if (c->num_cases > 0) ROPF_REQUIRE(c->cases);
  return guard([&] {
    ropf::RunConfig cfg = run_config(c->options);
    for (int i = 0; i < c->num_cases; ++i) {
      if (!c->cases[i]) throw ropf::Error(ropf::ErrorCode::InvalidArgument, "case path is null");
      cfg.cases.emplace_back(c->cases[i]);
    }
    switch (c->variant) {
      case ROPF_MAXKSHUNTS: cfg.variant = ropf::VariantKind::MaxKShunts; break;
      case ROPF_MAXKMOVES: cfg.variant = ropf::VariantKind::MaxKMoves; break;
      case ROPF_GENMOVES: cfg.variant = ropf::VariantKind::GenMoves; break;
      default: throw ropf::Error(ropf::ErrorCode::InvalidArgument, "unknown variant");
    }
    cfg.k = c->k;
    cfg.u0 = c->u0_zero ? ropf::U0Source::Zero : ropf::U0Source::Initial;
    cfg.seed = c->seed;
    cfg.scenarios = c->scenarios;
    cfg.find_min_k = c->find_min_k != 0;
    cfg.cost_policy = c->keep_quadratic_cost ? ropf::CostPolicy::Reject : ropf::CostPolicy::DropQuadratic;
    auto rep = std::make_unique<ropf_report>();
    rep->rows = ropf::run_experiment(cfg);
    rep->table = ropf::format_table(rep->rows);
    rep->csv = ropf::format_csv(rep->rows, false);
    rep->csv_times = ropf::format_csv(rep->rows, true);
    rep->json = ropf::rows_json(rep->rows);
    *out = rep.release();
  });
}

size_t ropf_report_rows(const ropf_report* r) { return r ? r->rows.size() : 0; }

ropf_status ropf_report_row(const ropf_report* r, size_t i, ropf_summary* out) {
  ROPF_REQUIRE(r);
  ROPF_REQUIRE(out);
  if (i >= r->rows.size()) return fail(ROPF_ERR_INVALID_ARGUMENT, "row index out of range");
  fill_summary(r->rows[i], out);
  return ROPF_OK;
}

const char* ropf_report_table(const ropf_report* r) { return r ? r->table.c_str() : ""; }
const char* ropf_report_csv(const ropf_report* r, int with_times) {
  return r ? (with_times ? r->csv_times.c_str() : r->csv.c_str()) : "";
}
const char* ropf_report_json(const ropf_report* r) { return r ? r->json.c_str() : ""; }

void ropf_report_free(ropf_report* r) { delete r; }

}  // extern "C"
