/* Copyright 2026 The ropf Authors
 * SPDX-License-Identifier: Apache-2.0
 */

/* C interface of the ropf solver library. All objects are opaque handles
 * owned by the caller and released with the matching *_free function.
 * Every fallible call returns a ropf_status; on failure ropf_last_error()
 * describes the problem (thread-local, valid until the next call on the
 * same thread). */

#ifndef ROPF_H_
#define ROPF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ROPF_BUILDING_LIBRARY)
#define ROPF_API __attribute__((visibility("default")))
#else
#define ROPF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ropf_status {
  ROPF_OK = 0,
  ROPF_ERR_SYNTAX = 1,
  ROPF_ERR_UNSUPPORTED_VERSION = 2,
  ROPF_ERR_MISSING_TABLE = 3,
  ROPF_ERR_REFERENCE = 4,
  ROPF_ERR_INVALID_DATA = 5,
  ROPF_ERR_UNSUPPORTED_COST = 6,
  ROPF_ERR_INVALID_ARGUMENT = 7,
  ROPF_ERR_INFEASIBLE = 8,
  ROPF_ERR_NUMERICAL = 9,
  ROPF_ERR_IO = 10,
  ROPF_ERR_NULL_POINTER = 11,
  ROPF_ERR_INTERNAL = 12
} ropf_status;

typedef enum ropf_variant {
  ROPF_MAXKSHUNTS = 0,
  ROPF_MAXKMOVES = 1,
  ROPF_GENMOVES = 2
} ropf_variant;

typedef enum ropf_direction { ROPF_DOWN = 0, ROPF_UP = 1, ROPF_BOTH = 2 } ropf_direction;

typedef enum ropf_fixing_mode {
  ROPF_FIXING_VARIANT = 0, /* per-variant default thresholds */
  ROPF_FIXING_NONE = 1,    /* no initial fixing */
  ROPF_FIXING_CUSTOM = 2   /* u* <= fix_lower -> 0, u* >= fix_upper -> 1 */
} ropf_fixing_mode;

typedef enum ropf_relax_status {
  ROPF_RELAX_OPTIMAL = 0,
  ROPF_RELAX_INFEASIBLE = 1,
  ROPF_RELAX_NUMERICAL_FAILURE = 2
} ropf_relax_status;

typedef struct ropf_network ropf_network;
typedef struct ropf_problem ropf_problem;
typedef struct ropf_report ropf_report;

typedef struct ropf_options {
  double ipm_tol;
  int k_max;
  int dense;
  double time_limit_s;
  double gap_tol;
  int fixing_mode; /* ropf_fixing_mode */
  double fix_lower;
  double fix_upper;
  int run_bnb;
  int run_rounding;
  int verbose; /* progress lines on stderr */
} ropf_options;

/* One result row. Infinite values are IEEE infinities; *_defined flags
 * tell whether the matching gap exists. */
typedef struct ropf_summary {
  double ub;
  double lb;
  double gap;
  int gap_defined;
  int num_shunts;
  char k_label[16];
  int bnb_run;
  int binvar;
  long nodes;
  double bnb_time_s;
  double bnb_ub;
  double bnb_gap;
  int bnb_gap_defined;
  int rounding_run;
  double rounding_ub;
  double rounding_gap;
  int rounding_gap_defined;
  double total_time_s;
  int failed; /* the row carries an error note */
} ropf_summary;

typedef struct ropf_bench_config {
  const char* const* cases;
  int num_cases;
  int variant; /* ropf_variant */
  int k;
  int u0_zero; /* MAXkmoves: u0 = 0 instead of the rounded relaxation */
  uint64_t seed;
  int scenarios;
  int find_min_k;
  int keep_quadratic_cost; /* reject cases with quadratic cost terms */
  ropf_options options;
} ropf_bench_config;

ROPF_API const char* ropf_version(void);
ROPF_API const char* ropf_last_error(void);
ROPF_API const char* ropf_status_string(ropf_status s);
ROPF_API void ropf_options_default(ropf_options* opts);
ROPF_API void ropf_bench_config_default(ropf_bench_config* cfg);

/* Networks. drop_quadratic != 0 keeps only linear and constant cost terms. */
ROPF_API ropf_status ropf_network_load(const char* path, int drop_quadratic, ropf_network** out);
ROPF_API ropf_status ropf_network_parse(const char* text, int drop_quadratic, ropf_network** out);
ROPF_API void ropf_network_free(ropf_network* net);
ROPF_API int ropf_network_num_buses(const ropf_network* net);
ROPF_API int ropf_network_num_generators(const ropf_network* net);
ROPF_API int ropf_network_num_branches(const ropf_network* net);
ROPF_API int ropf_network_num_shunts(const ropf_network* net);
/* External id of the i-th shunt bus (shunts in file order). */
ROPF_API ropf_status ropf_network_shunt_id(const ropf_network* net, int i, int* id);
/* Clique decomposition of the lifted pattern as JSON lines; release the
 * string with ropf_string_free. */
ROPF_API ropf_status ropf_network_cliques(const ropf_network* net, int k_max, char** jsonl);
ROPF_API void ropf_string_free(char* s);

/* Initial shunt state (one 0/1 per shunt) and GENmoves plans
 * (count × num_generators, row-major). */
ROPF_API ropf_status ropf_initial_shunt_state(const ropf_network* net, int* u0);
ROPF_API ropf_status ropf_genmoves_scenarios(const ropf_network* net, uint64_t seed, int count, double* p0);

/* Problems copy the network. */
ROPF_API ropf_status ropf_problem_maxkshunts(const ropf_network* net, int k, ropf_problem** out);
ROPF_API ropf_status ropf_problem_maxkmoves(const ropf_network* net, int k, const int* u0, ropf_problem** out);
ROPF_API ropf_status ropf_problem_genmoves(const ropf_network* net, const double* p0, int direction,
                                           ropf_problem** out);
ROPF_API void ropf_problem_free(ropf_problem* p);

/* Root relaxation bound; u (nullable) receives one relaxed value per shunt. */
ROPF_API ropf_status ropf_root_bound(const ropf_problem* p, const ropf_options* opts, int* status, double* lb,
                                     double* u);
/* Three-step heuristic; *ub is +inf when no feasible point was found. */
ROPF_API ropf_status ropf_three_step(const ropf_problem* p, double* ub);
/* Local solve with every shunt fixed (u: one 0/1 per shunt). */
ROPF_API ropf_status ropf_solve_fixed(const ropf_problem* p, const int* u, double* ub);
/* Full pipeline on one problem. */
ROPF_API ropf_status ropf_solve(const ropf_problem* p, const ropf_options* opts, ropf_summary* out);

/* Batch runs. */
ROPF_API ropf_status ropf_bench(const ropf_bench_config* cfg, ropf_report** out);
ROPF_API size_t ropf_report_rows(const ropf_report* r);
ROPF_API ropf_status ropf_report_row(const ropf_report* r, size_t i, ropf_summary* out);
/* Views owned by the report. */
ROPF_API const char* ropf_report_table(const ropf_report* r);
ROPF_API const char* ropf_report_csv(const ropf_report* r, int with_times);
ROPF_API const char* ropf_report_json(const ropf_report* r);
ROPF_API void ropf_report_free(ropf_report* r);

#ifdef __cplusplus
}
#endif

#endif /* ROPF_H_ */
