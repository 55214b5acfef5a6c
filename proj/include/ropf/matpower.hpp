// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <string>
#include <vector>

#include "ropf/network.hpp"

namespace ropf {

using Row = std::vector<double>;

/// Tables of a MATPOWER version 2 case exactly as written in the file
/// (MW, MVAr, degrees; no per-unit conversion).
struct RawCase {
  std::string name;
  double base_mva = 0.0;
  std::vector<Row> bus;
  std::vector<Row> gen;
  std::vector<Row> branch;
  std::vector<Row> gencost;
};

// Column positions of the MATPOWER case format.
namespace col {
inline constexpr int kBusId = 0, kBusType = 1, kPd = 2, kQd = 3, kGs = 4, kBs = 5, kVmax = 11,
                     kVmin = 12;
inline constexpr int kGenBus = 0, kPg = 1, kQg = 2, kQmax = 3, kQmin = 4, kVg = 5,
                     kGenStatus = 7, kPmax = 8, kPmin = 9;
inline constexpr int kFbus = 0, kTbus = 1, kBrR = 2, kBrX = 3, kBrB = 4, kRateA = 5,
                     kTap = 8, kShift = 9, kBrStatus = 10;
inline constexpr int kCostModel = 0, kCostN = 3, kCostCoeffs = 4;
}  // namespace col

/// How polynomial cost rows with a nonzero quadratic term are treated.
enum class CostPolicy {
  Reject,         // throw ErrorCode::UnsupportedCost
  DropQuadratic,  // keep the linear and constant coefficients
};

/// Parses the `mpc.*` assignments of a MATPOWER case file. Unknown fields
/// and cell arrays are skipped; comments start with `%`.
RawCase parse_case(std::istream& in, std::string name = {});
RawCase parse_case_text(const std::string& text, std::string name = {});
RawCase read_case_file(const std::string& path);

/// Drops out-of-service generators, then merges generators sharing a bus:
/// power limits are summed and the cost row of the last generator of the
/// group (in file order) is kept. Groups appear in order of first
/// occurrence.
RawCase aggregate_generators(const RawCase& raw);

/// Per-unit conversion into a validated Network. Expects aggregated input.
Network to_network(const RawCase& raw, CostPolicy policy = CostPolicy::Reject);

/// Convenience: read, aggregate and convert.
Network load_network(const std::string& path, CostPolicy policy = CostPolicy::Reject);

}  // namespace ropf
