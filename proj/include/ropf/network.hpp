// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ropf {

using Complex = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Shunt {
  double g = 0.0;  // conductance, p.u.
  double b = 0.0;  // susceptance, p.u.
};

struct Bus {
  int id = 0;            // external id as in the case file
  int type = 1;          // MATPOWER bus type (1 PQ, 2 PV, 3 ref)
  Complex load;          // p.u.
  double vmin = 0.0;
  double vmax = 0.0;
  std::optional<Shunt> shunt;
};

struct Generator {
  int bus = 0;  // internal bus index
  double pmin = 0.0, pmax = 0.0, qmin = 0.0, qmax = 0.0;  // p.u.
  double cost = 0.0;        // linear cost per p.u. of active power
  double const_cost = 0.0;  // constant cost
};

struct Branch {
  int from = 0;  // internal bus indices
  int to = 0;
  Complex y;              // series admittance
  double charging = 0.0;  // half of the total line charging susceptance
  double tau = 1.0;       // off-nominal ratio
  double theta = 0.0;     // phase shift, radians
  double imax = kInf;     // current magnitude limit, p.u.
};

/// A validated transmission network in per-unit. Buses are stored in file
/// order; every other record refers to buses by their position in `buses`.
class Network {
 public:
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  int reference = 0;  // internal index of the angle reference bus

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_generators() const { return static_cast<int>(generators.size()); }
  int num_branches() const { return static_cast<int>(branches.size()); }

  /// Internal index of external bus `id`, or -1.
  int bus_index(int id) const;
  /// Generator index located at internal bus `bus`, or -1.
  int generator_at(int bus) const;
  /// Internal indices of buses carrying a shunt, ascending.
  const std::vector<int>& shunt_buses() const { return shunts_; }
  int num_shunts() const { return static_cast<int>(shunts_.size()); }

  /// Rebuilds lookup tables and checks the structural invariants. Must be
  /// called after editing the public vectors.
  void finalize();

 private:
  std::vector<int> gen_at_;
  std::vector<int> shunts_;
  std::vector<std::pair<int, int>> id_to_index_;
};

}  // namespace ropf
