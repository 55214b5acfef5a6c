// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/matpower.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ropf/error.hpp"

namespace ropf {

int Network::bus_index(int id) const {
  auto it = std::lower_bound(id_to_index_.begin(), id_to_index_.end(), std::make_pair(id, -1));
  if (it == id_to_index_.end() || it->first != id) return -1;
  return it->second;
}

int Network::generator_at(int bus) const {
  if (bus < 0 || bus >= static_cast<int>(gen_at_.size())) return -1;
  return gen_at_[bus];
}

void Network::finalize() {
  const int n = num_buses();
  id_to_index_.clear();
  shunts_.clear();
  gen_at_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    const Bus& b = buses[i];
    if (!(b.vmin <= b.vmax)) {
      throw Error(ErrorCode::InvalidData, "bus " + std::to_string(b.id) + ": vmin > vmax");
    }
    id_to_index_.emplace_back(b.id, i);
    if (b.shunt) shunts_.push_back(i);
  }
  std::sort(id_to_index_.begin(), id_to_index_.end());
  for (size_t i = 1; i < id_to_index_.size(); ++i) {
    if (id_to_index_[i].first == id_to_index_[i - 1].first) {
      throw Error(ErrorCode::InvalidData,
                  "duplicate bus id " + std::to_string(id_to_index_[i].first));
    }
  }
  for (int g = 0; g < num_generators(); ++g) {
    const Generator& gen = generators[g];
    if (gen.bus < 0 || gen.bus >= n) throw Error(ErrorCode::Reference, "generator bus out of range");
    if (!(gen.pmin <= gen.pmax) || !(gen.qmin <= gen.qmax)) {
      throw Error(ErrorCode::InvalidData,
                  "generator at bus " + std::to_string(buses[gen.bus].id) + ": inverted limits");
    }
    if (gen_at_[gen.bus] >= 0) {
      throw Error(ErrorCode::InvalidData,
                  "bus " + std::to_string(buses[gen.bus].id) + " carries two generators");
    }
    gen_at_[gen.bus] = g;
  }
  for (const Branch& br : branches) {
    if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n) {
      throw Error(ErrorCode::Reference, "branch endpoint out of range");
    }
    if (!(br.tau > 0.0)) throw Error(ErrorCode::InvalidData, "branch ratio must be positive");
  }
  if (reference < 0 || reference >= std::max(n, 1)) reference = 0;
}

namespace {

class Scanner {
 public:
  explicit Scanner(std::string text) : s_(std::move(text)) {}

  bool eof() const { return pos_ >= s_.size(); }
  int line() const { return line_; }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  char get() {
    char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_comment() {
    while (!eof() && peek() != '\n') get();
  }

  // Skips blanks and comments, optionally stopping at newlines.
  void skip_space(bool stop_at_newline = false) {
    while (!eof()) {
      char c = peek();
      if (c == '%') {
        skip_comment();
      } else if (c == '\n' && stop_at_newline) {
        return;
      } else if (c == '.' && s_.compare(pos_, 3, "...") == 0) {
        // line continuation
        skip_comment();
        if (!eof()) get();
      } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
        get();
      } else {
        return;
      }
    }
  }

  void skip_line() {
    while (!eof() && peek() != '\n') {
      if (peek() == '%') {
        skip_comment();
        break;
      }
      get();
    }
  }

  std::string ident() {
    std::string out;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        out += get();
      } else {
        break;
      }
    }
    return out;
  }

  std::string quoted() {
    char q = get();
    std::string out;
    while (!eof() && peek() != q) {
      if (peek() == '\n') throw Error(ErrorCode::Syntax, at("unterminated string"));
      out += get();
    }
    if (eof()) throw Error(ErrorCode::Syntax, at("unterminated string"));
    get();
    return out;
  }

  std::string token() {
    std::string out;
    while (!eof()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ';' || c == ']' ||
          c == '%') {
        break;
      }
      out += get();
    }
    return out;
  }

  std::string at(const std::string& msg) const {
    return "line " + std::to_string(line_) + ": " + msg;
  }

  void skip_cell() {
    int depth = 0;
    while (!eof()) {
      char c = peek();
      if (c == '%') {
        skip_comment();
        continue;
      }
      if (c == '\'' || c == '"') {
        quoted();
        continue;
      }
      get();
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) return;
    }
    throw Error(ErrorCode::Syntax, at("unterminated cell array"));
  }

 private:
  std::string s_;
  size_t pos_ = 0;
  int line_ = 1;
};

double parse_number(const std::string& tok, const Scanner& sc) {
  std::string t = tok;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "inf" || t == "+inf") return kInf;
  if (t == "-inf") return -kInf;
  if (t == "nan") return std::nan("");
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != tok.size()) {
    throw Error(ErrorCode::Syntax, sc.at("invalid number '" + tok + "'"));
  }
  return v;
}

std::vector<Row> parse_matrix(Scanner& sc, const std::string& field) {
  const int start_line = sc.line();
  sc.get();  // '['
  std::vector<Row> rows;
  Row cur;
  auto flush = [&] {
    if (!cur.empty()) rows.push_back(std::move(cur));
    cur.clear();
  };
  while (true) {
    sc.skip_space(true);
    if (sc.eof()) {
      throw Error(ErrorCode::Syntax, "line " + std::to_string(start_line) + ": unterminated matrix '" +
                                         field + "'");
    }
    char c = sc.peek();
    if (c == ']') {
      sc.get();
      flush();
      break;
    }
    if (c == ';' || c == '\n') {
      sc.get();
      flush();
      continue;
    }
    std::string tok = sc.token();
    if (tok.empty()) throw Error(ErrorCode::Syntax, sc.at(std::string("unexpected '") + c + "'"));
    cur.push_back(parse_number(tok, sc));
  }
  for (const Row& r : rows) {
    if (r.size() != rows.front().size()) {
      throw Error(ErrorCode::Syntax,
                  "line " + std::to_string(start_line) + ": ragged rows in '" + field + "'");
    }
  }
  return rows;
}

void require_width(const std::vector<Row>& rows, size_t width, const std::string& field) {
  if (!rows.empty() && rows.front().size() < width) {
    throw Error(ErrorCode::Syntax, "table '" + field + "' needs at least " +
                                       std::to_string(width) + " columns");
  }
}

}  // namespace

RawCase parse_case(std::istream& in, std::string name) {
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_case_text(buf.str(), std::move(name));
}

RawCase parse_case_text(const std::string& text, std::string name) {
  Scanner sc(text);
  RawCase raw;
  raw.name = std::move(name);
  std::string version;
  bool have_base = false, have_bus = false, have_gen = false, have_branch = false;

  while (true) {
    sc.skip_space();
    if (sc.eof()) break;
    char c = sc.peek();
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) {
      throw Error(ErrorCode::Syntax, sc.at(std::string("unexpected '") + c + "'"));
    }
    std::string id = sc.ident();
    if (id.rfind("mpc.", 0) != 0) {
      // function header, return, end, or other statements
      sc.skip_line();
      continue;
    }
    std::string field = id.substr(4);
    sc.skip_space(true);
    if (sc.peek() != '=') throw Error(ErrorCode::Syntax, sc.at("expected '=' after " + id));
    sc.get();
    sc.skip_space(true);
    char v = sc.peek();
    if (v == '[') {
      auto rows = parse_matrix(sc, field);
      if (field == "bus") {
        raw.bus = std::move(rows);
        have_bus = true;
      } else if (field == "gen") {
        raw.gen = std::move(rows);
        have_gen = true;
      } else if (field == "branch") {
        raw.branch = std::move(rows);
        have_branch = true;
      } else if (field == "gencost") {
        raw.gencost = std::move(rows);
      }
    } else if (v == '{') {
      sc.skip_cell();
    } else if (v == '\'' || v == '"') {
      std::string s = sc.quoted();
      if (field == "version") version = s;
    } else {
      std::string tok = sc.token();
      if (tok.empty()) throw Error(ErrorCode::Syntax, sc.at("missing value for " + id));
      double num = parse_number(tok, sc);
      if (field == "baseMVA") {
        raw.base_mva = num;
        have_base = true;
      } else if (field == "version") {
        version = tok;
      }
    }
    sc.skip_space(true);
    if (sc.peek() == ';') sc.get();
  }

  if (version.empty()) throw Error(ErrorCode::UnsupportedVersion, "missing case version");
  if (version != "2") throw Error(ErrorCode::UnsupportedVersion, "unsupported case version " + version);
  if (!have_base) throw Error(ErrorCode::MissingTable, "missing baseMVA");
  if (!(raw.base_mva > 0.0)) throw Error(ErrorCode::InvalidData, "baseMVA must be positive");
  if (!have_bus || raw.bus.empty()) throw Error(ErrorCode::MissingTable, "missing bus");
  if (!have_gen) throw Error(ErrorCode::MissingTable, "missing gen");
  if (!have_branch) throw Error(ErrorCode::MissingTable, "missing branch");
  if (raw.gencost.empty()) throw Error(ErrorCode::MissingTable, "missing gencost");
  require_width(raw.bus, 13, "bus");
  require_width(raw.gen, 10, "gen");
  require_width(raw.branch, 11, "branch");
  require_width(raw.gencost, 4, "gencost");
  if (raw.gencost.size() < raw.gen.size()) {
    throw Error(ErrorCode::MissingTable, "gencost has fewer rows than gen");
  }

  std::unordered_set<int> ids;
  for (const Row& r : raw.bus) ids.insert(static_cast<int>(r[col::kBusId]));
  for (const Row& r : raw.gen) {
    int b = static_cast<int>(r[col::kGenBus]);
    if (!ids.count(b)) {
      throw Error(ErrorCode::Reference, "generator references unknown bus " + std::to_string(b));
    }
  }
  for (const Row& r : raw.branch) {
    for (int k : {col::kFbus, col::kTbus}) {
      int b = static_cast<int>(r[k]);
      if (!ids.count(b)) {
        throw Error(ErrorCode::Reference, "branch references unknown bus " + std::to_string(b));
      }
    }
  }
  return raw;
}

RawCase read_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string name = path;
  auto slash = name.find_last_of("/\\");
  if (slash != std::string::npos) name = name.substr(slash + 1);
  if (name.size() > 2 && name.substr(name.size() - 2) == ".m") name.resize(name.size() - 2);
  return parse_case(in, name);
}

RawCase aggregate_generators(const RawCase& raw) {
  RawCase out = raw;
  out.gen.clear();
  out.gencost.clear();
  std::vector<int> order;
  std::unordered_map<int, size_t> slot;
  for (size_t i = 0; i < raw.gen.size(); ++i) {
    const Row& g = raw.gen[i];
    if (g[col::kGenStatus] <= 0.0) continue;
    int bus = static_cast<int>(g[col::kGenBus]);
    auto it = slot.find(bus);
    if (it == slot.end()) {
      slot.emplace(bus, out.gen.size());
      out.gen.push_back(g);
      out.gencost.push_back(raw.gencost[i]);
      continue;
    }
    Row& acc = out.gen[it->second];
    for (int k : {col::kPg, col::kQg, col::kQmax, col::kQmin, col::kPmax, col::kPmin}) acc[k] += g[k];
    acc[col::kVg] = g[col::kVg];
    out.gencost[it->second] = raw.gencost[i];
  }
  return out;
}

namespace {

struct Poly {
  double linear = 0.0;
  double constant = 0.0;
};

Poly cost_of(const Row& row, CostPolicy policy, int bus_id) {
  const std::string where = "generator at bus " + std::to_string(bus_id);
  if (static_cast<int>(row[col::kCostModel]) != 2) {
    throw Error(ErrorCode::UnsupportedCost, where + ": piecewise linear cost unsupported");
  }
  const int n = static_cast<int>(row[col::kCostN]);
  if (n < 0 || static_cast<int>(row.size()) < col::kCostCoeffs + n) {
    throw Error(ErrorCode::Syntax, where + ": short gencost row");
  }
  Poly p;
  for (int k = 0; k < n; ++k) {
    const int order = n - 1 - k;
    const double coef = row[col::kCostCoeffs + k];
    if (order == 0) {
      p.constant = coef;
    } else if (order == 1) {
      p.linear = coef;
    } else if (coef != 0.0 && !(order == 2 && policy == CostPolicy::DropQuadratic)) {
      throw Error(ErrorCode::UnsupportedCost, where + ": nonlinear cost unsupported");
    }
  }
  return p;
}

}  // namespace

Network to_network(const RawCase& raw, CostPolicy policy) {
  Network net;
  net.name = raw.name;
  net.base_mva = raw.base_mva;
  const double base = raw.base_mva;
  int reference = -1;
  for (const Row& r : raw.bus) {
    Bus b;
    b.id = static_cast<int>(r[col::kBusId]);
    b.type = static_cast<int>(r[col::kBusType]);
    if (b.type == 4) {
      throw Error(ErrorCode::InvalidData, "bus " + std::to_string(b.id) + " is isolated");
    }
    b.load = Complex(r[col::kPd], r[col::kQd]) / base;
    b.vmin = r[col::kVmin];
    b.vmax = r[col::kVmax];
    if (r[col::kGs] != 0.0 || r[col::kBs] != 0.0) b.shunt = Shunt{r[col::kGs] / base, r[col::kBs] / base};
    if (b.type == 3 && reference < 0) reference = static_cast<int>(net.buses.size());
    net.buses.push_back(b);
  }
  net.finalize();  // builds the id lookup used below

  std::unordered_set<int> seen;
  for (size_t i = 0; i < raw.gen.size(); ++i) {
    const Row& r = raw.gen[i];
    if (r[col::kGenStatus] <= 0.0) continue;
    const int id = static_cast<int>(r[col::kGenBus]);
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::InvalidData,
                  "bus " + std::to_string(id) + " has several generators; aggregate first");
    }
    Generator g;
    g.bus = net.bus_index(id);
    g.pmin = r[col::kPmin] / base;
    g.pmax = r[col::kPmax] / base;
    g.qmin = r[col::kQmin] / base;
    g.qmax = r[col::kQmax] / base;
    Poly p = cost_of(raw.gencost.at(i), policy, id);
    g.cost = p.linear * base;
    g.const_cost = p.constant;
    net.generators.push_back(g);
  }

  for (const Row& r : raw.branch) {
    if (r[col::kBrStatus] <= 0.0) continue;
    Branch br;
    br.from = net.bus_index(static_cast<int>(r[col::kFbus]));
    br.to = net.bus_index(static_cast<int>(r[col::kTbus]));
    const Complex z(r[col::kBrR], r[col::kBrX]);
    if (!(std::abs(z) > 0.0)) {
      throw Error(ErrorCode::InvalidData, "branch " + std::to_string(static_cast<int>(r[col::kFbus])) +
                                              "-" + std::to_string(static_cast<int>(r[col::kTbus])) +
                                              " has zero impedance");
    }
    br.y = 1.0 / z;
    br.charging = r[col::kBrB] / 2.0;
    br.tau = r[col::kTap] == 0.0 ? 1.0 : r[col::kTap];
    // MATPOWER's shift angle enters the from-end power with the opposite sign.
    br.theta = -r[col::kShift] * std::numbers::pi / 180.0;
    br.imax = r[col::kRateA] > 0.0 ? r[col::kRateA] / base : kInf;
    net.branches.push_back(br);
  }

  if (reference < 0) reference = net.generators.empty() ? 0 : net.generators.front().bus;
  net.reference = reference;
  net.finalize();
  return net;
}

Network load_network(const std::string& path, CostPolicy policy) {
  return to_network(aggregate_generators(read_case_file(path)), policy);
}

}  // namespace ropf
