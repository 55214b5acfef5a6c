// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/quadratic.hpp"

#include <algorithm>
#include <tuple>

#include "ropf/network_model.hpp"

namespace ropf {

void QuadForm::add(int p, int q, double coef) {
  if (coef == 0.0) return;
  if (p > q) std::swap(p, q);
  terms.push_back({p, q, coef});
}

void QuadForm::add_product(QuadForm& re, QuadForm& im, Complex alpha, int a, int b) {
  const double ar = alpha.real(), ai = alpha.imag();
  const int ea = re_coord(a), fa = im_coord(a), eb = re_coord(b), fb = im_coord(b);
  // v_a·conj(v_b) = (ea·eb + fa·fb) + j(fa·eb − ea·fb)
  re.add(ea, eb, ar);
  re.add(fa, fb, ar);
  re.add(fa, eb, -ai);
  re.add(ea, fb, ai);
  im.add(fa, eb, ar);
  im.add(ea, fb, -ar);
  im.add(ea, eb, ai);
  im.add(fa, fb, ai);
}

void QuadForm::compress() {
  std::sort(terms.begin(), terms.end(),
            [](const QuadTerm& l, const QuadTerm& r) { return std::tie(l.p, l.q) < std::tie(r.p, r.q); });
  std::vector<QuadTerm> out;
  for (const QuadTerm& t : terms) {
    if (!out.empty() && out.back().p == t.p && out.back().q == t.q) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [](const QuadTerm& t) { return t.coef == 0.0; });
  terms = std::move(out);
}

double QuadForm::eval(std::span<const double> x) const {
  double v = 0.0;
  for (const QuadTerm& t : terms) v += t.coef * x[t.p] * x[t.q];
  return v;
}

void QuadForm::add_gradient(std::span<const double> x, double w, std::span<double> g) const {
  for (const QuadTerm& t : terms) {
    if (t.p == t.q) {
      g[t.p] += 2.0 * w * t.coef * x[t.p];
    } else {
      g[t.p] += w * t.coef * x[t.q];
      g[t.q] += w * t.coef * x[t.p];
    }
  }
}

namespace {

// Adds |alpha·v_a + beta·v_b|².
void add_abs2(QuadForm& f, Complex alpha, int a, Complex beta, int b) {
  QuadForm dummy;
  QuadForm::add_product(f, dummy, std::norm(alpha), a, a);
  QuadForm::add_product(f, dummy, std::norm(beta), b, b);
  QuadForm::add_product(f, dummy, 2.0 * alpha * std::conj(beta), a, b);
}

}  // namespace

NetworkForms NetworkForms::build(const Network& net) {
  const int n = net.num_buses();
  NetworkForms f;
  f.flow_p.resize(n);
  f.flow_q.resize(n);
  f.vmag2.resize(n);
  for (int i = 0; i < n; ++i) {
    f.vmag2[i].add(re_coord(i), re_coord(i), 1.0);
    f.vmag2[i].add(im_coord(i), im_coord(i), 1.0);
  }
  for (const Branch& br : net.branches) {
    const FlowCoeffs c = branch_flow_coeffs(br);
    const int o = br.from, d = br.to;
    QuadForm::add_product(f.flow_p[o], f.flow_q[o], c.origin_power[0], o, o);
    QuadForm::add_product(f.flow_p[o], f.flow_q[o], c.origin_power[1], o, d);
    // conj(v_o)·v_d = v_d·conj(v_o)
    QuadForm::add_product(f.flow_p[d], f.flow_q[d], c.dest_power[0], d, o);
    QuadForm::add_product(f.flow_p[d], f.flow_q[d], c.dest_power[1], d, d);
    QuadForm io, id;
    add_abs2(io, c.origin_current[0], o, c.origin_current[1], d);
    add_abs2(id, c.dest_current[0], o, c.dest_current[1], d);
    io.compress();
    id.compress();
    f.current_o.push_back(std::move(io));
    f.current_d.push_back(std::move(id));
  }
  for (int i = 0; i < n; ++i) {
    f.flow_p[i].compress();
    f.flow_q[i].compress();
    f.vmag2[i].compress();
  }
  return f;
}

}  // namespace ropf
