#pragma once

// Classifier circuits for supersimulators whose terms are consistency
// indicators of clipped sums of restrictions of T and of earlier prefixes.
// Inputs are the values r_1(x)..r_p(x) of the T-restrictions used anywhere;
// output j·m + i is 1[f_j(x) ≥ t_ij].

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simtest/circuits.hpp"
#include "simtest/families.hpp"
#include "simtest/tester.hpp"

namespace simtest {

struct ClassifierCircuit {
  Circuit circuit{0, {}, {}};
  std::vector<RestrictionRef> inputs;
  int arity = 0;
  std::size_t terms = 0;
  /// Fixed-point units per 1.0 and per simulator step.
  std::int64_t units = 1;
  std::int64_t step_units = 1;
  int fraction_bits = 0;
  bool exact_units = true;
  /// Gate count after each term is added.
  std::vector<std::size_t> gates_after_term;

  std::vector<std::uint8_t> input_bits(const Tester& t, std::uint64_t x) const {
    const TupleLayout lay = t.layout();
    std::vector<std::uint8_t> bits;
    bits.reserve(inputs.size());
    for (const auto& r : inputs) {
      const std::uint64_t tuple = lay.encode(r.points) | (x << (r.coordinate * lay.point_bits));
      bits.push_back(t.at(tuple, r.seed) ? 1 : 0);
    }
    return bits;
  }

  std::vector<std::uint8_t> evaluate(const Tester& t, std::uint64_t x) const {
    return eval_circuit(circuit, input_bits(t, x));
  }

  json to_json() const {
    json in = json::array();
    for (const auto& r : inputs) in.push_back(r.to_json());
    return {{"inputs", in.size()},          {"input_restrictions", std::move(in)},
            {"outputs", circuit.outputs().size()}, {"gates", circuit.gates().size()},
            {"arity", arity},               {"terms", terms},
            {"units", units},               {"step_units", step_units},
            {"fraction_bits", fraction_bits}, {"exact_units", exact_units},
            {"gates_after_term", gates_after_term}, {"basis", "AND,OR,NOT,XOR,CONST"}};
  }
};

/// C·(m·k·log2(1/γ)/δ)^c.
inline double classifier_gate_budget(int m, std::size_t k, double gamma, double delta, double c_mult = 1.0,
                                     double c_exp = 2.0) {
  const double base = m * static_cast<double>(std::max<std::size_t>(k, 1)) * std::log2(1.0 / gamma) / delta;
  return c_mult * std::pow(base, c_exp);
}

namespace detail {

inline std::uint64_t tuple_key(const RestrictionRef& r) { return r.index; }

struct ClassifierPlan {
  std::int64_t units;
  std::int64_t step_units;
  int fraction_bits;
  bool exact;
};

inline bool build_classifier_with(const StructuredSum& sum, int m, const Tester& t, const ClassifierPlan& plan,
                                  ClassifierCircuit& out) {
  const std::size_t k = sum.size();
  const int n = t.base_bits();
  const Domain X(n);

  // Collect the structures and the distinct T-restriction inputs.
  std::vector<const IndicatorStructure*> st;
  std::map<std::uint64_t, std::size_t> input_of;
  std::vector<RestrictionRef> inputs;
  for (std::size_t j = 0; j < k; ++j) {
    const auto* s = sum.terms()[j].element.indicator();
    if (!s) throw std::invalid_argument("build_classifier: term " + std::to_string(j) + " is not a consistency indicator");
    if (static_cast<int>(s->thresholds.size()) != m) throw std::invalid_argument("build_classifier: arity mismatch");
    if (s->reference.domain().bits() != n) throw domain_mismatch("build_classifier: reference domain mismatch");
    if (!s->components.empty() && !(s->reference_scale > 0.0))
      throw std::invalid_argument("build_classifier: missing reference scale");
    for (const auto& c : s->components) {
      if (c.ref.source == RestrictionRef::Source::tester) {
        if (input_of.emplace(tuple_key(c.ref), inputs.size()).second) inputs.push_back(c.ref);
      } else if (c.ref.simulator_terms != j) {
        throw std::invalid_argument("build_classifier: term " + std::to_string(j) +
                                    " uses a restriction of a prefix other than its own");
      }
    }
    st.push_back(s);
  }

  // Integer mirror of the circuit: input values and output bits at every x.
  std::vector<std::vector<std::uint8_t>> in_vals(X.size());
  {
    ClassifierCircuit probe;
    probe.inputs = inputs;
    for (std::uint64_t x = 0; x < X.size(); ++x) in_vals[x] = probe.input_bits(t, x);
  }
  std::vector<std::vector<std::uint8_t>> outs(X.size(), std::vector<std::uint8_t>(k * static_cast<std::size_t>(m)));

  CircuitBuilder b(static_cast<std::uint32_t>(inputs.size()));
  std::vector<CircuitBuilder::Wire> out_wires;
  out_wires.reserve(k * static_cast<std::size_t>(m));
  std::vector<std::size_t> gates_after;

  auto above = [&](std::size_t j, int i, std::uint32_t xi) {
    return st[j]->reference(xi) >= st[j]->thresholds[static_cast<std::size_t>(i)];
  };

  for (std::size_t j = 0; j < k; ++j) {
    const auto* s = st[j];
    const std::int64_t bound =
        std::max<std::int64_t>(static_cast<std::int64_t>(s->components.size() + 1) * plan.units,
                               static_cast<std::int64_t>(j + 1) * plan.step_units + plan.units);
    const auto width = static_cast<std::size_t>(std::bit_width(static_cast<std::uint64_t>(bound)) + 2);

    CircuitBuilder::Bits acc = b.constant(0, width);
    // A(x) for every x, mirrored in integers.
    std::vector<std::int64_t> a_val(X.size(), 0);

    for (const auto& c : s->components) {
      CircuitBuilder::Bits term;
      if (c.ref.source == RestrictionRef::Source::tester) {
        const std::size_t w = input_of.at(tuple_key(c.ref));
        term.resize(width);
        for (std::size_t bit = 0; bit < width; ++bit)
          term[bit] = bit < 63 && ((plan.units >> bit) & 1) ? b.input(static_cast<std::uint32_t>(w)) : b.const_bit(false);
        for (std::uint64_t x = 0; x < X.size(); ++x) a_val[x] += c.sign * plan.units * in_vals[x][w];
      } else {
        const int i = c.ref.coordinate;
        const bool yi = ((c.ref.labels >> i) & 1U) != 0;
        std::vector<CircuitBuilder::Wire> pos, neg;
        std::vector<std::pair<std::size_t, int>> used;  // (j', σ_j')
        for (std::size_t jp = 0; jp < j; ++jp) {
          bool live = true;
          for (int ip = 0; ip < m && live; ++ip) {
            if (ip == i) continue;
            const std::uint32_t p = c.ref.points[static_cast<std::size_t>(ip)];
            live = point_y(p, n) == above(jp, ip, point_x(p, n));
          }
          if (!live) continue;
          const int sj = sum.terms()[jp].sign;
          const auto o = out_wires[jp * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
          const auto bit = yi ? o : b.not_(o);
          (sj > 0 ? pos : neg).push_back(bit);
          used.emplace_back(jp, sj);
        }
        CircuitBuilder::Bits r;
        if (used.empty()) {
          r = b.constant(0, width);
        } else {
          auto sp = b.zero_extend(b.popcount(pos), width);
          auto sn = b.zero_extend(b.popcount(neg), width);
          auto sdiff = neg.empty() ? sp : b.add(sp, b.negate(sn), width);
          auto gs = plan.step_units == 1 ? sdiff
                                         : b.multiply_const(sdiff, static_cast<std::uint64_t>(plan.step_units), width);
          const auto is_neg = gs.back();
          const auto at_top = b.greater_equal_const(gs, plan.units);
          r = b.select(at_top, b.constant(plan.units, width), b.select(is_neg, b.constant(0, width), gs));
        }
        term = r;
        for (std::uint64_t x = 0; x < X.size(); ++x) {
          std::int64_t sacc = 0;
          for (auto [jp, sj] : used) {
            const bool o = outs[x][jp * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)] != 0;
            sacc += sj * ((o == yi) ? 1 : 0);
          }
          a_val[x] += c.sign * std::clamp<std::int64_t>(plan.step_units * sacc, 0, plan.units);
        }
      }
      acc = c.sign > 0 ? b.add(acc, term, width) : b.add(acc, b.negate(term), width);
    }

    for (int i = 0; i < m; ++i) {
      std::int64_t theta = std::numeric_limits<std::int64_t>::max();
      std::int64_t below_max = std::numeric_limits<std::int64_t>::min();
      std::size_t n_above = 0;
      for (std::uint64_t x = 0; x < X.size(); ++x) {
        if (above(j, i, static_cast<std::uint32_t>(x))) {
          theta = std::min(theta, a_val[x]);
          ++n_above;
        } else {
          below_max = std::max(below_max, a_val[x]);
        }
      }
      CircuitBuilder::Wire w;
      if (n_above == 0) {
        w = b.const_bit(false);
      } else if (n_above == X.size()) {
        w = b.const_bit(true);
      } else {
        if (below_max >= theta) return false;
        w = b.greater_equal_const(acc, theta);
      }
      out_wires.push_back(w);
      for (std::uint64_t x = 0; x < X.size(); ++x)
        outs[x][j * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)] = above(j, i, static_cast<std::uint32_t>(x));
    }
    gates_after.push_back(b.size());
  }

  for (auto w : out_wires) b.output(w);
  out.circuit = b.build();
  out.inputs = std::move(inputs);
  out.arity = m;
  out.terms = k;
  out.units = plan.units;
  out.step_units = plan.step_units;
  out.fraction_bits = plan.fraction_bits;
  out.exact_units = plan.exact;
  out.gates_after_term = std::move(gates_after);
  return true;
}

}  // namespace detail

/// Classifier circuit for a supersimulator built by the main-hard growth function.
inline ClassifierCircuit build_classifier(const StructuredSum& supersim, int m, const Tester& t) {
  if (!t.is_labeled() || t.arity() != m) throw std::invalid_argument("build_classifier: tester arity mismatch");
  ClassifierCircuit out;
  const double q = supersim.scale();
  if (!(q > 0.0)) throw std::invalid_argument("build_classifier: simulator scale must be positive");
  const double inv = 1.0 / q;
  if (std::abs(inv - std::round(inv)) < 1e-9 && std::round(inv) < 1e15) {
    const detail::ClassifierPlan plan{static_cast<std::int64_t>(std::round(inv)), 1, 0, true};
    if (detail::build_classifier_with(supersim, m, t, plan, out)) return out;
    throw std::runtime_error("build_classifier: thresholds are not separable in exact units");
  }
  const double k = static_cast<double>(std::max<std::size_t>(supersim.size(), 1));
  for (int f = static_cast<int>(std::ceil(std::log2(k / q))) + 2; f <= 50; ++f) {
    const auto units = std::int64_t{1} << f;
    const detail::ClassifierPlan plan{units, std::llround(q * static_cast<double>(units)), f, false};
    if (detail::build_classifier_with(supersim, m, t, plan, out)) return out;
  }
  throw std::runtime_error("build_classifier: no fixed-point width separates the thresholds");
}

}  // namespace simtest
