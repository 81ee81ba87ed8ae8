#pragma once

// Gate-level circuits over the basis {AND, OR, NOT, XOR, CONST0, CONST1} with
// fan-in 2. Wires 0..n_inputs-1 are inputs; gate g drives wire n_inputs + g.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simtest/core.hpp"

namespace simtest {

enum class GateOp : std::uint8_t { and_op, or_op, not_op, xor_op, const0, const1 };

inline constexpr std::string_view gate_op_name(GateOp op) {
  switch (op) {
    case GateOp::and_op: return "AND";
    case GateOp::or_op: return "OR";
    case GateOp::not_op: return "NOT";
    case GateOp::xor_op: return "XOR";
    case GateOp::const0: return "CONST0";
    case GateOp::const1: return "CONST1";
  }
  return "?";
}

inline int gate_arity(GateOp op) {
  switch (op) {
    case GateOp::not_op: return 1;
    case GateOp::const0:
    case GateOp::const1: return 0;
    default: return 2;
  }
}

inline GateOp parse_gate_op(std::string_view s) {
  for (auto op : {GateOp::and_op, GateOp::or_op, GateOp::not_op, GateOp::xor_op, GateOp::const0, GateOp::const1})
    if (gate_op_name(op) == s) return op;
  throw std::invalid_argument("unknown gate op '" + std::string(s) + "'");
}

struct Gate {
  GateOp op;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  friend bool operator==(const Gate&, const Gate&) = default;
};

struct GateCount {
  std::size_t total = 0;
  friend bool operator==(const GateCount&, const GateCount&) = default;
};

class Circuit {
 public:
  Circuit() = default;
  Circuit(std::uint32_t n_inputs, std::vector<Gate> gates, std::vector<std::uint32_t> outputs)
      : n_inputs_(n_inputs), gates_(std::move(gates)), outputs_(std::move(outputs)) {
    for (std::size_t g = 0; g < gates_.size(); ++g) {
      const auto wire = n_inputs_ + g;
      const int ar = gate_arity(gates_[g].op);
      if ((ar >= 1 && gates_[g].a >= wire) || (ar >= 2 && gates_[g].b >= wire))
        throw std::invalid_argument("gate " + std::to_string(wire) + " references a later wire");
      if (ar < 2) gates_[g].b = 0;
      if (ar < 1) gates_[g].a = 0;
    }
    for (auto w : outputs_)
      if (w >= wire_count()) throw std::invalid_argument("output wire " + std::to_string(w) + " does not exist");
  }

  std::uint32_t n_inputs() const { return n_inputs_; }
  const std::vector<Gate>& gates() const { return gates_; }
  const std::vector<std::uint32_t>& outputs() const { return outputs_; }
  std::size_t wire_count() const { return n_inputs_ + gates_.size(); }

  /// Values of every wire for one input assignment.
  std::vector<std::uint8_t> wires(std::span<const std::uint8_t> input) const {
    if (input.size() != n_inputs_)
      throw std::invalid_argument("circuit expects " + std::to_string(n_inputs_) + " inputs, got " +
                                  std::to_string(input.size()));
    std::vector<std::uint8_t> w(wire_count());
    for (std::size_t i = 0; i < n_inputs_; ++i) w[i] = input[i] ? 1 : 0;
    for (std::size_t g = 0; g < gates_.size(); ++g) {
      const auto& gt = gates_[g];
      std::uint8_t v = 0;
      switch (gt.op) {
        case GateOp::and_op: v = w[gt.a] & w[gt.b]; break;
        case GateOp::or_op: v = w[gt.a] | w[gt.b]; break;
        case GateOp::xor_op: v = w[gt.a] ^ w[gt.b]; break;
        case GateOp::not_op: v = w[gt.a] ^ 1; break;
        case GateOp::const0: v = 0; break;
        case GateOp::const1: v = 1; break;
      }
      w[n_inputs_ + g] = v;
    }
    return w;
  }

  friend bool operator==(const Circuit&, const Circuit&) = default;

 private:
  std::uint32_t n_inputs_ = 0;
  std::vector<Gate> gates_;
  std::vector<std::uint32_t> outputs_;
};

inline std::vector<std::uint8_t> eval_circuit(const Circuit& c, std::span<const std::uint8_t> input) {
  const auto w = c.wires(input);
  std::vector<std::uint8_t> out;
  out.reserve(c.outputs().size());
  for (auto o : c.outputs()) out.push_back(w[o]);
  return out;
}

/// Input x_1..x_n taken from the bits of a point index.
inline std::vector<std::uint8_t> point_bits(std::uint64_t x, int n) {
  std::vector<std::uint8_t> b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = (x >> i) & 1U;
  return b;
}

inline GateCount gate_count(const Circuit& c) { return {c.gates().size()}; }

/// h(x) = Σ_i c_i(x) / 2^(i-1); rejects circuits whose encoded value exceeds 1.
inline RealTable compile_to_table(const Circuit& c, const Domain& domain) {
  if (c.n_inputs() != static_cast<std::uint32_t>(domain.bits()))
    throw domain_mismatch("compile_to_table: circuit has " + std::to_string(c.n_inputs()) + " inputs, domain has " +
                          std::to_string(domain.bits()) + " bits");
  std::vector<double> vals(domain.size());
  for (std::uint64_t x = 0; x < domain.size(); ++x) {
    const auto out = eval_circuit(c, point_bits(x, domain.bits()));
    double v = 0.0;
    double weight = 1.0;
    for (auto bit : out) {
      v += bit * weight;
      weight /= 2.0;
    }
    if (v > 1.0)
      throw std::invalid_argument("circuit encodes value " + std::to_string(v) + " > 1 at point " +
                                  std::to_string(x));
    vals[x] = v;
  }
  return {domain, std::move(vals)};
}

/// Incremental construction with small arithmetic helpers. Multi-bit values are
/// little-endian wire vectors; signed values use two's complement.
class CircuitBuilder {
 public:
  using Wire = std::uint32_t;
  using Bits = std::vector<Wire>;

  explicit CircuitBuilder(std::uint32_t n_inputs) : n_inputs_(n_inputs) {}

  Wire input(std::uint32_t i) const {
    if (i >= n_inputs_) throw std::out_of_range("no such circuit input");
    return i;
  }
  std::uint32_t n_inputs() const { return n_inputs_; }
  std::size_t size() const { return gates_.size(); }

  Wire gate(GateOp op, Wire a = 0, Wire b = 0) {
    gates_.push_back({op, a, b});
    return static_cast<Wire>(n_inputs_ + gates_.size() - 1);
  }
  Wire const_bit(bool v) {
    auto& cache = v ? one_ : zero_;
    if (!cache) cache = gate(v ? GateOp::const1 : GateOp::const0);
    return *cache;
  }
  Wire not_(Wire a) { return gate(GateOp::not_op, a); }
  Wire and_(Wire a, Wire b) { return gate(GateOp::and_op, a, b); }
  Wire or_(Wire a, Wire b) { return gate(GateOp::or_op, a, b); }
  Wire xor_(Wire a, Wire b) { return gate(GateOp::xor_op, a, b); }

  // s ? a : b
  Wire mux(Wire s, Wire a, Wire b) { return or_(and_(s, a), and_(not_(s), b)); }

  Bits constant(std::int64_t value, std::size_t width) {
    Bits out(width);
    for (std::size_t i = 0; i < width; ++i)
      out[i] = const_bit(i < 64 ? ((static_cast<std::uint64_t>(value) >> i) & 1U) != 0 : value < 0);
    return out;
  }

  Bits sign_extend(Bits v, std::size_t width) {
    if (v.empty()) return constant(0, width);
    const Wire top = v.back();
    while (v.size() < width) v.push_back(top);
    v.resize(width);
    return v;
  }

  Bits zero_extend(Bits v, std::size_t width) {
    while (v.size() < width) v.push_back(const_bit(false));
    v.resize(width);
    return v;
  }

  /// Ripple-carry sum, truncated to `width`.
  Bits add(const Bits& a, const Bits& b, std::size_t width) {
    Bits out(width);
    std::optional<Wire> carry;
    for (std::size_t i = 0; i < width; ++i) {
      const Wire x = a.at(i);
      const Wire y = b.at(i);
      const Wire p = xor_(x, y);
      if (!carry) {
        out[i] = p;
        carry = and_(x, y);
      } else {
        out[i] = xor_(p, *carry);
        carry = or_(and_(x, y), and_(p, *carry));
      }
    }
    return out;
  }

  Bits negate(const Bits& a) {
    Bits inv(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) inv[i] = not_(a[i]);
    return add(inv, constant(1, a.size()), a.size());
  }

  /// Unsigned population count of single-bit wires.
  Bits popcount(std::span<const Wire> bits) {
    if (bits.empty()) return {};
    std::vector<Bits> level;
    for (auto w : bits) level.push_back({w});
    while (level.size() > 1) {
      std::vector<Bits> next;
      for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
        const std::size_t width = std::max(level[i].size(), level[i + 1].size()) + 1;
        next.push_back(add(zero_extend(level[i], width), zero_extend(level[i + 1], width), width));
      }
      if (level.size() % 2) next.push_back(level.back());
      level = std::move(next);
    }
    return level.front();
  }

  /// Signed product with a nonnegative constant via shift-and-add.
  Bits multiply_const(const Bits& a, std::uint64_t k, std::size_t width) {
    Bits acc = constant(0, width);
    bool any = false;
    const Bits ext = sign_extend(a, width);
    for (std::size_t s = 0; s < 64 && s < width; ++s) {
      if (!((k >> s) & 1U)) continue;
      Bits shifted(width);
      for (std::size_t i = 0; i < width; ++i) shifted[i] = i < s ? const_bit(false) : ext[i - s];
      acc = any ? add(acc, shifted, width) : shifted;
      any = true;
    }
    return acc;
  }

  /// 1 iff signed value a >= constant c; a must be wide enough for a - c.
  Wire greater_equal_const(const Bits& a, std::int64_t c) {
    const Bits diff = add(a, constant(-c, a.size()), a.size());
    return not_(diff.back());
  }

  Bits select(Wire s, const Bits& a, const Bits& b) {
    Bits out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = mux(s, a[i], b.at(i));
    return out;
  }

  void output(Wire w) { outputs_.push_back(w); }

  Circuit build() const { return {n_inputs_, gates_, outputs_}; }

 private:
  std::uint32_t n_inputs_;
  std::vector<Gate> gates_;
  std::vector<std::uint32_t> outputs_;
  std::optional<Wire> zero_;
  std::optional<Wire> one_;
};

/// Truth tables over {0,1}^n of every single-output circuit with at most
/// `max_gates` gates, deduplicated, in the order first reached. States are
/// sets of computed tables, so circuits that only differ by gate order or by
/// redundant gates are visited once.
inline std::vector<BooleanFunction> enumerate_circuit_tables(int n, int max_gates,
                                                             std::size_t state_cap = 2'000'000) {
  if (n < 1 || n > 6) throw std::invalid_argument("circuit enumeration supports 1 <= n <= 6");
  if (max_gates < 0 || max_gates > 6) throw std::invalid_argument("circuit enumeration supports at most 6 gates");
  const Domain dom(n);
  const std::uint64_t full = dom.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << dom.size()) - 1;

  std::vector<std::uint64_t> order;
  std::set<std::uint64_t> seen;
  auto note = [&](std::uint64_t t) {
    if (seen.insert(t).second) order.push_back(t);
  };
  std::vector<std::uint64_t> inputs;
  for (int i = 0; i < n; ++i) {
    std::uint64_t t = 0;
    for (std::uint64_t x = 0; x < dom.size(); ++x)
      if ((x >> i) & 1U) t |= std::uint64_t{1} << x;
    inputs.push_back(t);
    note(t);
  }

  std::set<std::vector<std::uint64_t>> frontier{{}};
  for (int depth = 0; depth < max_gates; ++depth) {
    std::set<std::vector<std::uint64_t>> next;
    for (const auto& state : frontier) {
      std::vector<std::uint64_t> wires = inputs;
      wires.insert(wires.end(), state.begin(), state.end());
      std::set<std::uint64_t> present(wires.begin(), wires.end());
      std::vector<std::uint64_t> candidates{0, full};
      for (std::size_t i = 0; i < wires.size(); ++i) {
        candidates.push_back(~wires[i] & full);
        for (std::size_t j = i + 1; j < wires.size(); ++j) {
          candidates.push_back(wires[i] & wires[j]);
          candidates.push_back(wires[i] | wires[j]);
          candidates.push_back(wires[i] ^ wires[j]);
        }
      }
      for (auto t : candidates) {
        if (present.count(t)) continue;
        note(t);
        if (depth + 1 < max_gates) {
          auto s = state;
          s.insert(std::lower_bound(s.begin(), s.end(), t), t);
          next.insert(std::move(s));
          if (next.size() > state_cap) throw budget_exceeded("circuit enumeration state cap exceeded");
        }
      }
    }
    frontier = std::move(next);
  }

  std::vector<BooleanFunction> out;
  out.reserve(order.size());
  for (auto t : order) out.push_back(BooleanFunction::from_code(dom, t));
  return out;
}

}  // namespace simtest
