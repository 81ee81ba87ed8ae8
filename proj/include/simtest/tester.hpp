#pragma once

// Testers T : (X × {0,1})^m × {0,1}^ℓ → {0,1}, their mean functions, and the
// product sample distributions they are run against.
//
// A labeled sample point (x, y) over X = {0,1}^n is packed as x | y << n, so a
// labeled tester over n bits is an unlabeled tester over n + 1 bits. A tuple of
// m points packs coordinate i into bits [i·b, (i+1)·b) where b is the point
// width; a seed occupies the bits above the tuple.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simtest/circuits.hpp"
#include "simtest/core.hpp"

namespace simtest {

using json = nlohmann::json;

inline std::uint32_t labeled_point(std::uint64_t x, bool y, int n) {
  return static_cast<std::uint32_t>(x | (std::uint64_t{y} << n));
}
inline std::uint32_t point_x(std::uint32_t p, int n) { return p & ((1U << n) - 1U); }
inline bool point_y(std::uint32_t p, int n) { return ((p >> n) & 1U) != 0; }

struct TupleLayout {
  int point_bits = 0;
  int arity = 0;

  int bits() const { return point_bits * arity; }
  std::uint32_t mask() const { return point_bits >= 32 ? ~0U : (1U << point_bits) - 1U; }

  std::uint32_t point(std::uint64_t tuple, int i) const {
    return static_cast<std::uint32_t>(tuple >> (i * point_bits)) & mask();
  }
  std::uint64_t with_point(std::uint64_t tuple, int i, std::uint32_t p) const {
    const int shift = i * point_bits;
    tuple &= ~(std::uint64_t{mask()} << shift);
    return tuple | (std::uint64_t{p} << shift);
  }
  std::uint64_t encode(std::span<const std::uint32_t> pts) const {
    std::uint64_t t = 0;
    for (int i = 0; i < arity; ++i) t |= std::uint64_t{pts[static_cast<std::size_t>(i)]} << (i * point_bits);
    return t;
  }
  void decode(std::uint64_t tuple, std::span<std::uint32_t> out) const {
    for (int i = 0; i < arity; ++i) out[static_cast<std::size_t>(i)] = point(tuple, i);
  }
};

class Tester {
 public:
  using Eval = std::function<bool(std::span<const std::uint32_t> points, std::uint64_t seed)>;

  Tester(int point_bits, int arity, int seed_bits, bool labeled, Eval eval, std::string backend,
         json descriptor = json::object())
      : point_bits_(point_bits),
        arity_(arity),
        seed_bits_(seed_bits),
        labeled_(labeled),
        eval_(std::move(eval)),
        backend_(std::move(backend)),
        descriptor_(std::move(descriptor)) {
    if (point_bits < 1 || point_bits > 24) throw std::invalid_argument("tester point width must lie in [1, 24]");
    if (arity < 1) throw std::invalid_argument("tester arity must be positive");
    if (seed_bits < 0 || seed_bits > 63) throw std::invalid_argument("tester seed bits must lie in [0, 63]");
  }

  static Tester labeled(int n, int m, int ell, Eval eval, std::string backend = "composed",
                        json descriptor = json::object()) {
    return {n + 1, m, ell, true, std::move(eval), std::move(backend), std::move(descriptor)};
  }

  /// Backed by an explicit table indexed by tuple | seed << tuple_bits.
  static Tester from_table(int point_bits, int m, int ell, bool labeled, BooleanFunction table) {
    const TupleLayout lay{point_bits, m};
    if (table.domain().bits() != lay.bits() + ell)
      throw std::invalid_argument("tester table must have " + std::to_string(lay.bits() + ell) + " input bits");
    auto shared = std::make_shared<const BooleanFunction>(std::move(table));
    Tester t(point_bits, m, ell, labeled,
             [shared, lay](std::span<const std::uint32_t> pts, std::uint64_t seed) {
               return (*shared)(lay.encode(pts) | (seed << lay.bits()));
             },
             "table");
    t.table_ = shared;
    return t;
  }

  /// Backed by a single-output circuit whose inputs are the tuple bits then the seed bits.
  static Tester from_circuit(int point_bits, int m, int ell, bool labeled, Circuit c) {
    const TupleLayout lay{point_bits, m};
    if (c.n_inputs() != static_cast<std::uint32_t>(lay.bits() + ell) || c.outputs().size() != 1)
      throw std::invalid_argument("tester circuit must have tuple+seed inputs and one output");
    auto shared = std::make_shared<const Circuit>(std::move(c));
    Tester t(point_bits, m, ell, labeled,
             [shared, lay, ell](std::span<const std::uint32_t> pts, std::uint64_t seed) {
               const std::uint64_t idx = lay.encode(pts) | (seed << lay.bits());
               return eval_circuit(*shared, simtest::point_bits(idx, lay.bits() + ell)).front() != 0;
             },
             "circuit");
    t.circuit_ = shared;
    return t;
  }

  int point_bits() const { return point_bits_; }
  int arity() const { return arity_; }
  int seed_bits() const { return seed_bits_; }
  bool is_labeled() const { return labeled_; }
  /// n for labeled testers, the point width otherwise.
  int base_bits() const { return labeled_ ? point_bits_ - 1 : point_bits_; }
  TupleLayout layout() const { return {point_bits_, arity_}; }
  const std::string& backend() const { return backend_; }
  const json& descriptor() const { return descriptor_; }
  const Circuit* circuit() const { return circuit_.get(); }
  const BooleanFunction* table() const { return table_.get(); }
  std::optional<GateCount> gates() const {
    if (circuit_) return gate_count(*circuit_);
    return std::nullopt;
  }

  bool operator()(std::span<const std::uint32_t> points, std::uint64_t seed) const {
    if (points.size() != static_cast<std::size_t>(arity_))
      throw std::invalid_argument("tester expects " + std::to_string(arity_) + " sample points");
    return eval_(points, seed);
  }

  /// Evaluation on a packed tuple; requires a packable arity.
  bool at(std::uint64_t tuple, std::uint64_t seed) const {
    const auto lay = layout();
    if (table_) return (*table_)(tuple | (seed << lay.bits()));
    std::vector<std::uint32_t> pts(static_cast<std::size_t>(arity_));
    lay.decode(tuple, pts);
    return eval_(pts, seed);
  }

 private:
  int point_bits_;
  int arity_;
  int seed_bits_;
  bool labeled_;
  Eval eval_;
  std::string backend_;
  json descriptor_;
  std::shared_ptr<const BooleanFunction> table_;
  std::shared_ptr<const Circuit> circuit_;
};

/// T̄(x, y) = 2^{-ℓ} Σ_r T(x, y, r) as a table over packed tuples.
struct MeanTester {
  TupleLayout layout;
  bool labeled = true;
  RealTable table;

  int arity() const { return layout.arity; }
};

inline constexpr int max_seed_enumeration_bits = 20;
inline constexpr int default_enumeration_bits = 24;

inline MeanTester mean_tester(const Tester& t) {
  const auto lay = t.layout();
  if (t.seed_bits() > max_seed_enumeration_bits)
    throw budget_exceeded("mean_tester: 2^ell seeds are not enumerable for ell = " + std::to_string(t.seed_bits()));
  if (lay.bits() + t.seed_bits() > default_enumeration_bits)
    throw budget_exceeded("mean_tester: tuple space too large to tabulate");
  const Domain dom(lay.bits());
  const std::uint64_t seeds = std::uint64_t{1} << t.seed_bits();
  std::vector<double> v(dom.size());
  for (std::uint64_t tuple = 0; tuple < dom.size(); ++tuple) {
    std::uint64_t acc = 0;
    for (std::uint64_t r = 0; r < seeds; ++r) acc += t.at(tuple, r);
    v[tuple] = static_cast<double>(acc) / static_cast<double>(seeds);
  }
  return {lay, t.is_labeled(), RealTable(dom, std::move(v))};
}

/// A product of per-coordinate point distributions (iid when one is given).
class ProductDistribution {
 public:
  ProductDistribution(std::vector<Distribution> coords, int arity) : coords_(std::move(coords)), arity_(arity) {
    if (coords_.empty()) throw std::invalid_argument("product distribution needs a coordinate law");
    if (coords_.size() != 1 && coords_.size() != static_cast<std::size_t>(arity))
      throw std::invalid_argument("product distribution: one law per coordinate or a single iid law");
    for (const auto& c : coords_) require_same(c.domain(), coords_.front().domain(), "ProductDistribution");
    samplers_ = std::make_shared<std::vector<PointSampler>>();
    for (const auto& c : coords_) samplers_->emplace_back(c);
  }

  static ProductDistribution iid(Distribution d, int arity) { return {{std::move(d)}, arity}; }

  int arity() const { return arity_; }
  int point_bits() const { return coords_.front().domain().bits(); }
  TupleLayout layout() const { return {point_bits(), arity_}; }
  const Distribution& coord(int i) const { return coords_.size() == 1 ? coords_.front() : coords_[static_cast<std::size_t>(i)]; }

  double weight(std::uint64_t tuple) const {
    const auto lay = layout();
    double w = 1.0;
    for (int i = 0; i < arity_ && w != 0.0; ++i) w *= coord(i)(lay.point(tuple, i));
    return w;
  }

  Distribution materialize() const {
    const auto lay = layout();
    if (lay.bits() > default_enumeration_bits) throw budget_exceeded("product distribution too large to tabulate");
    const Domain dom(lay.bits());
    std::vector<double> w(dom.size());
    for (std::uint64_t t = 0; t < dom.size(); ++t) w[t] = weight(t);
    return Distribution::normalized(dom, std::move(w));
  }

  void sample(Rng& rng, std::span<std::uint32_t> out) const {
    const auto& s = *samplers_;
    for (int i = 0; i < arity_; ++i) out[static_cast<std::size_t>(i)] = s[s.size() == 1 ? 0 : static_cast<std::size_t>(i)](rng);
  }

 private:
  std::vector<Distribution> coords_;
  int arity_;
  std::shared_ptr<std::vector<PointSampler>> samplers_;
};

/// Law of (x, y) with x ~ D and P[y = 1 | x] = q(x), over n + 1 bits.
inline Distribution labeled_point_distribution(const Distribution& d, const RealTable& q) {
  require_same(d.domain(), q.domain(), "labeled_point_distribution");
  const int n = d.domain().bits();
  const Domain dom(n + 1);
  std::vector<double> w(dom.size());
  for (std::uint64_t x = 0; x < d.domain().size(); ++x) {
    w[labeled_point(x, false, n)] = d(x) * (1.0 - q(x));
    w[labeled_point(x, true, n)] = d(x) * q(x);
  }
  return Distribution::normalized(dom, std::move(w));
}

inline ProductDistribution deterministic_labels(const Distribution& d, int m, const BooleanFunction& f) {
  return ProductDistribution::iid(labeled_point_distribution(d, RealTable::from_boolean(f)), m);
}

inline ProductDistribution bernoulli_labels(const Distribution& d, int m, const RealTable& ft) {
  return ProductDistribution::iid(labeled_point_distribution(d, ft), m);
}

inline ProductDistribution uniform_labels(const Distribution& d, int m) {
  return ProductDistribution::iid(labeled_point_distribution(d, RealTable::constant(d.domain(), 0.5)), m);
}

/// The first `real_prefix` coordinates labeled by f, the rest by f̃.
inline ProductDistribution hybrid_labels(const Distribution& d, int m, const RealTable& f, const RealTable& ft,
                                         int real_prefix) {
  std::vector<Distribution> coords;
  for (int i = 0; i < m; ++i) coords.push_back(labeled_point_distribution(d, i < real_prefix ? f : ft));
  return {std::move(coords), m};
}

}  // namespace simtest
