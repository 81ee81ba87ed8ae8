#pragma once

// Domains, Boolean and real tables over {0,1}^n, distributions, distances and
// exact expectations. Everything else in the library evaluates against these.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace simtest {

using Rng = std::mt19937_64;

/// Raised when two objects that must share a domain do not.
class domain_mismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an exhaustive computation would exceed its enumeration budget.
class budget_exceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int max_table_bits = 24;
inline constexpr double mass_tolerance = 1e-12;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) {
    add(v);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// The cube {0,1}^bits. Point x is an unsigned integer whose bit 0 is x_1.
class Domain {
 public:
  Domain() = default;
  explicit Domain(int bits) : bits_(bits) {
    if (bits < 0 || bits > max_table_bits)
      throw std::invalid_argument("domain bits must lie in [0, 24], got " + std::to_string(bits));
  }

  int bits() const { return bits_; }
  std::uint64_t size() const { return std::uint64_t{1} << bits_; }
  bool contains(std::uint64_t x) const { return x < size(); }

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  int bits_ = 0;
};

inline void require_same(const Domain& a, const Domain& b, std::string_view what) {
  if (a != b)
    throw domain_mismatch(std::string(what) + ": domain mismatch (" + std::to_string(a.bits()) +
                          " vs " + std::to_string(b.bits()) + " bits)");
}

class BooleanFunction {
 public:
  BooleanFunction() = default;
  BooleanFunction(Domain domain, std::vector<std::uint8_t> table)
      : domain_(domain), table_(std::move(table)) {
    if (table_.size() != domain_.size())
      throw std::invalid_argument("truth table length " + std::to_string(table_.size()) +
                                  " does not match 2^" + std::to_string(domain_.bits()));
    for (auto& b : table_) b = b ? 1 : 0;
  }

  static BooleanFunction constant(Domain domain, bool value) {
    return {domain, std::vector<std::uint8_t>(domain.size(), value ? 1 : 0)};
  }

  /// Characters in index order, e.g. "0001" is AND on two bits.
  static BooleanFunction from_string(std::string_view bits) {
    int n = 0;
    while ((std::size_t{1} << n) < bits.size()) ++n;
    if ((std::size_t{1} << n) != bits.size())
      throw std::invalid_argument("truth table length must be a power of two");
    std::vector<std::uint8_t> t(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] != '0' && bits[i] != '1')
        throw std::invalid_argument("truth table characters must be 0 or 1");
      t[i] = bits[i] == '1';
    }
    return {Domain(n), std::move(t)};
  }

  /// Bit x of `code` is f(x); requires 2^n <= 64.
  static BooleanFunction from_code(Domain domain, std::uint64_t code) {
    if (domain.size() > 64) throw std::invalid_argument("from_code requires n <= 6");
    std::vector<std::uint8_t> t(domain.size());
    for (std::uint64_t x = 0; x < domain.size(); ++x) t[x] = (code >> x) & 1U;
    return {domain, std::move(t)};
  }

  template <class Pred>
  static BooleanFunction from_predicate(Domain domain, Pred&& pred) {
    std::vector<std::uint8_t> t(domain.size());
    for (std::uint64_t x = 0; x < domain.size(); ++x) t[x] = pred(x) ? 1 : 0;
    return {domain, std::move(t)};
  }

  const Domain& domain() const { return domain_; }
  std::span<const std::uint8_t> table() const { return table_; }
  bool operator()(std::uint64_t x) const { return table_[x] != 0; }

  std::uint64_t code() const {
    if (domain_.size() > 64) throw std::invalid_argument("code() requires n <= 6");
    std::uint64_t c = 0;
    for (std::uint64_t x = 0; x < table_.size(); ++x) c |= std::uint64_t{table_[x]} << x;
    return c;
  }

  std::size_t ones() const { return static_cast<std::size_t>(std::count(table_.begin(), table_.end(), 1)); }

  BooleanFunction complement() const {
    auto t = table_;
    for (auto& b : t) b ^= 1;
    return {domain_, std::move(t)};
  }

  BooleanFunction with_flipped(std::uint64_t x) const {
    auto t = table_;
    t.at(x) ^= 1;
    return {domain_, std::move(t)};
  }

  std::string to_string() const {
    std::string s(table_.size(), '0');
    for (std::size_t i = 0; i < table_.size(); ++i) s[i] = table_[i] ? '1' : '0';
    return s;
  }

  friend bool operator==(const BooleanFunction&, const BooleanFunction&) = default;

 private:
  Domain domain_;
  std::vector<std::uint8_t> table_;
};

struct BooleanFunctionHash {
  std::size_t operator()(const BooleanFunction& f) const {
    std::size_t h = static_cast<std::size_t>(f.domain().bits()) * 0x9e3779b97f4a7c15ULL;
    for (auto b : f.table()) h = (h * 1099511628211ULL) ^ b;
    return h;
  }
};

/// A function into [0, 1] given by its value table.
class RealTable {
 public:
  RealTable() = default;
  RealTable(Domain domain, std::vector<double> values) : domain_(domain), values_(std::move(values)) {
    if (values_.size() != domain_.size())
      throw std::invalid_argument("real table length " + std::to_string(values_.size()) +
                                  " does not match 2^" + std::to_string(domain_.bits()));
    for (double v : values_)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("real table value " + std::to_string(v) + " outside [0, 1]");
  }

  static RealTable constant(Domain domain, double v) { return {domain, std::vector<double>(domain.size(), v)}; }

  static RealTable from_boolean(const BooleanFunction& f) {
    std::vector<double> v(f.domain().size());
    for (std::uint64_t x = 0; x < v.size(); ++x) v[x] = f(x) ? 1.0 : 0.0;
    return {f.domain(), std::move(v)};
  }

  const Domain& domain() const { return domain_; }
  std::span<const double> values() const { return values_; }
  double operator()(std::uint64_t x) const { return values_[x]; }

  bool is_boolean() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0 || v == 1.0; });
  }

  friend bool operator==(const RealTable&, const RealTable&) = default;

 private:
  Domain domain_;
  std::vector<double> values_;
};

class Distribution {
 public:
  Distribution() = default;
  Distribution(Domain domain, std::vector<double> weights) : domain_(domain), weights_(std::move(weights)) {
    if (weights_.size() != domain_.size())
      throw std::invalid_argument("distribution length does not match domain");
    CompensatedSum total;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("distribution weights must be nonnegative");
      total += w;
    }
    if (std::abs(total.value() - 1.0) > mass_tolerance)
      throw std::invalid_argument("distribution weights sum to " + std::to_string(total.value()) + ", not 1");
  }

  static Distribution uniform(Domain domain) {
    return {domain, std::vector<double>(domain.size(), 1.0 / static_cast<double>(domain.size()))};
  }

  static Distribution point_mass(Domain domain, std::uint64_t x) {
    std::vector<double> w(domain.size(), 0.0);
    w.at(x) = 1.0;
    return {domain, std::move(w)};
  }

  /// Rescales nonnegative weights to unit mass.
  static Distribution normalized(Domain domain, std::vector<double> weights) {
    CompensatedSum total;
    for (double w : weights) total += w;
    if (!(total.value() > 0.0)) throw std::invalid_argument("cannot normalize zero mass");
    for (auto& w : weights) w /= total.value();
    return {domain, std::move(weights)};
  }

  const Domain& domain() const { return domain_; }
  std::span<const double> weights() const { return weights_; }
  double operator()(std::uint64_t x) const { return weights_[x]; }

  double mass(std::span<const std::uint64_t> points) const {
    CompensatedSum s;
    for (auto x : points) s += weights_[x];
    return s.value();
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  Domain domain_;
  std::vector<double> weights_;
};

/// Inverse-CDF sampler for a Distribution.
class PointSampler {
 public:
  explicit PointSampler(const Distribution& d) {
    cdf_.reserve(d.weights().size());
    double acc = 0.0;
    for (double w : d.weights()) cdf_.push_back(acc += w);
    last_positive_ = 0;
    for (std::size_t x = 0; x < d.weights().size(); ++x)
      if (d.weights()[x] > 0.0) last_positive_ = x;
  }

  std::uint32_t operator()(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t x = static_cast<std::size_t>(it - cdf_.begin());
    return static_cast<std::uint32_t>(std::min(x, last_positive_));
  }

 private:
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

/// Σ_x w(x)·v(x) with compensated summation.
inline double weighted_sum(std::span<const double> w, std::span<const double> v) {
  if (w.size() != v.size()) throw domain_mismatch("weighted_sum: length mismatch");
  CompensatedSum s;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0.0) s += w[i] * v[i];
  return s.value();
}

inline double distance_frac(const BooleanFunction& f, const BooleanFunction& g) {
  require_same(f.domain(), g.domain(), "distance_frac");
  std::uint64_t diff = 0;
  for (std::uint64_t x = 0; x < f.domain().size(); ++x) diff += f(x) != g(x);
  return static_cast<double>(diff) / static_cast<double>(f.domain().size());
}

inline double expectation_under(const RealTable& h, const Distribution& d) {
  require_same(h.domain(), d.domain(), "expectation_under");
  return weighted_sum(d.weights(), h.values());
}

/// An explicit, duplicate-free list of functions on one domain.
class PropertySet {
 public:
  explicit PropertySet(Domain domain) : domain_(domain) {}
  PropertySet(Domain domain, std::vector<BooleanFunction> members) : domain_(domain) {
    for (auto& f : members) insert(std::move(f));
  }

  /// Every function on a domain with n <= 4 satisfying `pred`.
  template <class Pred>
  static PropertySet from_predicate(Domain domain, Pred&& pred) {
    PropertySet p(domain);
    for_each_function(domain, [&](const BooleanFunction& f) {
      if (pred(f)) p.insert(f);
    });
    return p;
  }

  static PropertySet all_functions(Domain domain) {
    return from_predicate(domain, [](const BooleanFunction&) { return true; });
  }

  /// Calls `fn` on all 2^(2^n) functions in code order.
  template <class Fn>
  static void for_each_function(Domain domain, Fn&& fn) {
    if (domain.bits() > 4) throw budget_exceeded("function universe is enumerable only for n <= 4");
    const std::uint64_t count = std::uint64_t{1} << domain.size();
    for (std::uint64_t code = 0; code < count; ++code) fn(BooleanFunction::from_code(domain, code));
  }

  bool insert(BooleanFunction f) {
    require_same(domain_, f.domain(), "PropertySet::insert");
    if (!index_.insert(f).second) return false;
    members_.push_back(std::move(f));
    return true;
  }

  const Domain& domain() const { return domain_; }
  const std::vector<BooleanFunction>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(const BooleanFunction& f) const { return index_.count(f) != 0; }

  /// min over g in P of distance_frac(f, g); +inf when P is empty.
  double distance_to(const BooleanFunction& f) const {
    require_same(domain_, f.domain(), "PropertySet::distance_to");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : members_) best = std::min(best, distance_frac(f, g));
    return best;
  }

 private:
  Domain domain_;
  std::vector<BooleanFunction> members_;
  std::unordered_set<BooleanFunction, BooleanFunctionHash> index_;
};

inline bool eps_closure_member(const BooleanFunction& f, const PropertySet& p, double eps) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("eps must lie in [0, 1]");
  if (p.empty()) return false;
  return p.distance_to(f) <= eps;
}

inline double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace simtest
