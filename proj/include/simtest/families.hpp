#pragma once

// Distinguisher families, structured sums, advantages and violator search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simtest/core.hpp"
#include "simtest/tester.hpp"

namespace simtest {

/// Which one-way restriction a distinguisher is: T or T̃ with everything but x_i hard-wired.
struct RestrictionRef {
  enum class Source { tester, simulator };

  Source source = Source::tester;
  std::uint64_t index = 0;
  /// For simulator restrictions: how many terms of the simulator prefix were in force.
  std::size_t simulator_terms = 0;
  int coordinate = 0;
  /// The full tuple of packed points with the free coordinate's x set to 0 (its label kept).
  std::vector<std::uint32_t> points;
  std::uint32_t labels = 0;
  std::uint64_t seed = 0;

  json to_json() const {
    return {{"source", source == Source::tester ? "tester" : "simulator"},
            {"index", index},
            {"simulator_terms", simulator_terms},
            {"coordinate", coordinate},
            {"points", points},
            {"labels", labels},
            {"seed", seed}};
  }
};

struct IndicatorComponent {
  int sign = 1;
  RestrictionRef ref;
};

/// 1[∀i: y_i = 1[f(x_i) ≥ t_i]] with f optionally a clipped sum of restrictions.
struct IndicatorStructure {
  RealTable reference;
  std::vector<double> thresholds;
  double reference_scale = 0.0;
  std::vector<IndicatorComponent> components;
};

/// An element of a family: a table of values in [−1, 1] plus a descriptor.
class Distinguisher {
 public:
  Distinguisher(Domain domain, std::vector<double> values, json descriptor = json::object())
      : domain_(domain), values_(std::make_shared<const std::vector<double>>(std::move(values))),
        descriptor_(std::move(descriptor)) {
    if (values_->size() != domain_.size()) throw std::invalid_argument("distinguisher table size mismatch");
    for (double v : *values_)
      if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("distinguisher value outside [-1, 1]");
  }

  const Domain& domain() const { return domain_; }
  std::span<const double> values() const { return *values_; }
  double operator()(std::uint64_t x) const { return (*values_)[x]; }
  const json& descriptor() const { return descriptor_; }

  const IndicatorStructure* indicator() const { return indicator_.get(); }
  const RestrictionRef* restriction() const { return restriction_.get(); }
  Distinguisher& with_indicator(std::shared_ptr<const IndicatorStructure> s) {
    indicator_ = std::move(s);
    return *this;
  }
  Distinguisher& with_restriction(std::shared_ptr<const RestrictionRef> r) {
    restriction_ = std::move(r);
    return *this;
  }

  static Distinguisher constant(Domain domain, double v) {
    return {domain, std::vector<double>(domain.size(), v), {{"kind", "constant"}, {"value", v}}};
  }
  static Distinguisher from_real(const RealTable& t, json descriptor = {{"kind", "table"}}) {
    return {t.domain(), {t.values().begin(), t.values().end()}, std::move(descriptor)};
  }
  static Distinguisher from_boolean(const BooleanFunction& f, json descriptor = {{"kind", "boolean"}}) {
    std::vector<double> v(f.domain().size());
    for (std::uint64_t x = 0; x < v.size(); ++x) v[x] = f(x) ? 1.0 : 0.0;
    return {f.domain(), std::move(v), std::move(descriptor)};
  }

 private:
  Domain domain_;
  std::shared_ptr<const std::vector<double>> values_;
  json descriptor_;
  std::shared_ptr<const IndicatorStructure> indicator_;
  std::shared_ptr<const RestrictionRef> restriction_;
};

class DistinguisherFamily {
 public:
  enum class Access { explicit_list, lazy, sampler };
  using Generator = std::function<Distinguisher(std::uint64_t)>;
  using Sampler = std::function<Distinguisher(Rng&)>;
  using Perturb = std::function<Distinguisher(const Distinguisher&, Rng&)>;

  static DistinguisherFamily explicit_list(Domain domain, std::vector<Distinguisher> elements,
                                           json descriptor = {{"kind", "explicit"}}) {
    for (const auto& e : elements) require_same(e.domain(), domain, "DistinguisherFamily");
    DistinguisherFamily f(domain, Access::explicit_list, std::move(descriptor));
    f.size_ = elements.size();
    f.elements_ = std::make_shared<const std::vector<Distinguisher>>(std::move(elements));
    return f;
  }

  static DistinguisherFamily lazy(Domain domain, std::uint64_t size, Generator at,
                                  json descriptor = {{"kind", "lazy"}}) {
    DistinguisherFamily f(domain, Access::lazy, std::move(descriptor));
    f.size_ = size;
    f.at_ = std::move(at);
    return f;
  }

  static DistinguisherFamily sampler(Domain domain, Sampler sample, Perturb perturb,
                                     json descriptor = {{"kind", "sampler"}}) {
    DistinguisherFamily f(domain, Access::sampler, std::move(descriptor));
    f.sample_ = std::move(sample);
    f.perturb_ = std::move(perturb);
    return f;
  }

  const Domain& domain() const { return domain_; }
  Access access() const { return access_; }
  bool enumerable() const { return access_ != Access::sampler; }
  const json& descriptor() const { return descriptor_; }

  std::uint64_t size() const {
    if (!enumerable()) throw std::logic_error("sampler families have no enumerable size");
    return size_;
  }

  Distinguisher at(std::uint64_t i) const {
    if (!enumerable()) throw std::logic_error("sampler families cannot be indexed");
    if (i >= size_) throw std::out_of_range("family index out of range");
    if (access_ == Access::explicit_list) return (*elements_)[i];
    return at_(i);
  }

  Distinguisher sample(Rng& rng) const {
    if (access_ == Access::sampler) return sample_(rng);
    if (size_ == 0) throw std::logic_error("cannot sample an empty family");
    return at(std::uniform_int_distribution<std::uint64_t>(0, size_ - 1)(rng));
  }

  Distinguisher perturb(const Distinguisher& d, Rng& rng) const {
    if (perturb_) return perturb_(d, rng);
    return sample(rng);
  }

 private:
  DistinguisherFamily(Domain domain, Access access, json descriptor)
      : domain_(domain), access_(access), descriptor_(std::move(descriptor)) {}

  Domain domain_;
  Access access_;
  json descriptor_;
  std::uint64_t size_ = 0;
  std::shared_ptr<const std::vector<Distinguisher>> elements_;
  Generator at_;
  Sampler sample_;
  Perturb perturb_;
};

/// Lexicographic (i, x_{≠i}, y, r) enumeration of one-way restrictions.
struct RestrictionSpace {
  int base_bits = 0;
  int arity = 1;
  int seed_bits = 0;
  bool labeled = true;

  int point_bits() const { return labeled ? base_bits + 1 : base_bits; }
  int index_bits_per_coordinate() const {
    return base_bits * (arity - 1) + (labeled ? arity : 0) + seed_bits;
  }
  std::uint64_t size() const {
    const int b = index_bits_per_coordinate();
    if (b > 56) throw budget_exceeded("restriction family too large to index");
    return static_cast<std::uint64_t>(arity) << b;
  }

  RestrictionRef decode(std::uint64_t index, RestrictionRef::Source source) const {
    RestrictionRef r;
    r.source = source;
    r.index = index;
    const int b = index_bits_per_coordinate();
    r.coordinate = static_cast<int>(index >> b);
    std::uint64_t rest = index & ((std::uint64_t{1} << b) - 1);
    r.seed = rest & ((std::uint64_t{1} << seed_bits) - 1);
    rest >>= seed_bits;
    if (labeled) {
      r.labels = static_cast<std::uint32_t>(rest & ((std::uint64_t{1} << arity) - 1));
      rest >>= arity;
    }
    // x_{≠i} listed in coordinate order, first coordinate most significant.
    r.points.assign(static_cast<std::size_t>(arity), 0);
    const std::uint64_t xmask = (std::uint64_t{1} << base_bits) - 1;
    for (int c = arity - 1; c >= 0; --c) {
      std::uint32_t x = 0;
      if (c != r.coordinate) {
        x = static_cast<std::uint32_t>(rest & xmask);
        rest >>= base_bits;
      }
      if (labeled) x |= ((r.labels >> c) & 1U) << base_bits;
      r.points[static_cast<std::size_t>(c)] = x;
    }
    return r;
  }
};

/// Values of a restriction on every x_i ∈ X, given an evaluator on packed tuples.
template <class TupleEval>
std::vector<double> restriction_values(const RestrictionRef& r, const RestrictionSpace& sp, TupleEval&& eval) {
  const TupleLayout lay{sp.point_bits(), sp.arity};
  const std::uint64_t base = lay.encode(r.points);
  const std::uint64_t n = std::uint64_t{1} << sp.base_bits;
  std::vector<double> v(n);
  for (std::uint64_t x = 0; x < n; ++x) v[x] = eval(base | (x << (r.coordinate * lay.point_bits)), r.seed);
  return v;
}

inline Distinguisher make_restriction(RestrictionRef r, const RestrictionSpace& sp, std::vector<double> values) {
  auto desc = r.to_json();
  desc["kind"] = "restriction";
  Distinguisher d(Domain(sp.base_bits), std::move(values), std::move(desc));
  d.with_restriction(std::make_shared<const RestrictionRef>(std::move(r)));
  return d;
}

inline RestrictionSpace restriction_space(const Tester& t) {
  return {t.base_bits(), t.arity(), t.seed_bits(), t.is_labeled()};
}

/// R(T): all T_{x≠i, y, r}, lazily enumerable.
inline DistinguisherFamily restrictions_of(const Tester& t) {
  const auto sp = restriction_space(t);
  const std::uint64_t size = sp.size();
  auto tester = std::make_shared<const Tester>(t);
  return DistinguisherFamily::lazy(
      Domain(sp.base_bits), size,
      [tester, sp](std::uint64_t i) {
        auto r = sp.decode(i, RestrictionRef::Source::tester);
        auto v = restriction_values(r, sp, [&](std::uint64_t tuple, std::uint64_t seed) {
          return tester->at(tuple, seed) ? 1.0 : 0.0;
        });
        return make_restriction(std::move(r), sp, std::move(v));
      },
      {{"kind", "restrictions"}, {"source", "tester"}, {"arity", sp.arity}, {"seed_bits", sp.seed_bits},
       {"size", size}});
}

/// R(T̃) for a real-valued function on packed tuples (no seed).
inline DistinguisherFamily restrictions_of(const RealTable& table, TupleLayout lay, bool labeled,
                                           RestrictionRef::Source source = RestrictionRef::Source::simulator,
                                           std::size_t simulator_terms = 0) {
  if (table.domain().bits() != lay.bits()) throw domain_mismatch("restrictions_of: table is not over the tuple space");
  const RestrictionSpace sp{labeled ? lay.point_bits - 1 : lay.point_bits, lay.arity, 0, labeled};
  const std::uint64_t size = sp.size();
  auto shared = std::make_shared<const RealTable>(table);
  return DistinguisherFamily::lazy(
      Domain(sp.base_bits), size,
      [shared, sp, source, simulator_terms](std::uint64_t i) {
        auto r = sp.decode(i, source);
        r.simulator_terms = simulator_terms;
        auto v = restriction_values(r, sp, [&](std::uint64_t tuple, std::uint64_t) { return (*shared)(tuple); });
        return make_restriction(std::move(r), sp, std::move(v));
      },
      {{"kind", "restrictions"},
       {"source", source == RestrictionRef::Source::tester ? "tester" : "simulator"},
       {"arity", sp.arity},
       {"simulator_terms", simulator_terms},
       {"size", size}});
}

inline constexpr double threshold_sentinel = 2.0;

/// Sorted distinct attained values plus a sentinel above 1.
inline std::vector<double> default_threshold_grid(const RealTable& f) {
  std::set<double> s(f.values().begin(), f.values().end());
  std::vector<double> g(s.begin(), s.end());
  g.push_back(threshold_sentinel);
  return g;
}

/// The behaviours of thresholds t ∈ (0, 1]: positive attained values, plus the empty set if max < 1.
inline std::vector<double> proof_threshold_grid(const RealTable& f) {
  std::set<double> s;
  for (double v : f.values())
    if (v > 0.0) s.insert(v);
  std::vector<double> g(s.begin(), s.end());
  if (g.empty() || g.back() < 1.0) g.push_back(threshold_sentinel);
  return g;
}

/// The consistency indicator of (f, t) over packed labeled tuples.
inline Distinguisher consistency_indicator(std::shared_ptr<const IndicatorStructure> s, int arity,
                                           json descriptor = json::object()) {
  const RealTable& f = s->reference;
  const int n = f.domain().bits();
  if (static_cast<int>(s->thresholds.size()) != arity) throw std::invalid_argument("one threshold per coordinate");
  const TupleLayout lay{n + 1, arity};
  if (lay.bits() > max_table_bits) throw budget_exceeded("consistency indicator tuple space too large");
  // above[i][x] = 1[f(x) ≥ t_i]
  std::vector<std::vector<std::uint8_t>> above(static_cast<std::size_t>(arity),
                                               std::vector<std::uint8_t>(f.domain().size()));
  for (int i = 0; i < arity; ++i)
    for (std::uint64_t x = 0; x < f.domain().size(); ++x)
      above[static_cast<std::size_t>(i)][x] = f(x) >= s->thresholds[static_cast<std::size_t>(i)];
  const Domain dom(lay.bits());
  std::vector<double> v(dom.size());
  for (std::uint64_t t = 0; t < dom.size(); ++t) {
    bool ok = true;
    for (int i = 0; i < arity && ok; ++i) {
      const std::uint32_t p = lay.point(t, i);
      ok = point_y(p, n) == (above[static_cast<std::size_t>(i)][point_x(p, n)] != 0);
    }
    v[t] = ok ? 1.0 : 0.0;
  }
  if (descriptor.empty()) descriptor = {{"kind", "consistency"}, {"thresholds", s->thresholds}};
  Distinguisher d(dom, std::move(v), std::move(descriptor));
  d.with_indicator(std::move(s));
  return d;
}

inline Distinguisher consistency_indicator(const RealTable& f, std::vector<double> thresholds) {
  const int m = static_cast<int>(thresholds.size());
  auto s = std::make_shared<IndicatorStructure>(IndicatorStructure{f, std::move(thresholds), 0.0, {}});
  return consistency_indicator(std::move(s), m);
}

/// Γ_m(F): every f ∈ F with every threshold vector from its grid.
inline DistinguisherFamily consistency_family(const std::vector<RealTable>& fs, int m,
                                              std::optional<std::vector<std::vector<double>>> grids = std::nullopt) {
  if (fs.empty()) throw std::invalid_argument("consistency_family: empty function list");
  if (m < 1) throw std::invalid_argument("consistency_family: arity must be positive");
  for (const auto& f : fs) require_same(f.domain(), fs.front().domain(), "consistency_family");
  std::vector<std::vector<double>> g;
  if (grids) {
    if (grids->size() != fs.size()) throw std::invalid_argument("consistency_family: one grid per function");
    g = *grids;
  } else {
    for (const auto& f : fs) g.push_back(default_threshold_grid(f));
  }
  // offsets[k] = index of the first indicator of fs[k]
  std::vector<std::uint64_t> offsets{0};
  for (const auto& grid : g) {
    if (grid.empty()) throw std::invalid_argument("consistency_family: empty threshold grid");
    std::uint64_t c = 1;
    for (int i = 0; i < m; ++i) c *= grid.size();
    offsets.push_back(offsets.back() + c);
  }
  const int n = fs.front().domain().bits();
  auto refs = std::make_shared<const std::vector<RealTable>>(fs);
  auto shared_grids = std::make_shared<const std::vector<std::vector<double>>>(std::move(g));
  const std::uint64_t total = offsets.back();
  return DistinguisherFamily::lazy(
      Domain((n + 1) * m), total,
      [refs, shared_grids, offsets, m](std::uint64_t idx) {
        const auto k = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), idx) -
                                                offsets.begin() - 1);
        std::uint64_t rest = idx - offsets[k];
        const auto& grid = (*shared_grids)[k];
        std::vector<double> t(static_cast<std::size_t>(m));
        for (int i = m - 1; i >= 0; --i) {
          t[static_cast<std::size_t>(i)] = grid[rest % grid.size()];
          rest /= grid.size();
        }
        auto s = std::make_shared<IndicatorStructure>(IndicatorStructure{(*refs)[k], t, 0.0, {}});
        return consistency_indicator(std::move(s), m,
                                     {{"kind", "consistency"}, {"function", k}, {"thresholds", t}});
      },
      {{"kind", "consistency_family"}, {"functions", fs.size()}, {"arity", m}, {"size", total}});
}

struct SumTerm {
  int sign = 1;
  Distinguisher element;
  json provenance = json::object();
};

/// [offset + scale·Σ σ_j f_j(x)]_0^1, projected once.
class StructuredSum {
 public:
  StructuredSum(Domain domain, double scale, double offset = 0.0) : domain_(domain), scale_(scale), offset_(offset) {}

  const Domain& domain() const { return domain_; }
  double scale() const { return scale_; }
  double offset() const { return offset_; }
  const std::vector<SumTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  void append(int sign, Distinguisher element, json provenance = json::object()) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("term sign must be +1 or -1");
    require_same(element.domain(), domain_, "StructuredSum");
    terms_.push_back({sign, std::move(element), std::move(provenance)});
  }

  /// Σ σ_j f_j(x) over the first `prefix` terms, in term order.
  double raw(std::uint64_t x, std::size_t prefix) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < prefix; ++j) acc += terms_[j].sign * terms_[j].element(x);
    return acc;
  }
  double raw(std::uint64_t x) const { return raw(x, terms_.size()); }

  double operator()(std::uint64_t x) const { return clip01(offset_ + scale_ * raw(x)); }

  RealTable table(std::size_t prefix) const {
    std::vector<double> v(domain_.size());
    for (std::uint64_t x = 0; x < v.size(); ++x) v[x] = clip01(offset_ + scale_ * raw(x, prefix));
    return {domain_, std::move(v)};
  }
  RealTable table() const { return table(terms_.size()); }

  /// Projections applied per evaluation; always one.
  static constexpr int projections_per_evaluation() { return 1; }

  json to_json() const {
    json terms = json::array();
    for (const auto& t : terms_)
      terms.push_back({{"sign", t.sign}, {"element", t.element.descriptor()}, {"provenance", t.provenance}});
    return {{"domain_bits", domain_.bits()}, {"scale", scale_}, {"offset", offset_}, {"terms", std::move(terms)}};
  }

 private:
  Domain domain_;
  double scale_;
  double offset_;
  std::vector<SumTerm> terms_;
};

/// w(x) = D(x)·(g(x) − h(x)).
inline std::vector<double> residual_weights(const RealTable& g, const RealTable& h, const Distribution& d) {
  require_same(g.domain(), h.domain(), "residual_weights");
  require_same(g.domain(), d.domain(), "residual_weights");
  std::vector<double> w(g.domain().size());
  for (std::uint64_t x = 0; x < w.size(); ++x) w[x] = d(x) * (g(x) - h(x));
  return w;
}

inline double correlation(const Distinguisher& e, std::span<const double> residual) {
  if (e.domain().size() != residual.size()) throw domain_mismatch("correlation: domain mismatch");
  CompensatedSum s;
  const auto v = e.values();
  for (std::size_t x = 0; x < residual.size(); ++x)
    if (v[x] != 0.0) s.add(v[x] * residual[x]);
  return s.value();
}

/// |E_D[d(x)(g(x) − h(x))]|.
inline double advantage(const Distinguisher& e, const RealTable& g, const RealTable& h, const Distribution& d) {
  require_same(e.domain(), g.domain(), "advantage");
  return std::abs(correlation(e, residual_weights(g, h, d)));
}

enum class SearchMode { exhaustive, sampled, greedy };

inline std::string search_mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::exhaustive: return "exhaustive";
    case SearchMode::sampled: return "sampled";
    case SearchMode::greedy: return "greedy";
  }
  return "?";
}

inline SearchMode parse_search_mode(const std::string& s) {
  if (s == "exhaustive") return SearchMode::exhaustive;
  if (s == "sampled") return SearchMode::sampled;
  if (s == "greedy") return SearchMode::greedy;
  throw std::invalid_argument("unknown search mode '" + s + "'");
}

struct SearchOptions {
  SearchMode mode = SearchMode::exhaustive;
  std::uint64_t budget = 5000;
};

struct Violation {
  Distinguisher element;
  int sign = 1;
  double advantage = 0.0;
  /// Enumeration index for enumerable families.
  std::optional<std::uint64_t> index;
};

struct ViolatorResult {
  std::optional<Violation> violation;
  /// True only when an exhaustive scan found nothing above δ.
  bool certified = false;
  std::uint64_t evaluated = 0;
  double best_advantage = 0.0;
};

/// Search ±fam for an element with advantage > delta against g − h.
inline ViolatorResult find_violator(const DistinguisherFamily& fam, const RealTable& g, const RealTable& h,
                                    double delta, const Distribution& d, const SearchOptions& opt, Rng& rng) {
  if (!(delta > 0.0)) throw std::invalid_argument("find_violator: delta must be positive");
  require_same(fam.domain(), g.domain(), "find_violator");
  const auto w = residual_weights(g, h, d);
  ViolatorResult res;
  std::optional<Distinguisher> best;
  double best_corr = 0.0;
  std::optional<std::uint64_t> best_index;
  auto consider = [&](Distinguisher e, std::optional<std::uint64_t> idx) {
    const double c = correlation(e, w);
    ++res.evaluated;
    if (!best || std::abs(c) > std::abs(best_corr)) {
      best_corr = c;
      best = std::move(e);
      best_index = idx;
    }
  };

  if (opt.mode == SearchMode::exhaustive) {
    if (!fam.enumerable()) throw std::invalid_argument("find_violator: exhaustive search needs an enumerable family");
    for (std::uint64_t i = 0; i < fam.size(); ++i) consider(fam.at(i), i);
  } else {
    if (opt.budget == 0) throw std::invalid_argument("find_violator: budget must be positive");
    const bool indexable = fam.enumerable() && fam.size() > 0;
    if (fam.enumerable() && fam.size() == 0) {
      res.certified = true;
      return res;
    }
    const std::uint64_t draws = opt.mode == SearchMode::greedy ? std::max<std::uint64_t>(1, opt.budget / 2) : opt.budget;
    for (std::uint64_t k = 0; k < draws; ++k) {
      if (indexable) {
        const auto i = std::uniform_int_distribution<std::uint64_t>(0, fam.size() - 1)(rng);
        consider(fam.at(i), i);
      } else {
        consider(fam.sample(rng), std::nullopt);
      }
    }
    if (opt.mode == SearchMode::greedy) {
      for (std::uint64_t k = draws; k < opt.budget && best; ++k) {
        auto cand = fam.perturb(*best, rng);
        const double c = correlation(cand, w);
        ++res.evaluated;
        if (std::abs(c) > std::abs(best_corr)) {
          best_corr = c;
          best = std::move(cand);
          best_index.reset();
        }
      }
    }
  }

  res.best_advantage = std::abs(best_corr);
  if (best && std::abs(best_corr) > delta) {
    res.violation = Violation{std::move(*best), best_corr >= 0 ? 1 : -1, std::abs(best_corr), best_index};
  } else {
    res.certified = opt.mode == SearchMode::exhaustive;
  }
  return res;
}

/// Max advantage over ±fam by full scan.
inline double max_advantage(const DistinguisherFamily& fam, const RealTable& g, const RealTable& h,
                            const Distribution& d) {
  const auto w = residual_weights(g, h, d);
  double best = 0.0;
  for (std::uint64_t i = 0; i < fam.size(); ++i) best = std::max(best, std::abs(correlation(fam.at(i), w)));
  return best;
}

}  // namespace simtest
