#pragma once

// Partitions and symmetric properties, density testers, consistency counters,
// and regularity templates.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "simtest/classifier.hpp"
#include "simtest/core.hpp"
#include "simtest/families.hpp"
#include "simtest/regularity.hpp"
#include "simtest/tester.hpp"
#include "simtest/testing.hpp"

namespace simtest {

/// A disjoint cover of X with a part index per point.
class Partition {
 public:
  Partition(Domain domain, std::vector<std::uint32_t> map) : domain_(domain), map_(std::move(map)) {
    if (map_.size() != domain_.size())
      throw std::invalid_argument("partition map must have one entry per point");
    std::uint32_t k = 0;
    for (auto p : map_) k = std::max(k, p + 1);
    parts_.assign(k, {});
    for (std::uint64_t x = 0; x < map_.size(); ++x) parts_[map_[x]].push_back(x);
    for (std::size_t j = 0; j < parts_.size(); ++j)
      if (parts_[j].empty()) throw std::invalid_argument("partition part " + std::to_string(j) + " is empty");
  }

  static Partition single(Domain domain) { return {domain, std::vector<std::uint32_t>(domain.size(), 0)}; }

  const Domain& domain() const { return domain_; }
  std::size_t size() const { return parts_.size(); }
  const std::vector<std::uint32_t>& map() const { return map_; }
  const std::vector<std::uint64_t>& part(std::size_t j) const { return parts_.at(j); }
  std::uint32_t operator()(std::uint64_t x) const { return map_[x]; }

  /// Parts pairwise disjoint, covering, and consistent with the map.
  bool well_formed() const {
    std::vector<int> seen(domain_.size(), 0);
    for (std::size_t j = 0; j < parts_.size(); ++j)
      for (auto x : parts_[j]) {
        if (x >= domain_.size() || map_[x] != j) return false;
        ++seen[x];
      }
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  }

  std::optional<ClassifierCircuit> classifier;
  json provenance = json::object();

 private:
  Domain domain_;
  std::vector<std::uint32_t> map_;
  std::vector<std::vector<std::uint64_t>> parts_;
};

inline bool operator==(const Partition& a, const Partition& b) {
  return a.domain() == b.domain() && a.map() == b.map();
}

/// Partition by the n-bit popcount classes {0..c_1}, {c_1+1..c_2}, …; `cuts` lists the last weight of each part.
inline Partition popcount_partition(int n, const std::vector<int>& cuts) {
  const Domain d(n);
  std::vector<std::uint32_t> map(d.size());
  for (std::uint64_t x = 0; x < d.size(); ++x) {
    const int w = std::popcount(x);
    std::uint32_t j = 0;
    while (j < cuts.size() && w > cuts[j]) ++j;
    map[x] = j;
  }
  return {d, std::move(map)};
}

/// S_ij = {x : f_j(x) ≥ t_ij} for the indicator terms of a sum.
inline std::vector<std::vector<std::uint8_t>> threshold_sets(const StructuredSum& sum, int m) {
  std::vector<std::vector<std::uint8_t>> sets;
  for (std::size_t j = 0; j < sum.size(); ++j) {
    const auto* s = sum.terms()[j].element.indicator();
    if (!s) throw std::invalid_argument("extract_partition: term " + std::to_string(j) + " lacks indicator structure");
    if (static_cast<int>(s->thresholds.size()) != m) throw std::invalid_argument("extract_partition: arity mismatch");
    for (int i = 0; i < m; ++i) {
      std::vector<std::uint8_t> in(s->reference.domain().size());
      for (std::uint64_t x = 0; x < in.size(); ++x) in[x] = s->reference(x) >= s->thresholds[static_cast<std::size_t>(i)];
      sets.push_back(std::move(in));
    }
  }
  return sets;
}

/// Nonempty cells of the common refinement of all S_ij, numbered by first point.
inline Partition extract_partition(const StructuredSum& sum, int m, const Domain& x_domain,
                                   const Tester* classifier_source = nullptr) {
  const auto sets = threshold_sets(sum, m);
  std::map<std::vector<std::uint8_t>, std::uint32_t> cell;
  std::vector<std::uint32_t> map(x_domain.size());
  for (std::uint64_t x = 0; x < x_domain.size(); ++x) {
    std::vector<std::uint8_t> sig;
    sig.reserve(sets.size());
    for (const auto& s : sets) sig.push_back(s[x]);
    auto [it, fresh] = cell.emplace(std::move(sig), static_cast<std::uint32_t>(cell.size()));
    map[x] = it->second;
  }
  Partition p(x_domain, std::move(map));
  json thresholds = json::array();
  for (const auto& t : sum.terms()) thresholds.push_back(t.element.indicator()->thresholds);
  p.provenance = {{"terms", sum.size()}, {"arity", m}, {"sets", sets.size()}, {"thresholds", thresholds}};
  if (classifier_source) p.classifier = build_classifier(sum, m, *classifier_source);
  return p;
}

using DensityVector = std::vector<double>;

/// μ_j(f) = E_D[f(x)·1[x ∈ S_j]].
inline DensityVector density_vector(const BooleanFunction& f, const Partition& part, const Distribution& d) {
  require_same(f.domain(), part.domain(), "density_vector");
  require_same(f.domain(), d.domain(), "density_vector");
  DensityVector mu(part.size(), 0.0);
  std::vector<CompensatedSum> acc(part.size());
  for (std::uint64_t x = 0; x < f.domain().size(); ++x)
    if (f(x)) acc[part(x)].add(d(x));
  for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = acc[j].value();
  return mu;
}

inline constexpr double membership_tolerance = 1e-12;

/// Q = {f : E[T̃(x, f(x))] ≥ 1/2} under x ~ D^m.
class QProperty {
 public:
  QProperty(RealTable ttilde, Distribution d, int m) : ttilde_(std::move(ttilde)), d_(std::move(d)), m_(m) {
    if (ttilde_.domain().bits() != (d_.domain().bits() + 1) * m)
      throw domain_mismatch("q_property: simulated tester is not over (X × {0,1})^m");
  }

  double expected(const BooleanFunction& f) const {
    return exact_expectation(ttilde_, deterministic_labels(d_, m_, f));
  }
  bool contains(const BooleanFunction& f) const { return expected(f) >= 0.5 - membership_tolerance; }
  bool operator()(const BooleanFunction& f) const { return contains(f); }
  int arity() const { return m_; }
  const RealTable& simulator() const { return ttilde_; }

 private:
  RealTable ttilde_;
  Distribution d_;
  int m_;
};

inline QProperty q_property(const RealTable& ttilde, const Distribution& d, int m) { return {ttilde, d, m}; }

using Membership = std::function<bool(const BooleanFunction&)>;

struct SandwichReport {
  std::size_t checked = 0;
  std::size_t q_members = 0;
  std::vector<BooleanFunction> p_not_in_q;
  std::vector<BooleanFunction> q_not_in_p_eps;

  bool holds() const { return p_not_in_q.empty() && q_not_in_p_eps.empty(); }
  std::size_t counterexamples() const { return p_not_in_q.size() + q_not_in_p_eps.size(); }

  json to_json() const {
    auto strs = [](const std::vector<BooleanFunction>& v) {
      json a = json::array();
      for (const auto& f : v) a.push_back(f.to_string());
      return a;
    };
    return {{"checked", checked},
            {"q_members", q_members},
            {"holds", holds()},
            {"p_not_in_q", strs(p_not_in_q)},
            {"q_not_in_p_eps", strs(q_not_in_p_eps)}};
  }
};

/// P ⊆ Q ⊆ P_ε over the whole function universe or a challenge list.
inline SandwichReport sandwich_check(const PropertySet& p, const Membership& q, double eps,
                                     std::optional<std::vector<BooleanFunction>> universe = std::nullopt) {
  SandwichReport r;
  auto visit = [&](const BooleanFunction& f) {
    ++r.checked;
    const bool in_q = q(f);
    r.q_members += in_q;
    if (p.contains(f) && !in_q) r.p_not_in_q.push_back(f);
    if (in_q && !eps_closure_member(f, p, eps)) r.q_not_in_p_eps.push_back(f);
  };
  if (universe) {
    for (const auto& f : *universe) visit(f);
  } else {
    PropertySet::for_each_function(p.domain(), visit);
  }
  return r;
}

struct SwapReport {
  std::size_t swaps = 0;
  std::size_t membership_changes = 0;
  double max_value_change = 0.0;

  bool holds() const { return membership_changes == 0; }
  json to_json() const {
    return {{"swaps", swaps}, {"membership_changes", membership_changes}, {"max_value_change", max_value_change},
            {"holds", holds()}};
  }
};

/// Every transposition of two points inside one part, applied to every function.
template <class Value>
SwapReport single_swap_sweep(const Partition& part, Value&& value, double threshold) {
  SwapReport r;
  PropertySet::for_each_function(part.domain(), [&](const BooleanFunction& f) {
    const double base = value(f);
    const bool in = base >= threshold - membership_tolerance;
    for (std::size_t j = 0; j < part.size(); ++j) {
      const auto& pts = part.part(j);
      for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
          if (f(pts[a]) == f(pts[b])) continue;
          const auto g = f.with_flipped(pts[a]).with_flipped(pts[b]);
          const double v = value(g);
          ++r.swaps;
          r.max_value_change = std::max(r.max_value_change, std::abs(v - base));
          if ((v >= threshold - membership_tolerance) != in) ++r.membership_changes;
        }
    }
  });
  return r;
}

/// A k-part symmetric property: membership is a predicate on density vectors.
struct SymmetricProperty {
  Partition partition;
  Distribution distribution;
  std::function<bool(const DensityVector&)> accept;
  json descriptor = json::object();

  bool contains(const BooleanFunction& f) const { return accept(density_vector(f, partition, distribution)); }
  PropertySet members() const {
    return PropertySet::from_predicate(partition.domain(), [&](const BooleanFunction& f) { return contains(f); });
  }
};

/// Round to the nearest multiple of δ; exact halves round down.
inline std::int64_t round_to_grid(double v, double delta) {
  return static_cast<std::int64_t>(std::ceil(v / delta - 0.5));
}

struct DensityTester {
  Tester tester;
  Partition partition;
  double epsilon = 0.0;
  double delta = 0.0;
  int samples = 0;
  std::int64_t grid_max = 0;
  /// accept[index(v)] over the δ-grid {0..grid_max}^k, row-major.
  std::shared_ptr<const std::vector<std::uint8_t>> table;
  std::size_t accepting_points = 0;

  json to_json() const {
    return {{"epsilon", epsilon},   {"delta", delta},
            {"samples", samples},   {"parts", partition.size()},
            {"grid_max", grid_max}, {"accepting_points", accepting_points},
            {"table_size", table ? table->size() : 0}};
  }
};

/// m = ⌈C_h·ln(3k)/δ²⌉ with δ = ε/(4k).
inline int density_tester_samples(std::size_t k, double eps, double c_h = 2.0) {
  const double delta = eps / (4.0 * static_cast<double>(k));
  return static_cast<int>(std::ceil(c_h * std::log(3.0 * static_cast<double>(k)) / (delta * delta)));
}

inline DensityTester build_density_tester(const Partition& part, const PropertySet& q, double eps,
                                          const Distribution& d, double c_h = 2.0) {
  if (!(eps > 0.0)) throw std::invalid_argument("build_density_tester: eps must be positive");
  require_same(part.domain(), q.domain(), "build_density_tester");
  const std::size_t k = part.size();
  const double delta = eps / (4.0 * static_cast<double>(k));
  const int m = density_tester_samples(k, eps, c_h);
  const auto gmax = static_cast<std::int64_t>(std::ceil(1.0 / delta - 1e-9));
  std::size_t cells = 1;
  for (std::size_t j = 0; j < k; ++j) {
    cells *= static_cast<std::size_t>(gmax + 1);
    if (cells > (std::size_t{1} << 26)) throw budget_exceeded("density tester grid too large");
  }
  // Distinct member profiles, then mark grid points within 2kδ in L1.
  std::vector<DensityVector> profiles;
  {
    std::map<DensityVector, int> seen;
    for (const auto& f : q.members()) {
      auto mu = density_vector(f, part, d);
      if (seen.emplace(mu, 0).second) profiles.push_back(std::move(mu));
    }
  }
  auto table = std::make_shared<std::vector<std::uint8_t>>(cells, 0);
  const double radius = 2.0 * static_cast<double>(k) * delta + 1e-12;
  std::size_t accepting = 0;
  std::vector<std::int64_t> v(k, 0);
  for (std::size_t idx = 0; idx < cells; ++idx) {
    std::size_t rest = idx;
    for (std::size_t j = k; j-- > 0;) {
      v[j] = static_cast<std::int64_t>(rest % static_cast<std::size_t>(gmax + 1));
      rest /= static_cast<std::size_t>(gmax + 1);
    }
    for (const auto& mu : profiles) {
      double l1 = 0.0;
      for (std::size_t j = 0; j < k; ++j) l1 += std::abs(mu[j] - static_cast<double>(v[j]) * delta);
      if (l1 <= radius) {
        (*table)[idx] = 1;
        ++accepting;
        break;
      }
    }
  }
  const int n = part.domain().bits();
  auto map = std::make_shared<const std::vector<std::uint32_t>>(part.map());
  std::shared_ptr<const std::vector<std::uint8_t>> ctable = table;
  Tester t = Tester::labeled(
      n, m, 0,
      [map, ctable, k, m, n, delta, gmax](std::span<const std::uint32_t> pts, std::uint64_t) {
        std::vector<std::int64_t> ones(k, 0);
        for (auto p : pts)
          if (point_y(p, n)) ++ones[(*map)[point_x(p, n)]];
        std::size_t idx = 0;
        for (std::size_t j = 0; j < k; ++j) {
          const double mu_hat = static_cast<double>(ones[j]) / static_cast<double>(m);
          const auto g = std::clamp<std::int64_t>(round_to_grid(mu_hat, delta), 0, gmax);
          idx = idx * static_cast<std::size_t>(gmax + 1) + static_cast<std::size_t>(g);
        }
        return (*ctable)[idx] != 0;
      },
      "composed", {{"kind", "density_tester"}, {"parts", k}, {"samples", m}, {"delta", delta}});
  return {std::move(t), part, eps, delta, m, gmax, std::move(ctable), accepting};
}

/// Accept iff the sample is consistent with strictly more functions of F_+ than of F_− (with multiplicity).
struct ConsistencyCounter {
  int arity = 0;
  int n = 0;
  std::vector<BooleanFunction> plus;
  std::vector<BooleanFunction> minus;

  static std::size_t consistent(const std::vector<BooleanFunction>& fs, std::span<const std::uint32_t> sample, int n) {
    std::size_t c = 0;
    for (const auto& f : fs) {
      bool ok = true;
      for (auto p : sample)
        if (f(point_x(p, n)) != point_y(p, n)) {
          ok = false;
          break;
        }
      c += ok;
    }
    return c;
  }

  json to_json() const {
    json ps = json::array(), ms = json::array();
    for (const auto& f : plus) ps.push_back(f.to_string());
    for (const auto& f : minus) ms.push_back(f.to_string());
    return {{"arity", arity}, {"n", n}, {"plus", ps}, {"minus", ms}};
  }
};

inline bool run_consistency_counter(const ConsistencyCounter& c, std::span<const std::uint32_t> sample) {
  if (sample.size() != static_cast<std::size_t>(c.arity))
    throw std::invalid_argument("run_consistency_counter: expected " + std::to_string(c.arity) + " samples");
  return ConsistencyCounter::consistent(c.plus, sample, c.n) > ConsistencyCounter::consistent(c.minus, sample, c.n);
}

inline Tester counter_tester(const ConsistencyCounter& c) {
  auto shared = std::make_shared<const ConsistencyCounter>(c);
  return Tester::labeled(
      c.n, c.arity, 0,
      [shared](std::span<const std::uint32_t> pts, std::uint64_t) { return run_consistency_counter(*shared, pts); },
      "composed", {{"kind", "consistency_counter"}, {"plus", c.plus.size()}, {"minus", c.minus.size()}});
}

/// C: the exact-consistency indicators of every Boolean function on X.
inline DistinguisherFamily exact_consistency_family(const Domain& x_domain, int m) {
  std::vector<Distinguisher> elems;
  PropertySet::for_each_function(x_domain, [&](const BooleanFunction& f) {
    auto s = std::make_shared<IndicatorStructure>(
        IndicatorStructure{RealTable::from_boolean(f), std::vector<double>(static_cast<std::size_t>(m), 1.0), 0.0, {}});
    elems.push_back(consistency_indicator(std::move(s), m, {{"kind", "exact_consistency"}, {"f", f.to_string()}}));
  });
  return DistinguisherFamily::explicit_list(Domain((x_domain.bits() + 1) * m), std::move(elems),
                                            {{"kind", "exact_consistency_family"}, {"arity", m}});
}

struct CounterOptions {
  int boost_reps = 1;
  SearchOptions search;
  std::uint64_t seed = 0;
  /// Starting point of the simulator; 1/2 makes T̃ > 1/2 coincide with the counter's strict majority.
  double offset = 0.5;
};

struct CounterBuild {
  ConsistencyCounter counter;
  SimulationReport report;
  RealTable ttilde;
  RealTable tbar;
  Tester source;
};

inline CounterBuild build_consistency_counter(const Tester& t, double gamma, const Distribution& d,
                                              const CounterOptions& opt = {}) {
  const Tester boosted = boost(t, opt.boost_reps);
  const int m = boosted.arity();
  const int n = boosted.base_bits();
  if ((n + 1) * m > max_table_bits) throw budget_exceeded("build_consistency_counter: tuple space too large");
  const auto tbar = mean_tester(boosted).table;
  SimulationParams p;
  p.delta = gamma;
  p.offset = opt.offset;
  p.search = opt.search;
  p.seed = opt.seed;
  auto rep = ttv_simulate(tbar, exact_consistency_family(Domain(n), m), regularity_measure(d, m), p);
  ConsistencyCounter c{m, n, {}, {}};
  for (const auto& term : rep.sum.terms()) {
    const auto* s = term.element.indicator();
    BooleanFunction f = BooleanFunction::from_predicate(Domain(n), [&](std::uint64_t x) { return s->reference(x) >= 0.5; });
    (term.sign > 0 ? c.plus : c.minus).push_back(std::move(f));
  }
  auto tt = rep.sum.table();
  return {std::move(c), std::move(rep), std::move(tt), tbar, boosted};
}

/// Uniform-sample histogram of labeled points: counts[x | y << n].
struct SampleHistogram {
  int n = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  static SampleHistogram from_points(int n, std::span<const std::uint32_t> pts) {
    SampleHistogram h{n, std::vector<std::uint64_t>(std::size_t{2} << n, 0), pts.size()};
    for (auto p : pts) ++h.counts.at(p);
    return h;
  }

  /// Multinomial draw of `size` i.i.d. labeled points with x ~ D and y = g(x).
  static SampleHistogram draw(const Distribution& d, const BooleanFunction& g, std::uint64_t size, Rng& rng) {
    const int n = d.domain().bits();
    SampleHistogram h{n, std::vector<std::uint64_t>(std::size_t{2} << n, 0), size};
    std::uint64_t left = size;
    double mass_left = 1.0;
    for (std::uint64_t x = 0; x < d.domain().size() && left > 0; ++x) {
      const double p = mass_left > 0.0 ? std::clamp(d(x) / mass_left, 0.0, 1.0) : 1.0;
      const std::uint64_t c = x + 1 == d.domain().size() ? left : std::binomial_distribution<std::uint64_t>(left, p)(rng);
      h.counts[labeled_point(x, g(x), n)] = c;
      left -= c;
      mass_left -= d(x);
    }
    return h;
  }
};

struct TemplateSet {
  std::vector<RealTable> templates;
  /// Index of the P member whose simulation produced each template.
  std::vector<std::size_t> source;
  std::vector<std::size_t> terms;
  DistinguisherFamily family;
  double delta = 0.0;
  int m = 0;
  Distribution distribution;
  /// Template index of each member of P, in member order.
  std::vector<std::size_t> assignment{};

  /// Max advantage of ±F_s on g − h.
  double max_adv(const RealTable& g, std::size_t which) const {
    return max_advantage(family, g, templates.at(which), distribution);
  }
  /// ∃ h with max advantage ≤ δ' (δ by default).
  bool compatible(const BooleanFunction& f, std::optional<double> delta_prime = std::nullopt) const {
    const auto g = RealTable::from_boolean(f);
    const double lim = delta_prime.value_or(delta);
    for (std::size_t h = 0; h < templates.size(); ++h)
      if (max_adv(g, h) <= lim) return true;
    return false;
  }

  json to_json() const {
    return {{"templates", templates.size()}, {"delta", delta},       {"m", m},
            {"family", family.descriptor()}, {"family_size", family.size()}, {"terms", terms}};
  }
};

/// F_s as 0/1 distinguishers from all circuit tables with at most `gates` gates.
inline DistinguisherFamily small_circuit_family(int n, int gates) {
  std::vector<Distinguisher> elems;
  for (const auto& f : enumerate_circuit_tables(n, gates))
    elems.push_back(Distinguisher::from_boolean(f, {{"kind", "circuit_table"}, {"table", f.to_string()}}));
  return DistinguisherFamily::explicit_list(Domain(n), std::move(elems),
                                            {{"kind", "small_circuits"}, {"max_gates", gates}, {"n", n}});
}

inline TemplateSet build_template_set(const PropertySet& p, const DistinguisherFamily& fs, int m, const Distribution& d,
                                      std::uint64_t seed = 0) {
  if (!fs.enumerable()) throw std::invalid_argument("build_template_set: F_s must be enumerable");
  const double delta = 1.0 / (13.0 * m);
  TemplateSet ts{{}, {}, {}, fs, delta, m, d};
  SimulationParams sp;
  sp.delta = delta;
  sp.seed = seed;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto rep = ttv_simulate(RealTable::from_boolean(p.members()[i]), fs, d, sp);
    auto h = rep.sum.table();
    const auto dup = std::find(ts.templates.begin(), ts.templates.end(), h);
    ts.assignment.push_back(static_cast<std::size_t>(dup - ts.templates.begin()));
    if (dup == ts.templates.end()) {
      ts.templates.push_back(std::move(h));
      ts.source.push_back(i);
      ts.terms.push_back(rep.k());
    }
  }
  return ts;
}

/// ⌈C_h·(ln|F_s| + ln(1/β))/α²⌉.
inline std::uint64_t template_sample_size(std::size_t family_size, double alpha, double beta, double c_h = 2.0) {
  return static_cast<std::uint64_t>(
      std::ceil(c_h * (std::log(static_cast<double>(family_size)) + std::log(1.0 / beta)) / (alpha * alpha)));
}

/// Accept iff some template has every estimated |E[d(x)(g(x) − h(x))]| ≤ δ + α.
inline bool template_tester(const TemplateSet& ts, double alpha, const SampleHistogram& sample, double beta = 0.1,
                            double c_h = 2.0) {
  const auto need = template_sample_size(ts.family.size(), alpha, beta, c_h);
  if (sample.total < need)
    throw std::invalid_argument("template_tester: " + std::to_string(sample.total) + " samples, need " +
                                std::to_string(need));
  const int n = sample.n;
  const std::uint64_t xs = std::uint64_t{1} << n;
  const double inv = 1.0 / static_cast<double>(sample.total);
  for (const auto& h : ts.templates) {
    // Empirical residual mass per x: (1/N) Σ_s 1[x_s = x]·(y_s − h(x)).
    std::vector<double> r(xs);
    for (std::uint64_t x = 0; x < xs; ++x) {
      const double c0 = static_cast<double>(sample.counts[labeled_point(x, false, n)]);
      const double c1 = static_cast<double>(sample.counts[labeled_point(x, true, n)]);
      r[x] = inv * (c1 * (1.0 - h(x)) - c0 * h(x));
    }
    bool ok = true;
    for (std::uint64_t i = 0; i < ts.family.size() && ok; ++i) ok = std::abs(correlation(ts.family.at(i), r)) <= ts.delta + alpha;
    if (ok) return true;
  }
  return false;
}

}  // namespace simtest
