#pragma once

// The main-hard direction end to end: supersimulate a tester, read off the
// partition its simulator induces, and check the sandwich P ⊆ Q ⊆ P_ε.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "simtest/circuits.hpp"
#include "simtest/classifier.hpp"
#include "simtest/constructions.hpp"
#include "simtest/core.hpp"
#include "simtest/families.hpp"
#include "simtest/regularity.hpp"
#include "simtest/tester.hpp"
#include "simtest/testing.hpp"

namespace simtest {

/// T(x, y, r) = [∀i: x_i ∈ H → y_i = 1] ∧ ¬(r_1 ∧ … ∧ r_ℓ) with H = {x : x_1 = 1}, as a circuit.
inline Tester anchored_ones_tester(int n, int m, int ell) {
  if (n < 1 || m < 1 || ell < 0) throw std::invalid_argument("anchored_ones_tester: bad shape");
  const int pb = n + 1;
  CircuitBuilder b(static_cast<std::uint32_t>(pb * m + ell));
  CircuitBuilder::Wire ok = b.const_bit(true);
  for (int i = 0; i < m; ++i) {
    const auto x1 = b.input(static_cast<std::uint32_t>(i * pb));
    const auto y = b.input(static_cast<std::uint32_t>(i * pb + n));
    ok = b.and_(ok, b.or_(b.not_(x1), y));
  }
  if (ell > 0) {
    auto all = b.input(static_cast<std::uint32_t>(pb * m));
    for (int k = 1; k < ell; ++k) all = b.and_(all, b.input(static_cast<std::uint32_t>(pb * m + k)));
    ok = b.and_(ok, b.not_(all));
  }
  b.output(ok);
  auto t = Tester::from_circuit(pb, m, ell, true, b.build());
  return t;
}

/// {f : f ≡ 1 on x_1 = 1}.
inline PropertySet anchored_ones_property(int n) {
  return PropertySet::from_predicate(Domain(n), [](const BooleanFunction& f) {
    for (std::uint64_t x = 0; x < f.domain().size(); ++x)
      if ((x & 1U) && !f(x)) return false;
    return true;
  });
}

struct GrowthSamplerOptions {
  int max_components = 4;
  /// f = [scale·Σ σ_c r_c]_0^1.
  double reference_scale = 0.01;
  /// Integer units per 1.0 for component values; prefix values are multiples of 1/units.
  std::int64_t units = 104;
};

namespace detail {

struct GrowthContext {
  int n = 0;
  int m = 0;
  GrowthSamplerOptions opt;
  std::shared_ptr<const std::vector<RestrictionRef>> tester_refs;
  std::shared_ptr<const std::vector<std::vector<std::int64_t>>> tester_units;
  std::vector<RestrictionRef> sim_refs;
  std::vector<std::vector<std::int64_t>> sim_units;
  std::size_t prefix_terms = 0;
};

inline std::int64_t to_units(double v, std::int64_t units) {
  return static_cast<std::int64_t>(std::llround(v * static_cast<double>(units)));
}

inline Distinguisher growth_candidate(const GrowthContext& ctx, std::vector<IndicatorComponent> comps,
                                      std::vector<std::size_t> picks, std::vector<double> thresholds, Rng& rng) {
  const std::uint64_t xs = std::uint64_t{1} << ctx.n;
  std::vector<std::int64_t> acc(xs, 0);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const bool tester = comps[c].ref.source == RestrictionRef::Source::tester;
    const auto& u = tester ? (*ctx.tester_units)[picks[c]] : ctx.sim_units[picks[c]];
    for (std::uint64_t x = 0; x < xs; ++x) acc[x] += comps[c].sign * u[x];
  }
  std::vector<double> fv(xs);
  for (std::uint64_t x = 0; x < xs; ++x)
    fv[x] = clip01(ctx.opt.reference_scale * static_cast<double>(acc[x]) / static_cast<double>(ctx.opt.units));
  RealTable f(Domain(ctx.n), std::move(fv));
  const auto grid = default_threshold_grid(f);
  // Negative thresholds are redrawn; others snap up to the grid.
  for (auto& t : thresholds)
    t = t < 0.0 ? grid[std::uniform_int_distribution<std::size_t>(0, grid.size() - 1)(rng)]
                : *std::lower_bound(grid.begin(), grid.end(), std::min(t, threshold_sentinel));
  json desc = {{"kind", "growth_indicator"}, {"thresholds", thresholds}, {"components", json::array()}};
  for (const auto& c : comps) desc["components"].push_back({{"sign", c.sign}, {"ref", c.ref.to_json()}});
  auto s = std::make_shared<IndicatorStructure>(
      IndicatorStructure{std::move(f), std::move(thresholds), ctx.opt.reference_scale, std::move(comps)});
  return consistency_indicator(std::move(s), ctx.m, std::move(desc));
}

inline std::pair<IndicatorComponent, std::size_t> random_component(const GrowthContext& ctx, Rng& rng) {
  const bool use_sim = !ctx.sim_refs.empty() && std::bernoulli_distribution(0.5)(rng);
  const auto& refs = use_sim ? ctx.sim_refs : *ctx.tester_refs;
  const auto i = std::uniform_int_distribution<std::size_t>(0, refs.size() - 1)(rng);
  const int sign = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  return {{sign, refs[i]}, i};
}

/// Position of a component's values within the context tables.
inline std::size_t pick_of(const RestrictionRef& r) { return static_cast<std::size_t>(r.index); }

}  // namespace detail

/// Γ_m of thresholded clipped sums of at most `max_components` restrictions of T and of the prefix,
/// searched by sampling and local moves.
inline GrowthFunction main_hard_growth(const Tester& t, const GrowthSamplerOptions& opt = {}) {
  if (!t.is_labeled()) throw std::invalid_argument("main_hard_growth: tester must take labeled samples");
  const auto fam = restrictions_of(t);
  auto refs = std::make_shared<std::vector<RestrictionRef>>();
  auto units = std::make_shared<std::vector<std::vector<std::int64_t>>>();
  for (std::uint64_t i = 0; i < fam.size(); ++i) {
    const auto e = fam.at(i);
    refs->push_back(*e.restriction());
    std::vector<std::int64_t> u;
    for (double v : e.values()) u.push_back(detail::to_units(v, opt.units));
    units->push_back(std::move(u));
  }
  const int n = t.base_bits();
  const int m = t.arity();
  const std::shared_ptr<const std::vector<RestrictionRef>> crefs = refs;
  const std::shared_ptr<const std::vector<std::vector<std::int64_t>>> cunits = units;
  return {[=](const StructuredSum& prefix) {
            auto ctx = std::make_shared<detail::GrowthContext>();
            ctx->n = n;
            ctx->m = m;
            ctx->opt = opt;
            ctx->tester_refs = crefs;
            ctx->tester_units = cunits;
            ctx->prefix_terms = prefix.size();
            const auto sim = restrictions_of(prefix.table(), TupleLayout{n + 1, m}, true,
                                             RestrictionRef::Source::simulator, prefix.size());
            for (std::uint64_t i = 0; i < sim.size(); ++i) {
              const auto e = sim.at(i);
              ctx->sim_refs.push_back(*e.restriction());
              std::vector<std::int64_t> u;
              for (double v : e.values()) u.push_back(detail::to_units(v, opt.units));
              ctx->sim_units.push_back(std::move(u));
            }
            auto sample = [ctx](Rng& rng) {
              const int k = std::uniform_int_distribution<int>(1, ctx->opt.max_components)(rng);
              std::vector<IndicatorComponent> comps;
              std::vector<std::size_t> picks;
              for (int c = 0; c < k; ++c) {
                auto [comp, pick] = detail::random_component(*ctx, rng);
                comps.push_back(std::move(comp));
                picks.push_back(pick);
              }
              return detail::growth_candidate(*ctx, std::move(comps), std::move(picks),
                                              std::vector<double>(static_cast<std::size_t>(ctx->m), -1.0), rng);
            };
            auto perturb = [ctx](const Distinguisher& d, Rng& rng) {
              const auto* s = d.indicator();
              auto comps = s->components;
              auto thresholds = s->thresholds;
              std::vector<std::size_t> picks;
              for (const auto& c : comps) picks.push_back(detail::pick_of(c.ref));
              const int move = std::uniform_int_distribution<int>(0, 3)(rng);
              if (move == 0) {
                thresholds[std::uniform_int_distribution<std::size_t>(0, thresholds.size() - 1)(rng)] = -1.0;
              } else if (move == 1 && static_cast<int>(comps.size()) < ctx->opt.max_components) {
                auto [comp, pick] = detail::random_component(*ctx, rng);
                comps.push_back(std::move(comp));
                picks.push_back(pick);
              } else if (move == 2 && comps.size() > 1) {
                const auto i = std::uniform_int_distribution<std::size_t>(0, comps.size() - 1)(rng);
                comps.erase(comps.begin() + static_cast<std::ptrdiff_t>(i));
                picks.erase(picks.begin() + static_cast<std::ptrdiff_t>(i));
              } else {
                const auto i = std::uniform_int_distribution<std::size_t>(0, comps.size() - 1)(rng);
                auto [comp, pick] = detail::random_component(*ctx, rng);
                comps[i] = std::move(comp);
                picks[i] = pick;
              }
              return detail::growth_candidate(*ctx, std::move(comps), std::move(picks), std::move(thresholds), rng);
            };
            return DistinguisherFamily::sampler(
                Domain((n + 1) * m), std::move(sample), std::move(perturb),
                {{"kind", "growth"}, {"max_components", opt.max_components}, {"prefix_terms", prefix.size()},
                 {"reference_scale", opt.reference_scale}});
          },
          {{"kind", "main_hard_growth"}, {"max_components", opt.max_components},
           {"reference_scale", opt.reference_scale}, {"tester", t.descriptor()}}};
}

struct PipelineConfig {
  int n = 3;
  int m = 2;
  int ell = 2;
  double eps = 0.25;
  double gamma = 1.0 / 52.0;
  /// Accuracy of the per-function simulations f̃ in the chain.
  double delta = 0.02;
  SearchOptions search{SearchMode::greedy, 5000};
  std::uint64_t seed = 1;
  int max_components = 4;
  double gate_c = 1.0;
  double gate_exp = 2.0;
  /// Functions whose three-gap chain is evaluated; empty means all.
  std::vector<BooleanFunction> chain_functions;
};

struct ChainRow {
  BooleanFunction f;
  std::size_t ft_terms = 0;
  OracleGapReport tester_oracle;
  TesterGapReport tester_gap;
  OracleGapReport simulator_oracle;
  double end_to_end = 0.0;
  double bound = 0.0;
  bool holds = true;

  json to_json() const {
    return {{"f", f.to_string()},
            {"ft_terms", ft_terms},
            {"oracle_gap_tester", tester_oracle.to_json()},
            {"tester_gap", tester_gap.to_json()},
            {"oracle_gap_simulator", simulator_oracle.to_json()},
            {"end_to_end", end_to_end},
            {"bound", bound},
            {"holds", holds}};
  }
};

struct PipelineReport {
  PipelineConfig config;
  json tester;
  std::size_t tester_gates = 0;
  SimulationReport supersim;
  RealTable ttilde;
  Partition partition;
  std::size_t classifier_mismatches = 0;
  std::size_t classifier_gates = 0;
  double classifier_budget = 0.0;
  SandwichReport sandwich;
  SwapReport swaps;
  std::vector<ChainRow> chain;

  bool partition_ok() const {
    const double mk = static_cast<double>(config.m) * static_cast<double>(supersim.k());
    return partition.well_formed() && (mk >= 63 || static_cast<double>(partition.size()) <= std::ldexp(1.0, static_cast<int>(mk)));
  }
  bool classifier_ok() const {
    return classifier_mismatches == 0 && static_cast<double>(classifier_gates) <= classifier_budget;
  }
  bool chain_ok() const {
    return std::all_of(chain.begin(), chain.end(), [](const ChainRow& r) { return r.holds; });
  }
  bool holds() const { return partition_ok() && classifier_ok() && sandwich.holds() && swaps.holds() && chain_ok(); }

  json to_json() const {
    json rows = json::array();
    for (const auto& r : chain) rows.push_back(r.to_json());
    return {{"tester", tester},
            {"tester_gates", tester_gates},
            {"supersim", supersim.to_json()},
            {"partition",
             {{"parts", partition.size()},
              {"map", partition.map()},
              {"well_formed", partition.well_formed()},
              {"provenance", partition.provenance},
              {"classifier", partition.classifier ? partition.classifier->to_json() : json(nullptr)}}},
            {"classifier_mismatches", classifier_mismatches},
            {"classifier_gates", classifier_gates},
            {"classifier_budget", classifier_budget},
            {"sandwich", sandwich.to_json()},
            {"swaps", swaps.to_json()},
            {"chain", rows},
            {"holds", holds()}};
  }
};

/// f̃: simulate f against R(T) ∪ R(T̃) to accuracy δ.
inline SimulationReport chain_simulation(const BooleanFunction& f, const DistinguisherFamily& rt,
                                         const DistinguisherFamily& rtt, const Distribution& d, double delta,
                                         std::uint64_t seed) {
  std::vector<Distinguisher> all;
  for (std::uint64_t i = 0; i < rt.size(); ++i) all.push_back(rt.at(i));
  for (std::uint64_t i = 0; i < rtt.size(); ++i) all.push_back(rtt.at(i));
  SimulationParams p;
  p.delta = delta;
  p.seed = seed;
  return ttv_simulate(RealTable::from_boolean(f), DistinguisherFamily::explicit_list(d.domain(), std::move(all),
                                                                                      {{"kind", "restrictions"}, {"source", "tester+simulator"}}),
                      d, p);
}

inline PipelineReport run_main_hard_pipeline(const PipelineConfig& cfg) {
  const Tester t = anchored_ones_tester(cfg.n, cfg.m, cfg.ell);
  const Distribution d = Distribution::uniform(Domain(cfg.n));
  const auto tbar = mean_tester(t).table;

  SimulationParams sp;
  sp.delta = cfg.gamma;
  sp.search = cfg.search;
  sp.seed = cfg.seed;
  GrowthSamplerOptions gopt;
  gopt.max_components = cfg.max_components;
  gopt.reference_scale = cfg.delta / 2.0;
  gopt.units = std::llround(1.0 / (cfg.gamma / 2.0));
  auto rep = supersimulate(tbar, main_hard_growth(t, gopt), regularity_measure(d, cfg.m), sp);
  auto ttilde = rep.sum.table();

  Partition part = extract_partition(rep.sum, cfg.m, Domain(cfg.n), &t);
  std::size_t mismatches = 0;
  const auto sets = threshold_sets(rep.sum, cfg.m);
  for (std::uint64_t x = 0; x < d.domain().size(); ++x) {
    const auto out = part.classifier->evaluate(t, x);
    for (std::size_t s = 0; s < sets.size(); ++s) mismatches += out[s] != sets[s][x];
  }

  const QProperty q(ttilde, d, cfg.m);
  const auto p = anchored_ones_property(cfg.n);
  auto sandwich = sandwich_check(p, [&](const BooleanFunction& f) { return q.contains(f); }, cfg.eps);
  auto swaps = single_swap_sweep(part, [&](const BooleanFunction& f) { return q.expected(f); }, 0.5);

  PipelineReport out{cfg,
                     t.descriptor(),
                     t.gates() ? t.gates()->total : 0,
                     std::move(rep),
                     ttilde,
                     std::move(part),
                     mismatches,
                     0,
                     0.0,
                     std::move(sandwich),
                     swaps,
                     {}};
  out.tester = {{"kind", "anchored_ones"}, {"n", cfg.n}, {"m", cfg.m}, {"ell", cfg.ell}};
  out.classifier_gates = out.partition.classifier->circuit.gates().size();
  out.classifier_budget = classifier_gate_budget(cfg.m, out.supersim.k(), cfg.gamma, cfg.delta, cfg.gate_c, cfg.gate_exp);

  const auto rt = restrictions_of(t);
  const auto rtt = restrictions_of(ttilde, TupleLayout{cfg.n + 1, cfg.m}, true);
  std::vector<BooleanFunction> fs = cfg.chain_functions;
  if (fs.empty()) PropertySet::for_each_function(d.domain(), [&](const BooleanFunction& f) { fs.push_back(f); });
  for (const auto& f : fs) {
    auto sim = chain_simulation(f, rt, rtt, d, cfg.delta, cfg.seed);
    const auto ft = sim.sum.table();
    ChainRow row{f, sim.k(), oracle_sim_gap(t, f, ft, d), tester_sim_gap(tbar, ttilde, cfg.m, ft, d),
                 oracle_sim_gap(ttilde, cfg.m, RealTable::from_boolean(f), ft, d)};
    const auto labels = deterministic_labels(d, cfg.m, f);
    row.end_to_end = std::abs(exact_expectation(tbar, labels) - exact_expectation(ttilde, labels));
    row.bound = row.tester_oracle.bound + row.tester_gap.bound + row.simulator_oracle.bound;
    row.holds = row.tester_oracle.holds && row.tester_gap.holds && row.simulator_oracle.holds &&
                row.end_to_end <= row.bound + gap_tolerance;
    out.chain.push_back(std::move(row));
  }
  return out;
}

}  // namespace simtest
