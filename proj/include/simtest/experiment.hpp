#pragma once

// Experiment configs, runners, and the report.json / metrics.csv artifacts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simtest/circuits.hpp"
#include "simtest/constructions.hpp"
#include "simtest/core.hpp"
#include "simtest/dense.hpp"
#include "simtest/families.hpp"
#include "simtest/io.hpp"
#include "simtest/pipeline.hpp"
#include "simtest/regularity.hpp"
#include "simtest/tester.hpp"
#include "simtest/testing.hpp"

namespace simtest {

class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string kind;
  int n = 3;
  int m = 2;
  int ell = 2;
  double eps = 0.25;
  double delta = 0.1;
  double gamma = 1.0 / 52.0;
  double mu = 0.5;
  std::string mode = "exhaustive";
  std::uint64_t budget = 5000;
  std::uint64_t seed = 1;
  std::uint64_t trials = 200;
  int instances = 20;
  int gates = 3;
  int reps = 1;
  std::string family = "circuits";
  int family_size = 64;
  std::string function;
  std::string target;
  std::string distribution;
  std::string base_distribution;
  std::string tester;
  std::string out_dir = ".";

  static const std::vector<std::string>& kinds() {
    static const std::vector<std::string> k{"ttv",         "supersim",       "oracle-gap",
                                            "tester-gap",  "main-hard-pipeline", "density-tester",
                                            "consistency-counter", "templates", "dense"};
    return k;
  }

  json to_json() const {
    return {{"kind", kind},
            {"n", n},
            {"m", m},
            {"ell", ell},
            {"eps", eps},
            {"delta", delta},
            {"gamma", gamma},
            {"mu", mu},
            {"mode", mode},
            {"budget", budget},
            {"seed", seed},
            {"trials", trials},
            {"instances", instances},
            {"gates", gates},
            {"reps", reps},
            {"family", family},
            {"family_size", family_size},
            {"function", function},
            {"target", target},
            {"distribution", distribution},
            {"base_distribution", base_distribution},
            {"tester", tester},
            {"out_dir", out_dir}};
  }

  static ExperimentConfig from_json(const json& j) {
    if (!j.is_object()) throw config_error("config must be a JSON object");
    ExperimentConfig c;
    const json known = c.to_json();
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!known.contains(it.key())) throw config_error("unknown config field '" + it.key() + "'");
    auto get = [&](const char* key, auto& field) {
      if (!j.contains(key)) return;
      try {
        j.at(key).get_to(field);
      } catch (const json::exception&) {
        throw config_error(std::string("config field '") + key + "' has the wrong type");
      }
    };
    get("kind", c.kind);
    get("n", c.n);
    get("m", c.m);
    get("ell", c.ell);
    get("eps", c.eps);
    get("delta", c.delta);
    get("gamma", c.gamma);
    get("mu", c.mu);
    get("mode", c.mode);
    get("budget", c.budget);
    get("seed", c.seed);
    get("trials", c.trials);
    get("instances", c.instances);
    get("gates", c.gates);
    get("reps", c.reps);
    get("family", c.family);
    get("family_size", c.family_size);
    get("function", c.function);
    get("target", c.target);
    get("distribution", c.distribution);
    get("base_distribution", c.base_distribution);
    get("tester", c.tester);
    get("out_dir", c.out_dir);
    if (c.kind == "main-hard-pipeline") {
      if (!j.contains("delta")) c.delta = 1.0 / (25.0 * c.m);
      if (!j.contains("mode")) c.mode = "greedy";
    }
    if (c.kind == "consistency-counter" && !j.contains("ell")) c.ell = 0;
    if ((c.kind == "main-hard-pipeline" || c.kind == "consistency-counter") && !j.contains("gamma"))
      c.gamma = 1.0 / (13.0 * std::ldexp(1.0, c.m));
    return c;
  }

  void validate() const {
    if (std::find(kinds().begin(), kinds().end(), kind) == kinds().end())
      throw config_error("unknown experiment kind '" + kind + "'");
    auto require = [](bool ok, const std::string& what) {
      if (!ok) throw config_error(what);
    };
    require(n >= 1 && n <= 4, "n must lie in [1, 4]");
    require(m >= 1 && m <= 4, "m must lie in [1, 4]");
    require(ell >= 0 && ell <= 8, "ell must lie in [0, 8]");
    require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    require(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
    require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
    require(mu > 0.0 && mu <= 1.0, "mu must lie in (0, 1]");
    require(budget > 0, "budget must be positive");
    require(trials > 0, "trials must be positive");
    require(instances > 0, "instances must be positive");
    require(gates >= 0 && gates <= 4, "gates must lie in [0, 4]");
    require(reps >= 1 && reps % 2 == 1, "reps must be odd and positive");
    require(family_size >= 0 && family_size <= 4096, "family_size must lie in [0, 4096]");
    try {
      (void)parse_search_mode(mode);
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    const std::set<std::string> families{"zero", "points", "circuits", "random"};
    require(families.count(family) == 1, "family must be one of zero, points, circuits, random");
    require((n + 1) * m + ell <= 20, "(n+1)·m + ell must be at most 20 for exact enumeration");
    require(!(kind == "main-hard-pipeline" && mode == "exhaustive"), "the pipeline's growth family can only be searched");
  }

  SearchOptions search() const { return {parse_search_mode(mode), budget}; }
};

/// One measured quantity; bounded rows carry the bound, the relation, and the outcome.
struct Metric {
  std::string name;
  double value = 0.0;
  std::optional<double> bound;
  std::string relation;
  bool pass = true;
};

struct RunReport {
  ExperimentConfig config;
  json results = json::object();
  std::vector<Metric> metrics;
  json artifacts = json::object();
  double seconds = 0.0;

  void measure(std::string name, double v) { metrics.push_back({std::move(name), v, std::nullopt, "", true}); }
  bool check_le(std::string name, double v, double bound, double tol = 0.0) {
    const bool ok = v <= bound + tol;
    metrics.push_back({std::move(name), v, bound, "<=", ok});
    return ok;
  }
  bool check_lt(std::string name, double v, double bound) {
    const bool ok = v < bound;
    metrics.push_back({std::move(name), v, bound, "<", ok});
    return ok;
  }
  bool check_ge(std::string name, double v, double bound) {
    const bool ok = v >= bound;
    metrics.push_back({std::move(name), v, bound, ">=", ok});
    return ok;
  }
  bool check_eq(std::string name, double v, double want) {
    const bool ok = v == want;
    metrics.push_back({std::move(name), v, want, "==", ok});
    return ok;
  }

  bool passed() const {
    return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& m : metrics)
      if (!m.pass) out.push_back(m.name);
    return out;
  }

  json to_json() const {
    json rows = json::array();
    for (const auto& m : metrics)
      rows.push_back({{"name", m.name},
                      {"value", m.value},
                      {"bound", m.bound ? json(*m.bound) : json(nullptr)},
                      {"relation", m.relation},
                      {"pass", m.pass}});
    return {{"config", config.to_json()}, {"results", results},     {"metrics", rows},
            {"passed", passed()},         {"failures", failures()}, {"artifacts", artifacts},
            {"timing", {{"seconds", seconds}}}};
  }

  std::string metrics_csv() const {
    std::string out = "name,value,bound,relation,pass\n";
    for (const auto& m : metrics)
      out += m.name + "," + detail::shortest(m.value) + "," + (m.bound ? detail::shortest(*m.bound) : "") + "," +
             m.relation + "," + (m.pass ? "1" : "0") + "\n";
    return out;
  }
};

namespace detail {

inline Distribution distribution_or_uniform(const ExperimentConfig& c, const std::string& path) {
  if (path.empty()) return Distribution::uniform(Domain(c.n));
  auto d = load_dst(read_text(path));
  if (d.domain().bits() != c.n) throw config_error("distribution file width differs from n");
  return d;
}

inline RealTable random_table(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(std::size_t{1} << n);
  for (auto& x : v) x = u(rng);
  return {Domain(n), std::move(v)};
}

inline BooleanFunction random_function(int n, Rng& rng) {
  std::vector<std::uint8_t> v(std::size_t{1} << n);
  for (auto& x : v) x = static_cast<std::uint8_t>(rng() & 1U);
  return {Domain(n), std::move(v)};
}

inline Distribution random_distribution(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(std::size_t{1} << n);
  for (auto& x : w) x = u(rng);
  return Distribution::normalized(Domain(n), std::move(w));
}

/// Random distinguishers: half Boolean, half with values in [−1, 1].
inline DistinguisherFamily random_family(int n, int size, Rng& rng) {
  std::vector<Distinguisher> e;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < size; ++k) {
    std::vector<double> v(std::size_t{1} << n);
    for (auto& x : v) x = k % 2 == 0 ? static_cast<double>(rng() & 1U) : u(rng);
    e.emplace_back(Domain(n), std::move(v), json{{"kind", "random"}, {"index", k}});
  }
  return DistinguisherFamily::explicit_list(Domain(n), std::move(e), {{"kind", "random"}, {"size", size}});
}

inline DistinguisherFamily point_family(int n) {
  std::vector<Distinguisher> e;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x)
    e.push_back(Distinguisher::from_boolean(BooleanFunction::from_predicate(Domain(n), [x](std::uint64_t z) { return z == x; }),
                                            {{"kind", "point"}, {"x", x}}));
  return DistinguisherFamily::explicit_list(Domain(n), std::move(e), {{"kind", "points"}, {"n", n}});
}

inline DistinguisherFamily configured_family(const ExperimentConfig& c, Rng& rng) {
  if (c.family == "zero")
    return DistinguisherFamily::explicit_list(Domain(c.n), {Distinguisher::constant(Domain(c.n), 0.0)}, {{"kind", "zero"}});
  if (c.family == "points") return point_family(c.n);
  if (c.family == "random") return random_family(c.n, c.family_size, rng);
  return small_circuit_family(c.n, c.gates);
}

/// Point indicators plus every threshold set {h ≥ t} of the current prefix.
inline GrowthFunction prefix_threshold_growth(int n) {
  return {[n](const StructuredSum& prefix) {
            std::vector<Distinguisher> e;
            const auto pts = point_family(n);
            for (std::uint64_t i = 0; i < pts.size(); ++i) e.push_back(pts.at(i));
            const auto h = prefix.table();
            for (double t : default_threshold_grid(h)) {
              if (t > 1.0) continue;
              e.push_back(Distinguisher::from_boolean(
                  BooleanFunction::from_predicate(Domain(n), [&](std::uint64_t x) { return h(x) >= t; }),
                  {{"kind", "prefix_threshold"}, {"t", t}, {"prefix_terms", prefix.size()}}));
            }
            return DistinguisherFamily::explicit_list(Domain(n), std::move(e),
                                                      {{"kind", "prefix_thresholds"}, {"prefix_terms", prefix.size()}});
          },
          {{"kind", "prefix_thresholds"}, {"n", n}}};
}

inline Tester configured_tester(const ExperimentConfig& c) {
  if (c.tester.empty()) return anchored_ones_tester(c.n, c.m, c.ell);
  auto circ = load_cir(read_text(c.tester));
  try {
    return Tester::from_circuit(c.n + 1, c.m, c.ell, true, std::move(circ));
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("tester circuit does not match (n, m, ell): ") + e.what());
  }
}

inline BooleanFunction configured_function(const ExperimentConfig& c, Rng& rng) {
  if (c.function.empty()) return random_function(c.n, rng);
  auto f = load_bfn(read_text(c.function));
  if (f.domain().bits() != c.n) throw config_error("function file width differs from n");
  return f;
}

inline void simulation_checks(RunReport& r, const SimulationReport& s, const std::string& prefix) {
  r.measure(prefix + "k", static_cast<double>(s.k()));
  if (std::isfinite(s.cap)) r.check_lt(prefix + "k_below_cap", static_cast<double>(s.k()), s.cap);
  r.check_le(prefix + "potential", s.potential_lhs, s.potential_rhs, 1e-12);
}

inline SimulationParams params(const ExperimentConfig& c, double delta) {
  SimulationParams p;
  p.delta = delta;
  p.search = c.search();
  p.seed = c.seed;
  return p;
}

}  // namespace detail

inline void run_ttv(const ExperimentConfig& c, RunReport& r) {
  Rng rng(c.seed);
  const auto d = detail::distribution_or_uniform(c, c.distribution);
  const RealTable g = c.target.empty() ? detail::random_table(c.n, rng) : load_rfn(read_text(c.target));
  if (g.domain().bits() != c.n) throw config_error("target file width differs from n");
  const auto fam = detail::configured_family(c, rng);
  const auto s = ttv_simulate(g, fam, d, detail::params(c, c.delta));
  r.results["simulation"] = s.to_json();
  r.results["family"] = fam.descriptor();
  r.results["status"] = certification_name(s.status);
  detail::simulation_checks(r, s, "ttv_");
  r.check_lt("ttv_k_below_2_over_delta_sq", static_cast<double>(s.k()), 2.0 / (c.delta * c.delta));
  const double adv = max_advantage(fam, g, s.sum.table(), d);
  if (s.status == Certification::exhaustively_certified)
    r.check_le("ttv_final_max_advantage", adv, c.delta, 1e-9);
  else
    r.measure("ttv_final_max_advantage", adv);
}

inline void run_supersim(const ExperimentConfig& c, RunReport& r) {
  Rng rng(c.seed);
  const auto d = detail::distribution_or_uniform(c, c.distribution);
  const RealTable g = c.target.empty() ? detail::random_table(c.n, rng) : load_rfn(read_text(c.target));
  if (g.domain().bits() != c.n) throw config_error("target file width differs from n");
  const auto growth = detail::prefix_threshold_growth(c.n);
  const auto s = supersimulate(g, growth, d, detail::params(c, c.delta));
  r.results["simulation"] = s.to_json();
  r.results["status"] = certification_name(s.status);
  detail::simulation_checks(r, s, "supersim_");
  const double adv = max_advantage(growth.family(s.sum), g, s.sum.table(), d);
  if (s.status == Certification::exhaustively_certified)
    r.check_le("supersim_final_max_advantage_own_growth", adv, c.delta, 1e-9);
  else
    r.measure("supersim_final_max_advantage_own_growth", adv);
}

inline void run_oracle_gap(const ExperimentConfig& c, RunReport& r) {
  Rng rng(c.seed);
  const auto d = detail::distribution_or_uniform(c, c.distribution);
  const auto t = detail::configured_tester(c);
  const auto f = detail::configured_function(c, rng);
  const auto s = ttv_simulate(RealTable::from_boolean(f), restrictions_of(t), d, detail::params(c, c.delta));
  const auto ft = s.sum.table();
  const auto g = oracle_sim_gap(t, f, ft, d);
  r.results["f"] = f.to_string();
  r.results["ft"] = std::vector<double>(ft.values().begin(), ft.values().end());
  r.results["ft_simulation"] = {{"k", s.k()}, {"status", certification_name(s.status)}};
  r.results["gap"] = g.to_json();
  r.check_le("oracle_gap", g.gap, g.bound, gap_tolerance);
  r.check_le("oracle_hybrid_max_step", g.max_step, 2.0 * g.delta_star, gap_tolerance);
  r.measure("oracle_delta_star", g.delta_star);
}

inline void run_tester_gap(const ExperimentConfig& c, RunReport& r) {
  Rng rng(c.seed);
  const auto d = detail::distribution_or_uniform(c, c.distribution);
  const auto t = detail::configured_tester(c);
  const auto f = detail::configured_function(c, rng);
  const auto ft = ttv_simulate(RealTable::from_boolean(f), restrictions_of(t), d, detail::params(c, c.delta)).sum.table();
  const auto tbar = mean_tester(t).table;
  SimulationParams p = detail::params(c, c.gamma);
  p.search = {SearchMode::exhaustive, c.budget};
  const auto sim = ttv_simulate(tbar, proof_consistency_family(ft, c.m), regularity_measure(d, c.m), p);
  const auto g = tester_sim_gap(tbar, sim.sum.table(), c.m, ft, d);
  r.results["f"] = f.to_string();
  r.results["simulator"] = {{"k", sim.k()}, {"status", certification_name(sim.status)}};
  r.results["gap"] = g.to_json();
  detail::simulation_checks(r, sim, "tester_sim_");
  r.check_le("tester_gap", g.gap, g.bound, gap_tolerance);
  r.check_le("tester_gamma_star", g.gamma_star, c.gamma, 1e-9);
}

inline void run_pipeline(const ExperimentConfig& c, RunReport& r) {
  PipelineConfig pc;
  pc.n = c.n;
  pc.m = c.m;
  pc.ell = c.ell;
  pc.eps = c.eps;
  pc.gamma = c.gamma;
  pc.delta = c.delta;
  pc.search = c.search();
  pc.seed = c.seed;
  const auto rep = run_main_hard_pipeline(pc);
  r.results["pipeline"] = rep.to_json();
  detail::simulation_checks(r, rep.supersim, "supersim_");
  r.results["supersim_status"] = certification_name(rep.supersim.status);
  r.check_eq("sandwich_counterexamples", static_cast<double>(rep.sandwich.counterexamples()), 0.0);
  r.measure("q_members", static_cast<double>(rep.sandwich.q_members));
  const double mk = static_cast<double>(c.m) * static_cast<double>(rep.supersim.k());
  r.check_le("partition_parts", static_cast<double>(rep.partition.size()), std::ldexp(1.0, static_cast<int>(std::min(mk, 1000.0))));
  r.check_eq("partition_well_formed", rep.partition.well_formed() ? 1.0 : 0.0, 1.0);
  r.check_eq("classifier_mismatches", static_cast<double>(rep.classifier_mismatches), 0.0);
  r.check_le("classifier_gates", static_cast<double>(rep.classifier_gates), rep.classifier_budget);
  r.check_eq("swap_membership_changes", static_cast<double>(rep.swaps.membership_changes), 0.0);
  r.measure("swap_max_value_change", rep.swaps.max_value_change);
  std::size_t bad = 0;
  double worst_ratio = 0.0, worst_gap = 0.0, worst_bound = 0.0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  for (const auto& row : rep.chain) {
    bad += !row.holds;
    if (row.end_to_end - row.bound > worst_margin) {
      worst_margin = row.end_to_end - row.bound;
      worst_gap = row.end_to_end;
      worst_bound = row.bound;
    }
    worst_ratio = std::max(worst_ratio, row.bound > 0 ? row.end_to_end / row.bound : 0.0);
  }
  r.check_eq("chain_rows_failing", static_cast<double>(bad), 0.0);
  r.check_le("chain_tightest_end_to_end", worst_gap, worst_bound, gap_tolerance);
  r.measure("chain_worst_ratio", worst_ratio);
  r.measure("tester_gates", static_cast<double>(rep.tester_gates));
}

/// The 3-part popcount partition of n bits and Q = {μ_0 ≥ μ_1, μ_2 = 0}.
inline SymmetricProperty example_symmetric_property(int n, const Distribution& d) {
  if (n < 2) throw config_error("density-tester example needs n >= 2");
  return {popcount_partition(n, {n / 2 - (n % 2 == 0 ? 1 : 0), n - 1}), d,
          [](const DensityVector& mu) { return mu[0] >= mu[1] - membership_tolerance && mu[2] == 0.0; },
          {{"kind", "popcount_density"}, {"rule", "mu0 >= mu1 and mu2 == 0"}}};
}

inline void run_density_tester(const ExperimentConfig& c, RunReport& r) {
  const auto d = detail::distribution_or_uniform(c, c.distribution);
  const auto q = example_symmetric_property(c.n, d);
  const auto members = q.members();
  const auto dt = build_density_tester(q.partition, members, c.eps, d);
  const int tuple_bits = c.n * dt.samples + dt.samples;
  const AcceptMode mode = tuple_bits <= 20 ? AcceptMode::exact() : AcceptMode::mc(c.trials, c.seed);
  const auto v = validity_check(dt.tester, members, c.eps, d, mode);
  r.results["tester"] = dt.to_json();
  r.results["property"] = q.descriptor;
  r.results["members"] = members.size();
  r.results["accept_mode"] = mode.kind == AcceptMode::Kind::exact ? "exact" : "mc";
  r.results["validity"] = v.to_json();
  r.check_eq("density_delta", dt.delta, c.eps / (4.0 * static_cast<double>(q.partition.size())));
  r.check_eq("validity_violations", static_cast<double>(v.count(Verdict::violation)), 0.0);
  r.check_eq("validity_inconclusive", static_cast<double>(v.count(Verdict::inconclusive)), 0.0);
  r.measure("valid_accept", static_cast<double>(v.count(Verdict::valid_accept)));
  r.measure("valid_reject", static_cast<double>(v.count(Verdict::valid_reject)));
  r.measure("samples", dt.samples);
}

inline void run_counter(const ExperimentConfig& c, RunReport& r) {
  const auto d = detail::distribution_or_uniform(c, c.distribution);
  const auto t = detail::configured_tester(c);
  CounterOptions co;
  co.boost_reps = c.reps;
  co.seed = c.seed;
  co.search = {SearchMode::exhaustive, c.budget};
  const auto cb = build_consistency_counter(t, c.gamma, d, co);
  const int m = cb.counter.arity;
  detail::simulation_checks(r, cb.report, "counter_");
  r.check_lt("counter_k_below_2_over_gamma_sq", static_cast<double>(cb.report.k()), 2.0 / (c.gamma * c.gamma));
  r.results["counter"] = cb.counter.to_json();
  r.results["simulation"] = cb.report.to_json();

  // Pointwise: T̃ > 1/2 exactly when the counter accepts.
  const TupleLayout lay{c.n + 1, m};
  std::size_t mismatches = 0;
  std::vector<std::uint32_t> pts(static_cast<std::size_t>(m));
  for (std::uint64_t tup = 0; tup < cb.ttilde.domain().size(); ++tup) {
    lay.decode(tup, pts);
    mismatches += (cb.ttilde(tup) > 0.5) != run_consistency_counter(cb.counter, pts);
  }
  r.check_eq("decision_mismatches", static_cast<double>(mismatches), 0.0);

  const double gamma_measured =
      max_advantage(exact_consistency_family(Domain(c.n), m), cb.tbar, cb.ttilde, regularity_measure(d, m));
  const double bound = std::ldexp(gamma_measured, m);
  const auto ct = counter_tester(cb.counter);
  json rows = json::array();
  double dev = 0.0, decision_dev = 0.0;
  PropertySet::for_each_function(Domain(c.n), [&](const BooleanFunction& f) {
    const auto lab = deterministic_labels(d, m, f);
    const double src = exact_expectation(cb.tbar, lab);
    const double sim = exact_expectation(cb.ttilde, lab);
    const double cnt = exact_expectation(mean_tester(ct).table, lab);
    dev = std::max(dev, std::abs(src - sim));
    decision_dev = std::max(decision_dev, std::abs(src - cnt));
    rows.push_back({{"f", f.to_string()}, {"tester", src}, {"simulator", sim}, {"counter", cnt}});
  });
  r.results["per_function"] = rows;
  r.results["gamma_measured"] = gamma_measured;
  r.check_le("gamma_measured", gamma_measured, c.gamma, 1e-12);
  r.check_le("simulator_accept_deviation", dev, bound, 1e-9);
  r.check_le("counter_decision_deviation", decision_dev, bound, 1e-9);
}

inline void run_templates(const ExperimentConfig& c, RunReport& r) {
  const auto d = detail::distribution_or_uniform(c, c.distribution);
  const auto p = anchored_ones_property(c.n);
  const auto fs = small_circuit_family(c.n, c.gates);
  const auto ts = build_template_set(p, fs, c.m, d, c.seed);
  r.results["templates"] = ts.to_json();
  r.check_eq("template_delta", ts.delta, 1.0 / (13.0 * c.m));
  std::size_t own = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    own += ts.max_adv(RealTable::from_boolean(p.members()[i]), ts.assignment[i]) > ts.delta;
  r.check_eq("members_incompatible_with_own_template", static_cast<double>(own), 0.0);
  std::size_t compatible = 0, outside = 0;
  std::optional<BooleanFunction> far;
  double far_adv = -1.0;
  PropertySet::for_each_function(Domain(c.n), [&](const BooleanFunction& f) {
    const bool ok = ts.compatible(f);
    compatible += ok;
    outside += ok && !eps_closure_member(f, p, c.eps);
    if (p.distance_to(f) > c.eps) {
      double mn = std::numeric_limits<double>::infinity();
      for (std::size_t h = 0; h < ts.templates.size(); ++h) mn = std::min(mn, ts.max_adv(RealTable::from_boolean(f), h));
      if (mn > far_adv) {
        far_adv = mn;
        far = f;
      }
    }
  });
  r.measure("compatible_functions", static_cast<double>(compatible));
  r.check_eq("compatible_outside_p_eps", static_cast<double>(outside), 0.0);
  const double alpha = c.eps * ts.delta / 4.0;
  const double beta = 0.1;
  const auto samples = template_sample_size(fs.size(), alpha, beta);
  r.results["alpha"] = alpha;
  r.results["beta"] = beta;
  r.results["samples"] = samples;
  if (!far) throw config_error("templates: no function is eps-far from P");
  r.results["planted_far"] = far->to_string();
  r.check_ge("planted_far_min_advantage", far_adv, ts.delta + 2.0 * alpha);
  Rng rng(c.seed);
  std::uint64_t acc_planted = 0, acc_far = 0;
  for (std::uint64_t k = 0; k < c.trials; ++k) {
    const auto& g = p.members()[k % p.size()];
    acc_planted += template_tester(ts, alpha, SampleHistogram::draw(d, g, samples, rng), beta);
    acc_far += template_tester(ts, alpha, SampleHistogram::draw(d, *far, samples, rng), beta);
  }
  const double n_trials = static_cast<double>(c.trials);
  r.check_ge("planted_accept_rate", static_cast<double>(acc_planted) / n_trials, 2.0 / 3.0);
  r.check_ge("far_reject_rate", 1.0 - static_cast<double>(acc_far) / n_trials, 2.0 / 3.0);
}

struct DenseInstance {
  int n = 3;
  int m = 2;
  int ell = 1;
  double mu = 0.5;
  std::uint64_t seed = 0;
};

/// D_0 conditioned on a random set of D_0-mass at least μ.
inline Distribution random_conditioned(const Distribution& d0, double mu, Rng& rng) {
  const auto size = d0.domain().size();
  std::vector<std::uint64_t> order(size);
  for (std::uint64_t x = 0; x < size; ++x) order[x] = x;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> w(size, 0.0);
  double mass = 0.0;
  for (auto x : order) {
    if (mass >= mu - 1e-15) break;
    w[x] = d0(x);
    mass += d0(x);
  }
  return Distribution::normalized(d0.domain(), std::move(w));
}

struct DenseInstanceResult {
  DenseOracleGapReport oracle;
  TesterGapReport tester;
  bool holds() const { return oracle.holds && tester.holds; }
};

inline DenseInstanceResult run_dense_instance(const DenseInstance& in, const Distribution& d0) {
  Rng rng(in.seed);
  const auto table = detail::random_function(in.n * in.m + in.ell, rng);
  const auto t = Tester::from_table(in.n, in.m, in.ell, false, table);
  auto mixture = [&] {
    const auto a = random_conditioned(d0, in.mu, rng);
    const auto b = random_conditioned(d0, in.mu, rng);
    const double lam = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::vector<double> w(d0.domain().size());
    for (std::uint64_t x = 0; x < w.size(); ++x) w[x] = (1.0 - lam) * a(x) + lam * b(x);
    return DensityFunction::from_distribution(Distribution::normalized(d0.domain(), std::move(w)), d0, in.mu);
  };
  const auto f = mixture();
  const auto ft = mix(f, mixture(), std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  DenseInstanceResult res{dense_oracle_sim_gap(t, f, ft), {}};
  const auto tbar = mean_tester(t).table;
  SimulationParams p;
  p.delta = dense_constants(in.mu, in.m).gamma;
  const auto sim = ttv_simulate(tbar, threshold_family(ft.scaled(), in.m), ProductDistribution::iid(d0, in.m).materialize(), p);
  res.tester = dense_tester_sim_gap(tbar, sim.sum.table(), ft, in.m);
  return res;
}

struct BooleanSpecialization {
  OracleGapReport boolean;
  DenseOracleGapReport dense;
  double max_difference = 0.0;
  bool matches() const { return max_difference <= 1e-12 && dense.bound <= boolean.bound + 1e-12; }
};

/// The pair law of (x, f(x)) at μ = 1/2 against the labeled oracle gap.
inline BooleanSpecialization boolean_specialization(int n, int m, int ell, std::uint64_t seed, double delta) {
  Rng rng(seed);
  const Domain X(n);
  const auto d = Distribution::uniform(X);
  const auto t = Tester::from_table(n + 1, m, ell, true, detail::random_function((n + 1) * m + ell, rng));
  const auto f = detail::random_function(n, rng);
  SimulationParams p;
  p.delta = delta;
  const auto ft = ttv_simulate(RealTable::from_boolean(f), restrictions_of(t), d, p).sum.table();
  BooleanSpecialization s{oracle_sim_gap(t, f, ft, d),
                          dense_oracle_sim_gap(as_unlabeled(t), DensityFunction::pair(f, d), DensityFunction::pair(ft, d))};
  s.max_difference = std::abs(s.boolean.gap - s.dense.gap);
  for (std::size_t i = 0; i < s.boolean.hybrids.size(); ++i)
    s.max_difference = std::max(s.max_difference, std::abs(s.boolean.hybrids[i] - s.dense.hybrids[i]));
  return s;
}

inline void run_dense(const ExperimentConfig& c, RunReport& r) {
  if (!c.base_distribution.empty() && !c.distribution.empty()) {
    const auto d0 = load_dst(read_text(c.base_distribution));
    const auto d = load_dst(read_text(c.distribution));
    const auto dd = DenseDistribution::of(d0, d);
    r.results["declared"] = {{"mu", dd.mu}, {"valid", dd.valid()}};
    r.check_ge("declared_density", dd.mu, c.mu);
  }
  const Distribution d0 = Distribution::uniform(Domain(c.n));
  json rows = json::array();
  std::size_t bad = 0, spec_bad = 0;
  for (int k = 0; k < c.instances; ++k) {
    const DenseInstance in{c.n, 1 + k % c.m, k % (c.ell + 1), k % 2 == 0 ? c.mu : c.mu / 2.0, c.seed + static_cast<std::uint64_t>(k)};
    const auto res = run_dense_instance(in, d0);
    bad += !res.holds();
    const auto spec = boolean_specialization(std::min(c.n, 3), in.m, in.ell, in.seed, 0.05);
    spec_bad += !spec.matches();
    rows.push_back({{"m", in.m},
                    {"ell", in.ell},
                    {"mu", in.mu},
                    {"oracle", res.oracle.to_json()},
                    {"tester", res.tester.to_json()},
                    {"boolean_gap", spec.boolean.gap},
                    {"dense_pair_gap", spec.dense.gap},
                    {"boolean_bound", spec.boolean.bound},
                    {"dense_pair_bound", spec.dense.bound}});
  }
  r.results["instances"] = rows;
  r.check_eq("dense_instances_failing", static_cast<double>(bad), 0.0);
  r.check_eq("boolean_specialization_mismatches", static_cast<double>(spec_bad), 0.0);
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunReport r;
  r.config = cfg;
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.kind == "ttv") run_ttv(cfg, r);
  else if (cfg.kind == "supersim") run_supersim(cfg, r);
  else if (cfg.kind == "oracle-gap") run_oracle_gap(cfg, r);
  else if (cfg.kind == "tester-gap") run_tester_gap(cfg, r);
  else if (cfg.kind == "main-hard-pipeline") run_pipeline(cfg, r);
  else if (cfg.kind == "density-tester") run_density_tester(cfg, r);
  else if (cfg.kind == "consistency-counter") run_counter(cfg, r);
  else if (cfg.kind == "templates") run_templates(cfg, r);
  else if (cfg.kind == "dense") run_dense(cfg, r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Writes report.json and metrics.csv into `dir` and records their paths.
inline void write_report(RunReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());
  r.artifacts = {{"report", (dir / "report.json").string()}, {"metrics", (dir / "metrics.csv").string()}};
  write_text(dir / "metrics.csv", r.metrics_csv());
  write_text(dir / "report.json", r.to_json().dump(2) + "\n");
}

/// Loads, saves, and reloads an artifact; true when both objects and texts agree.
inline json artifact_roundtrip(const std::filesystem::path& path, const std::string& kind) {
  const auto text = read_text(path);
  auto trip = [&](auto load, auto save) {
    const auto a = load(text);
    const auto saved = save(a);
    const auto b = load(saved);
    return json{{"kind", kind}, {"path", path.string()}, {"identical", a == b}, {"text_stable", save(b) == saved}};
  };
  if (kind == "BFN") return trip(load_bfn, save_bfn);
  if (kind == "RFN") return trip(load_rfn, save_rfn);
  if (kind == "DST") return trip(load_dst, save_dst);
  if (kind == "CIR") return trip(load_cir, save_cir);
  if (kind == "PRT") return trip(load_prt, save_prt);
  if (kind == "CCT") {
    const auto a = load_cct(text);
    const auto saved = save_cct(a);
    const auto b = load_cct(saved);
    const bool same = a.arity == b.arity && a.n == b.n && a.plus == b.plus && a.minus == b.minus;
    return json{{"kind", kind}, {"path", path.string()}, {"identical", same}, {"text_stable", save_cct(b) == saved}};
  }
  throw config_error("unknown artifact kind '" + kind + "'");
}

}  // namespace simtest
