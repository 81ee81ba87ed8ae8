#pragma once

// Acceptance probabilities, boosting, the two simulation gaps, and validity sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simtest/core.hpp"
#include "simtest/families.hpp"
#include "simtest/tester.hpp"

namespace simtest {

struct AcceptMode {
  enum class Kind { exact, mc };
  Kind kind = Kind::exact;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  static AcceptMode exact() { return {}; }
  static AcceptMode mc(std::uint64_t trials, std::uint64_t seed) { return {Kind::mc, trials, seed}; }
};

struct AcceptEstimate {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool exact = true;
  std::uint64_t trials = 0;

  json to_json() const { return {{"value", value}, {"lo", lo}, {"hi", hi}, {"exact", exact}, {"trials", trials}}; }
};

/// 99% two-sided Hoeffding half-width for N Bernoulli trials.
inline double hoeffding_halfwidth(std::uint64_t trials, double confidence = 0.99) {
  return std::sqrt(std::log(2.0 / (1.0 - confidence)) / (2.0 * static_cast<double>(trials)));
}

/// E[T̄(t)] with t drawn from a product law, by full enumeration of tuples.
inline double exact_expectation(const RealTable& tuple_fn, const ProductDistribution& dist) {
  const auto lay = dist.layout();
  if (tuple_fn.domain().bits() != lay.bits()) throw domain_mismatch("exact_expectation: tuple width mismatch");
  CompensatedSum s;
  for (std::uint64_t t = 0; t < tuple_fn.domain().size(); ++t) {
    const double v = tuple_fn(t);
    if (v == 0.0) continue;
    const double w = dist.weight(t);
    if (w != 0.0) s.add(w * v);
  }
  return s.value();
}

inline AcceptEstimate accept_prob(const Tester& t, const ProductDistribution& dist, const AcceptMode& mode) {
  if (dist.arity() != t.arity() || dist.point_bits() != t.point_bits())
    throw domain_mismatch("accept_prob: distribution does not match the tester's sample space");
  if (mode.kind == AcceptMode::Kind::exact) {
    const double v = exact_expectation(mean_tester(t).table, dist);
    return {v, v, v, true, 0};
  }
  if (mode.trials == 0) throw std::invalid_argument("accept_prob: mc mode needs trials > 0");
  Rng rng(mode.seed);
  std::vector<std::uint32_t> pts(static_cast<std::size_t>(t.arity()));
  std::uniform_int_distribution<std::uint64_t> seed_dist(
      0, t.seed_bits() == 0 ? 0 : (std::uint64_t{1} << t.seed_bits()) - 1);
  std::uint64_t hits = 0;
  for (std::uint64_t k = 0; k < mode.trials; ++k) {
    dist.sample(rng, pts);
    hits += t(pts, seed_dist(rng));
  }
  const double p = static_cast<double>(hits) / static_cast<double>(mode.trials);
  const double hw = hoeffding_halfwidth(mode.trials);
  return {p, std::max(0.0, p - hw), std::min(1.0, p + hw), false, mode.trials};
}

/// Majority vote of `reps` copies on disjoint sample and seed blocks.
inline Tester boost(const Tester& t, int reps) {
  if (reps < 1 || reps % 2 == 0) throw std::invalid_argument("boost: reps must be odd and positive");
  if (reps == 1) return t;
  const int m = t.arity();
  const int ell = t.seed_bits();
  if (static_cast<long long>(reps) * ell > 63) throw budget_exceeded("boost: seed does not fit in 63 bits");
  auto base = std::make_shared<const Tester>(t);
  const std::uint64_t smask = ell == 0 ? 0 : (std::uint64_t{1} << ell) - 1;
  return {t.point_bits(), reps * m, reps * ell, t.is_labeled(),
          [base, reps, m, ell, smask](std::span<const std::uint32_t> pts, std::uint64_t seed) {
            int votes = 0;
            for (int k = 0; k < reps; ++k)
              votes += (*base)(pts.subspan(static_cast<std::size_t>(k * m), static_cast<std::size_t>(m)),
                               (seed >> (k * ell)) & smask);
            return 2 * votes > reps;
          },
          "composed", {{"kind", "boost"}, {"reps", reps}, {"base", t.descriptor()}}};
}

inline double binomial_coefficient(int r, int j) {
  return std::exp(std::lgamma(r + 1.0) - std::lgamma(j + 1.0) - std::lgamma(r - j + 1.0));
}

/// P[Bin(r, p) ≥ ⌈r/2⌉] for odd r: the probability the majority is wrong when each copy errs w.p. p.
inline double binomial_upper_tail(int r, double p) {
  CompensatedSum s;
  for (int j = (r + 1) / 2; j <= r; ++j) s.add(binomial_coefficient(r, j) * std::pow(p, j) * std::pow(1.0 - p, r - j));
  return s.value();
}

/// Acceptance of the majority of r copies each accepting w.p. p.
inline double majority_accept(double p, int reps) { return binomial_upper_tail(reps, p); }

/// Smallest odd r with P[Bin(r, fail) ≥ ⌈r/2⌉] ≤ target.
inline int smallest_boost_reps(double fail, double target, int max_reps = 1001) {
  for (int r = 1; r <= max_reps; r += 2)
    if (binomial_upper_tail(r, fail) <= target) return r;
  throw budget_exceeded("smallest_boost_reps: no odd count within the search limit");
}

struct OracleGapReport {
  double gap = 0.0;
  double delta_star = 0.0;
  double bound = 0.0;
  /// a_i: first i coordinates labeled by f, the rest by f̃.
  std::vector<double> hybrids;
  double max_step = 0.0;
  bool steps_hold = true;
  bool holds = true;

  json to_json() const {
    return {{"gap", gap},           {"delta_star", delta_star}, {"bound", bound},       {"hybrids", hybrids},
            {"max_step", max_step}, {"steps_hold", steps_hold}, {"holds", holds}};
  }
};

inline constexpr double gap_tolerance = 1e-9;

namespace detail {

inline OracleGapReport oracle_gap_from(const RealTable& mean, const DistinguisherFamily& restrictions, int m,
                                       const RealTable& f, const RealTable& ft, const Distribution& d) {
  OracleGapReport r;
  for (int i = 0; i <= m; ++i) r.hybrids.push_back(exact_expectation(mean, hybrid_labels(d, m, f, ft, i)));
  r.gap = std::abs(r.hybrids.back() - r.hybrids.front());
  r.delta_star = max_advantage(restrictions, f, ft, d);
  r.bound = 2.0 * m * r.delta_star;
  for (int i = 1; i <= m; ++i)
    r.max_step = std::max(r.max_step, std::abs(r.hybrids[static_cast<std::size_t>(i)] -
                                               r.hybrids[static_cast<std::size_t>(i - 1)]));
  r.steps_hold = r.max_step <= 2.0 * r.delta_star + gap_tolerance;
  r.holds = r.gap <= r.bound + gap_tolerance && r.steps_hold;
  return r;
}

}  // namespace detail

/// |E[T(x, f(x), r)] − E[T(x, ỹ, r)]| with ỹ ~ B(f̃), against 2m·max_{R(T)} advantage.
inline OracleGapReport oracle_sim_gap(const Tester& t, const BooleanFunction& f, const RealTable& ft,
                                      const Distribution& d) {
  if (!t.is_labeled()) throw std::invalid_argument("oracle_sim_gap: tester must take labeled samples");
  require_same(f.domain(), d.domain(), "oracle_sim_gap");
  require_same(ft.domain(), d.domain(), "oracle_sim_gap");
  if (t.base_bits() != d.domain().bits()) throw domain_mismatch("oracle_sim_gap: tester point width mismatch");
  return detail::oracle_gap_from(mean_tester(t).table, restrictions_of(t), t.arity(), RealTable::from_boolean(f), ft,
                                 d);
}

/// The same gap for a real-valued tuple function, against its seedless restrictions.
inline OracleGapReport oracle_sim_gap(const RealTable& tuple_fn, int m, const RealTable& f, const RealTable& ft,
                                      const Distribution& d) {
  const TupleLayout lay{d.domain().bits() + 1, m};
  return detail::oracle_gap_from(tuple_fn, restrictions_of(tuple_fn, lay, true), m, f, ft, d);
}

struct TesterGapReport {
  double gap = 0.0;
  double gamma_star = 0.0;
  double bound = 0.0;
  bool holds = true;

  json to_json() const { return {{"gap", gap}, {"gamma_star", gamma_star}, {"bound", bound}, {"holds", holds}}; }
};

/// Γ_m({f̃}) with thresholds realising every t ∈ (0, 1].
inline DistinguisherFamily proof_consistency_family(const RealTable& ft, int m) {
  return consistency_family({ft}, m, std::vector<std::vector<double>>{proof_threshold_grid(ft)});
}

/// D^m × uniform labels as a law over packed tuples.
inline Distribution regularity_measure(const Distribution& d, int m) { return uniform_labels(d, m).materialize(); }

/// |E[T̄(x, ỹ)] − E[T̃(x, ỹ)]| with ỹ ~ B(f̃), against 2^m·max_{Γ_m({f̃})} advantage under D^m × U.
inline TesterGapReport tester_sim_gap(const RealTable& tbar, const RealTable& ttilde, int m, const RealTable& ft,
                                      const Distribution& d) {
  require_same(tbar.domain(), ttilde.domain(), "tester_sim_gap");
  require_same(ft.domain(), d.domain(), "tester_sim_gap");
  const auto labels = bernoulli_labels(d, m, ft);
  TesterGapReport r;
  r.gap = std::abs(exact_expectation(tbar, labels) - exact_expectation(ttilde, labels));
  r.gamma_star = max_advantage(proof_consistency_family(ft, m), tbar, ttilde, regularity_measure(d, m));
  r.bound = std::ldexp(r.gamma_star, m);
  r.holds = r.gap <= r.bound + gap_tolerance;
  return r;
}

inline TesterGapReport tester_sim_gap(const MeanTester& tbar, const RealTable& ttilde, const RealTable& ft,
                                      const Distribution& d) {
  return tester_sim_gap(tbar.table, ttilde, tbar.arity(), ft, d);
}

enum class Verdict { valid_accept, valid_reject, violation, in_gap, inconclusive };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::valid_accept: return "valid-accept";
    case Verdict::valid_reject: return "valid-reject";
    case Verdict::violation: return "violation";
    case Verdict::in_gap: return "in-gap";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ValidityRow {
  BooleanFunction f;
  bool in_p = false;
  double distance = 0.0;
  AcceptEstimate accept;
  Verdict verdict = Verdict::in_gap;
};

struct ValidityReport {
  std::vector<ValidityRow> rows;

  std::size_t count(Verdict v) const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [v](const auto& r) { return r.verdict == v; }));
  }
  std::vector<BooleanFunction> violations() const {
    std::vector<BooleanFunction> out;
    for (const auto& r : rows)
      if (r.verdict == Verdict::violation) out.push_back(r.f);
    return out;
  }

  json to_json() const {
    json rs = json::array();
    for (const auto& r : rows)
      rs.push_back({{"f", r.f.to_string()},
                    {"in_p", r.in_p},
                    {"distance", r.distance},
                    {"accept", r.accept.to_json()},
                    {"verdict", verdict_name(r.verdict)}});
    return {{"violations", count(Verdict::violation)},
            {"inconclusive", count(Verdict::inconclusive)},
            {"valid_accept", count(Verdict::valid_accept)},
            {"valid_reject", count(Verdict::valid_reject)},
            {"in_gap", count(Verdict::in_gap)},
            {"rows", std::move(rs)}};
  }
};

/// Must-accept members of P, must-reject functions outside P_ε; interval estimates are judged by their bounds.
inline Verdict classify(bool in_p, bool far, const AcceptEstimate& a) {
  constexpr double accept_level = 2.0 / 3.0;
  constexpr double reject_level = 1.0 / 3.0;
  if (in_p) {
    if (a.lo >= accept_level) return Verdict::valid_accept;
    if (a.hi < accept_level) return Verdict::violation;
    return Verdict::inconclusive;
  }
  if (far) {
    if (a.hi <= reject_level) return Verdict::valid_reject;
    if (a.lo > reject_level) return Verdict::violation;
    return Verdict::inconclusive;
  }
  return Verdict::in_gap;
}

inline ValidityReport validity_check(const Tester& t, const PropertySet& p, double eps, const Distribution& d,
                                     const AcceptMode& mode,
                                     std::optional<std::vector<BooleanFunction>> universe = std::nullopt) {
  require_same(p.domain(), d.domain(), "validity_check");
  std::vector<BooleanFunction> fs;
  if (universe) {
    fs = std::move(*universe);
  } else {
    PropertySet::for_each_function(p.domain(), [&](const BooleanFunction& f) { fs.push_back(f); });
  }
  ValidityReport rep;
  std::uint64_t k = 0;
  for (const auto& f : fs) {
    ValidityRow row{f, false, 0.0, {}, Verdict::in_gap};
    row.in_p = p.contains(f);
    row.distance = p.distance_to(f);
    const bool far = row.distance > eps;
    if (row.in_p || far) {
      AcceptMode m = mode;
      m.seed = mode.seed + k;
      row.accept = accept_prob(t, deterministic_labels(d, t.arity(), f), m);
    }
    row.verdict = classify(row.in_p, far, row.accept);
    rep.rows.push_back(std::move(row));
    ++k;
  }
  return rep;
}

}  // namespace simtest
