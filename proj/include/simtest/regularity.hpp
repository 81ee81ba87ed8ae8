#pragma once

// Simulator construction loops and the clipped prefix-sum inequality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simtest/core.hpp"
#include "simtest/families.hpp"

namespace simtest {

/// The loop reached its term cap in a mode where the cap is a theorem.
class iteration_cap_reached : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct SimulationParams {
  double delta = 0.1;
  /// Step size; δ/2 unless overridden.
  std::optional<double> eta;
  /// h_0; the sum is [offset + η Σ σ_j f_j]_0^1.
  double offset = 0.0;
  SearchOptions search;
  std::uint64_t seed = 0;
  /// Hard stop used when an η override removes the theorem's cap.
  std::size_t fallback_max_terms = 100000;
};

/// The mapping from a simulator prefix to the family its next violator is drawn from.
struct GrowthFunction {
  std::function<DistinguisherFamily(const StructuredSum& prefix)> family;
  json descriptor = json::object();

  static GrowthFunction constant(DistinguisherFamily fam) {
    auto d = fam.descriptor();
    return {[fam = std::move(fam)](const StructuredSum&) { return fam; }, {{"kind", "constant"}, {"family", d}}};
  }
};

enum class Certification { exhaustively_certified, search_limited, cap_reached };

inline std::string certification_name(Certification c) {
  switch (c) {
    case Certification::exhaustively_certified: return "exhaustively-certified";
    case Certification::search_limited: return "search-limited";
    case Certification::cap_reached: return "cap-reached";
  }
  return "?";
}

struct IterationRecord {
  std::size_t iteration = 0;
  json violator;
  int sign = 1;
  double advantage = 0.0;
  std::uint64_t evaluated = 0;
};

/// max(o, 1 − o)²/2: the bound on E[(g − o)²]/2 for g ∈ [0, 1].
inline double potential_budget(double offset) {
  const double r = std::max(offset, 1.0 - offset);
  return r * r / 2.0;
}

/// Terms allowed strictly below B(o)/(η(δ − η)); infinite when η ≥ δ.
inline double term_cap(double delta, double eta, double offset) {
  if (!(eta < delta)) return std::numeric_limits<double>::infinity();
  return potential_budget(offset) / (eta * (delta - eta));
}

struct SimulationReport {
  StructuredSum sum;
  std::vector<IterationRecord> iterations;
  Certification status = Certification::search_limited;
  double delta = 0.0;
  double eta = 0.0;
  double offset = 0.0;
  bool eta_overridden = false;
  double cap = 0.0;
  SearchMode mode = SearchMode::exhaustive;
  /// Σ η·adv_j against B(o) + kη².
  double potential_lhs = 0.0;
  double potential_rhs = 0.0;

  std::size_t k() const { return sum.size(); }
  bool potential_holds() const { return potential_lhs <= potential_rhs + 1e-12; }
  bool below_cap() const { return static_cast<double>(k()) < cap; }

  json to_json() const {
    json iters = json::array();
    for (const auto& it : iterations)
      iters.push_back({{"iteration", it.iteration},
                       {"violator", it.violator},
                       {"sign", it.sign},
                       {"advantage", it.advantage},
                       {"evaluated", it.evaluated}});
    json cap_json = std::isfinite(cap) ? json(cap) : json("inf");
    return {{"k", k()},
            {"status", certification_name(status)},
            {"mode", search_mode_name(mode)},
            {"delta", delta},
            {"eta", eta},
            {"offset", offset},
            {"eta_overridden", eta_overridden},
            {"termination_guaranteed", !eta_overridden},
            {"cap", cap_json},
            {"potential_lhs", potential_lhs},
            {"potential_rhs", potential_rhs},
            {"potential_holds", potential_holds()},
            {"iterations", std::move(iters)},
            {"sum", sum.to_json()}};
  }
};

/// h_j = [o + η Σ σ_i f_i]_0^1 with f_j drawn from ±growth(h_{j−1}); returns the first regular h_j.
inline SimulationReport supersimulate(const RealTable& g, const GrowthFunction& growth, const Distribution& d,
                                      const SimulationParams& p) {
  if (!(p.delta > 0.0 && p.delta <= 1.0)) throw std::invalid_argument("simulate: delta must lie in (0, 1]");
  require_same(g.domain(), d.domain(), "simulate");
  const double eta = p.eta.value_or(p.delta / 2.0);
  if (!(eta > 0.0)) throw std::invalid_argument("simulate: eta must be positive");
  if (p.offset < 0.0 || p.offset > 1.0) throw std::invalid_argument("simulate: offset must lie in [0, 1]");

  SimulationReport rep{StructuredSum(g.domain(), eta, p.offset), {}};
  rep.delta = p.delta;
  rep.eta = eta;
  rep.offset = p.offset;
  rep.eta_overridden = p.eta.has_value() && *p.eta != p.delta / 2.0;
  rep.cap = term_cap(p.delta, eta, p.offset);
  rep.mode = p.search.mode;

  Rng rng(p.seed);
  std::vector<double> acc(g.domain().size(), 0.0);
  std::vector<double> hv(acc.size(), clip01(p.offset));
  double adv_sum = 0.0;

  for (std::size_t j = 0;; ++j) {
    const RealTable h(g.domain(), hv);
    const auto fam = growth.family(rep.sum);
    auto res = find_violator(fam, g, h, p.delta, d, p.search, rng);
    if (!res.violation) {
      rep.status = res.certified ? Certification::exhaustively_certified : Certification::search_limited;
      break;
    }
    const double next = static_cast<double>(j + 1);
    if (!(next < rep.cap) || j + 1 > p.fallback_max_terms) {
      if (p.search.mode == SearchMode::exhaustive && !rep.eta_overridden)
        throw iteration_cap_reached("simulate: violator found with " + std::to_string(j) +
                                    " terms at the cap; the potential bound is contradicted");
      rep.status = Certification::cap_reached;
      break;
    }
    auto& v = *res.violation;
    adv_sum += eta * v.advantage;
    json prov = {{"iteration", j}, {"simulator_terms", j}, {"family", fam.descriptor()}};
    if (v.index) prov["index"] = *v.index;
    rep.iterations.push_back({j, v.element.descriptor(), v.sign, v.advantage, res.evaluated});
    const auto vals = v.element.values();
    for (std::size_t x = 0; x < acc.size(); ++x) {
      acc[x] += v.sign * vals[x];
      hv[x] = clip01(p.offset + eta * acc[x]);
    }
    rep.sum.append(v.sign, std::move(v.element), std::move(prov));
  }
  rep.potential_lhs = adv_sum;
  rep.potential_rhs = potential_budget(p.offset) + static_cast<double>(rep.k()) * eta * eta;
  return rep;
}

inline SimulationReport ttv_simulate(const RealTable& g, const DistinguisherFamily& fam, const Distribution& d,
                                     const SimulationParams& p) {
  return supersimulate(g, GrowthFunction::constant(fam), d, p);
}

/// b²/2 − Σ_j a_j (b − s_j) with s_j = [a_1 + … + a_j]_0^1.
inline double prefix_clip_slack(std::span<const double> a, double b) {
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("prefix_clip_slack: b must lie in [0, 1]");
  double prefix = 0.0;
  double lhs = 0.0;
  for (double aj : a) {
    prefix += aj;
    lhs += aj * (b - clip01(prefix));
  }
  return b * b / 2.0 - lhs;
}

}  // namespace simtest
