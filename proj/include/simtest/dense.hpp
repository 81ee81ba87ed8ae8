#pragma once

// μ-dense distributions over small domains and the dense forms of the two
// simulation gaps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "simtest/core.hpp"
#include "simtest/families.hpp"
#include "simtest/tester.hpp"
#include "simtest/testing.hpp"

namespace simtest {

class density_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// μ = 1 / max_x D(x)/D_0(x).
inline double dense_density(const Distribution& d, const Distribution& d0) {
  require_same(d.domain(), d0.domain(), "dense_density");
  double worst = 0.0;
  for (std::uint64_t x = 0; x < d.domain().size(); ++x) {
    if (d(x) == 0.0) continue;
    if (d0(x) == 0.0) throw density_error("dense_density: support of D is not inside support of D_0 at x=" + std::to_string(x));
    worst = std::max(worst, d(x) / d0(x));
  }
  return 1.0 / worst;
}

struct DenseDistribution {
  Distribution base;
  Distribution target;
  double mu = 1.0;

  static DenseDistribution of(Distribution d0, Distribution d) {
    const double mu = dense_density(d, d0);
    return {std::move(d0), std::move(d), mu};
  }

  bool valid(double tol = 1e-12) const {
    for (std::uint64_t x = 0; x < base.domain().size(); ++x) {
      if (target(x) == 0.0) continue;
      if (base(x) == 0.0 || target(x) / base(x) > 1.0 / mu + tol) return false;
    }
    return true;
  }
};

/// f with D_f(x) = f(x)·D_0(x); E_{D_0}[f] = 1 and f ≤ 1/μ.
class DensityFunction {
 public:
  DensityFunction(Distribution base, std::vector<double> f, double mu) : base_(std::move(base)), f_(std::move(f)), mu_(mu) {
    if (f_.size() != base_.domain().size()) throw domain_mismatch("DensityFunction: table size mismatch");
    if (!(mu_ > 0.0 && mu_ <= 1.0)) throw density_error("density: mu must lie in (0, 1]");
    CompensatedSum s;
    for (std::uint64_t x = 0; x < f_.size(); ++x) {
      const double v = f_[x];
      if (v < 0.0 || v > 1.0 / mu_ + 1e-12) throw density_error("density: value outside [0, 1/mu] at x=" + std::to_string(x));
      if (v > 0.0 && base_(x) == 0.0) throw density_error("density: mass outside the base support");
      s.add(v * base_(x));
    }
    if (std::abs(s.value() - 1.0) > 1e-9) throw density_error("density: E_D0[f] must be 1");
  }

  static DensityFunction from_distribution(const Distribution& d, const Distribution& d0, double mu) {
    require_same(d.domain(), d0.domain(), "DensityFunction");
    std::vector<double> v(d.domain().size(), 0.0);
    for (std::uint64_t x = 0; x < v.size(); ++x) {
      if (d(x) == 0.0) continue;
      if (d0(x) == 0.0) throw density_error("density: support of D is not inside support of D_0");
      v[x] = d(x) / d0(x);
    }
    return {d0, std::move(v), mu};
  }

  /// Density of the pair (x, f(x)) for x ~ D inside D × uniform{0,1}.
  static DensityFunction pair(const BooleanFunction& f, const Distribution& d) {
    const int n = f.domain().bits();
    const Domain pd(n + 1);
    std::vector<double> v(pd.size(), 0.0);
    for (std::uint64_t x = 0; x < f.domain().size(); ++x) v[labeled_point(x, f(x), n)] = d(x) > 0.0 ? 2.0 : 0.0;
    return {uniform_labels(d, 1).materialize(), std::move(v), 0.5};
  }

  /// Density of (x, y) with y ~ Bernoulli(f̃(x)).
  static DensityFunction pair(const RealTable& ft, const Distribution& d) {
    const int n = ft.domain().bits();
    const Domain pd(n + 1);
    std::vector<double> v(pd.size(), 0.0);
    for (std::uint64_t x = 0; x < ft.domain().size(); ++x) {
      if (d(x) == 0.0) continue;
      v[labeled_point(x, true, n)] = 2.0 * ft(x);
      v[labeled_point(x, false, n)] = 2.0 * (1.0 - ft(x));
    }
    return {uniform_labels(d, 1).materialize(), std::move(v), 0.5};
  }

  const Distribution& base() const { return base_; }
  const Domain& domain() const { return base_.domain(); }
  std::span<const double> values() const { return f_; }
  double mu() const { return mu_; }
  double operator()(std::uint64_t x) const { return f_[x]; }

  /// μf ∈ [0, 1].
  RealTable scaled() const {
    std::vector<double> v(f_.size());
    for (std::uint64_t x = 0; x < v.size(); ++x) v[x] = std::min(1.0, mu_ * f_[x]);
    return {domain(), std::move(v)};
  }

  Distribution distribution() const {
    std::vector<double> w(f_.size());
    for (std::uint64_t x = 0; x < w.size(); ++x) w[x] = f_[x] * base_(x);
    return Distribution::normalized(domain(), std::move(w));
  }

  /// f^(m)(x) = Π_i f(x_i).
  double product(std::span<const std::uint32_t> xs) const {
    double p = 1.0;
    for (auto x : xs) p *= f_[x];
    return p;
  }

 private:
  Distribution base_;
  std::vector<double> f_;
  double mu_;
};

/// (1 − λ)f + λg, still a μ-density.
inline DensityFunction mix(const DensityFunction& f, const DensityFunction& g, double lambda) {
  require_same(f.domain(), g.domain(), "mix");
  std::vector<double> v(f.domain().size());
  for (std::uint64_t x = 0; x < v.size(); ++x) v[x] = (1.0 - lambda) * f(x) + lambda * g(x);
  return {f.base(), std::move(v), std::min(f.mu(), g.mu())};
}

struct DenseOracleGapReport {
  double gap = 0.0;
  double delta_star = 0.0;
  double bound = 0.0;
  std::vector<double> hybrids;
  double max_step = 0.0;
  bool steps_hold = true;
  bool holds = true;

  json to_json() const {
    return {{"gap", gap},           {"delta_star", delta_star}, {"bound", bound},       {"hybrids", hybrids},
            {"max_step", max_step}, {"steps_hold", steps_hold}, {"holds", holds}};
  }
};

/// The same evaluator seen as a tester of unlabeled points.
inline Tester as_unlabeled(const Tester& t) {
  auto shared = std::make_shared<const Tester>(t);
  return {t.point_bits(), t.arity(), t.seed_bits(), false,
          [shared](std::span<const std::uint32_t> pts, std::uint64_t seed) { return (*shared)(pts, seed); },
          t.backend(), t.descriptor()};
}

/// |E_{D_f^m}[T] − E_{D_f̃^m}[T]| against m·δ*/μ, δ* the max R(T) advantage on μf vs μf̃ under D_0.
inline DenseOracleGapReport dense_oracle_sim_gap(const Tester& t, const DensityFunction& f, const DensityFunction& ft) {
  if (t.is_labeled()) throw std::invalid_argument("dense_oracle_sim_gap: tester must take unlabeled points");
  require_same(f.domain(), ft.domain(), "dense_oracle_sim_gap");
  if (t.point_bits() != f.domain().bits()) throw domain_mismatch("dense_oracle_sim_gap: point width mismatch");
  const int m = t.arity();
  const double mu = std::min(f.mu(), ft.mu());
  const auto mean = mean_tester(t).table;
  const auto df = f.distribution();
  const auto dft = ft.distribution();
  DenseOracleGapReport r;
  for (int i = 0; i <= m; ++i) {
    std::vector<Distribution> coords;
    for (int c = 0; c < m; ++c) coords.push_back(c < i ? df : dft);
    r.hybrids.push_back(exact_expectation(mean, ProductDistribution(std::move(coords), m)));
  }
  r.gap = std::abs(r.hybrids.back() - r.hybrids.front());
  r.delta_star = max_advantage(restrictions_of(t), f.scaled(), ft.scaled(), f.base());
  r.bound = m * r.delta_star / mu;
  for (int i = 1; i <= m; ++i)
    r.max_step = std::max(r.max_step, std::abs(r.hybrids[static_cast<std::size_t>(i)] -
                                               r.hybrids[static_cast<std::size_t>(i - 1)]));
  r.steps_hold = r.max_step <= r.delta_star / mu + gap_tolerance;
  r.holds = r.gap <= r.bound + gap_tolerance && r.steps_hold;
  return r;
}

/// 1[∀i: g(x_i) ≥ t_i] over unlabeled tuples, every t from the proof grid of g.
inline DistinguisherFamily threshold_family(const RealTable& g, int m) {
  const auto grid = std::make_shared<const std::vector<double>>(proof_threshold_grid(g));
  const TupleLayout lay{g.domain().bits(), m};
  if (lay.bits() > max_table_bits) throw budget_exceeded("threshold_family: tuple space too large");
  std::uint64_t size = 1;
  for (int i = 0; i < m; ++i) size *= grid->size();
  auto gs = std::make_shared<const RealTable>(g);
  return DistinguisherFamily::lazy(
      Domain(lay.bits()), size,
      [grid, gs, lay, m](std::uint64_t idx) {
        std::vector<double> t(static_cast<std::size_t>(m));
        for (int i = m - 1; i >= 0; --i) {
          t[static_cast<std::size_t>(i)] = (*grid)[idx % grid->size()];
          idx /= grid->size();
        }
        std::vector<double> v(std::size_t{1} << lay.bits());
        for (std::uint64_t tup = 0; tup < v.size(); ++tup) {
          bool ok = true;
          for (int i = 0; i < m && ok; ++i) ok = (*gs)(lay.point(tup, i)) >= t[static_cast<std::size_t>(i)];
          v[tup] = ok ? 1.0 : 0.0;
        }
        return Distinguisher(Domain(lay.bits()), std::move(v), {{"kind", "threshold"}, {"thresholds", t}});
      },
      {{"kind", "threshold_family"}, {"arity", m}, {"size", size}});
}

/// |E_{D_f̃^m}[T̄] − E_{D_f̃^m}[T̃]| against μ^{−m}·γ*, γ* over m-fold thresholds of μf̃ under D_0^m.
inline TesterGapReport dense_tester_sim_gap(const RealTable& tbar, const RealTable& ttilde, const DensityFunction& ft,
                                            int m) {
  require_same(tbar.domain(), ttilde.domain(), "dense_tester_sim_gap");
  const TupleLayout lay{ft.domain().bits(), m};
  if (tbar.domain().bits() != lay.bits()) throw domain_mismatch("dense_tester_sim_gap: tuple width mismatch");
  const auto law = ProductDistribution::iid(ft.distribution(), m);
  TesterGapReport r;
  r.gap = std::abs(exact_expectation(tbar, law) - exact_expectation(ttilde, law));
  r.gamma_star = max_advantage(threshold_family(ft.scaled(), m), tbar, ttilde, ProductDistribution::iid(ft.base(), m).materialize());
  r.bound = r.gamma_star / std::pow(ft.mu(), m);
  r.holds = r.gap <= r.bound + gap_tolerance;
  return r;
}

/// δ = μ/(25m), γ = μ^m/13.
struct DenseConstants {
  double delta;
  double gamma;
};
inline DenseConstants dense_constants(double mu, int m) { return {mu / (25.0 * m), std::pow(mu, m) / 13.0}; }

}  // namespace simtest
