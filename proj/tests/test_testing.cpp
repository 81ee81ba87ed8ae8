#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "simtest/regularity.hpp"
#include "simtest/testing.hpp"

using namespace simtest;

namespace {

BooleanFunction random_bf(int bits, Rng& rng) {
  std::vector<std::uint8_t> t(std::size_t{1} << bits);
  for (auto& b : t) b = rng() & 1U;
  return {Domain(bits), std::move(t)};
}

RealTable random_rt(int bits, Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(std::size_t{1} << bits);
  for (auto& x : v) x = u(rng);
  return {Domain(bits), std::move(v)};
}

// Pascal-triangle oracle for the majority tail.
double tail_by_pascal(int r, double p) {
  std::vector<double> c{1.0};
  for (int i = 0; i < r; ++i) {
    std::vector<double> nc(c.size() + 1, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      nc[j] += c[j];
      nc[j + 1] += c[j];
    }
    c = nc;
  }
  double s = 0;
  for (int j = (r + 1) / 2; j <= r; ++j) s += c[j] * std::pow(p, j) * std::pow(1 - p, r - j);
  return s;
}

}  // namespace

TEST(Binomial, TailMatchesPascal) {
  for (int r = 1; r <= 41; r += 2)
    for (double p : {0.0, 0.05, 1.0 / 3.0, 0.5, 0.9}) EXPECT_NEAR(binomial_upper_tail(r, p), tail_by_pascal(r, p), 1e-12);
}

TEST(Binomial, SmallestReps) {
  for (double fail : {0.1, 0.2, 0.25, 1.0 / 3.0}) {
    int want = 1;
    while (tail_by_pascal(want, fail) > 1.0 / 12.0) want += 2;
    EXPECT_EQ(smallest_boost_reps(fail, 1.0 / 12.0), want);
  }
  EXPECT_THROW(smallest_boost_reps(0.5, 0.01, 21), budget_exceeded);
}

TEST(Boost, ExactAcceptanceIsBinomialTransform) {
  Rng rng(4);
  for (int k = 0; k < 10; ++k) {
    const auto t = Tester::from_table(2, 1, 2, true, random_bf(4, rng));
    const auto d = Distribution::uniform(Domain(1));
    const auto f = random_bf(1, rng);
    const double p = accept_prob(t, deterministic_labels(d, 1, f), AcceptMode::exact()).value;
    for (int reps : {1, 3, 5}) {
      const auto b = boost(t, reps);
      EXPECT_EQ(b.arity(), reps);
      const double q = accept_prob(b, deterministic_labels(d, reps, f), AcceptMode::exact()).value;
      EXPECT_NEAR(q, majority_accept(p, reps), 1e-12);
    }
  }
  EXPECT_THROW(boost(Tester::from_table(2, 1, 0, true, random_bf(2, rng)), 2), std::invalid_argument);
}

TEST(OracleGap, BoundAndHybridEndpoints) {
  Rng rng(12);
  for (int k = 0; k < 15; ++k) {
    const int n = 1 + k % 3, m = 1 + k % 2, ell = k % 3;
    const auto t = Tester::from_table(n + 1, m, ell, true, random_bf((n + 1) * m + ell, rng));
    const auto f = random_bf(n, rng);
    const auto ft = random_rt(n, rng);
    const auto d = Distribution::uniform(Domain(n));
    const auto g = oracle_sim_gap(t, f, ft, d);
    EXPECT_TRUE(g.holds);
    EXPECT_LE(g.gap, 2.0 * m * g.delta_star + 1e-9);
    EXPECT_NEAR(g.hybrids.back(), accept_prob(t, deterministic_labels(d, m, f), AcceptMode::exact()).value, 1e-14);
    EXPECT_NEAR(g.hybrids.front(), accept_prob(t, bernoulli_labels(d, m, ft), AcceptMode::exact()).value, 1e-14);
  }
}

TEST(OracleGap, ZeroWhenSimulatorIsExact) {
  Rng rng(13);
  const auto t = Tester::from_table(3, 2, 1, true, random_bf(7, rng));
  const auto f = random_bf(2, rng);
  const auto g = oracle_sim_gap(t, f, RealTable::from_boolean(f), Distribution::uniform(Domain(2)));
  EXPECT_NEAR(g.gap, 0.0, 1e-15);
  EXPECT_NEAR(g.delta_star, 0.0, 1e-15);
}

TEST(TesterGap, BoundOnRandomSimulators) {
  Rng rng(14);
  for (int k = 0; k < 10; ++k) {
    const int n = 1 + k % 3, m = 1 + k % 2;
    const auto t = Tester::from_table(n + 1, m, 1, true, random_bf((n + 1) * m + 1, rng));
    const auto tbar = mean_tester(t).table;
    const auto ft = random_rt(n, rng);
    const auto d = Distribution::uniform(Domain(n));
    const auto tt = random_rt((n + 1) * m, rng);
    const auto g = tester_sim_gap(tbar, tt, m, ft, d);
    EXPECT_TRUE(g.holds);
    EXPECT_LE(g.gap, std::ldexp(g.gamma_star, m) + 1e-9);
  }
}

TEST(Validity, ClassifiesByThresholds) {
  AcceptEstimate sure{1, 1, 1, true, 0}, never{0, 0, 0, true, 0}, wide{0.5, 0.2, 0.8, false, 10};
  EXPECT_EQ(classify(true, false, sure), Verdict::valid_accept);
  EXPECT_EQ(classify(true, false, never), Verdict::violation);
  EXPECT_EQ(classify(true, false, wide), Verdict::inconclusive);
  EXPECT_EQ(classify(false, true, never), Verdict::valid_reject);
  EXPECT_EQ(classify(false, true, sure), Verdict::violation);
  EXPECT_EQ(classify(false, false, sure), Verdict::in_gap);
}

TEST(Validity, AlwaysAcceptViolatesOnlyFarFunctions) {
  const auto t = Tester::from_table(3, 1, 0, true, BooleanFunction::constant(Domain(3), true));
  const PropertySet p(Domain(2), {BooleanFunction::from_string("0000")});
  const auto rep = validity_check(t, p, 0.25, Distribution::uniform(Domain(2)), AcceptMode::exact());
  EXPECT_EQ(rep.rows.size(), 16u);
  EXPECT_EQ(rep.count(Verdict::valid_accept), 1u);
  EXPECT_EQ(rep.count(Verdict::in_gap), 4u);
  EXPECT_EQ(rep.count(Verdict::violation), 11u);
}

TEST(Hoeffding, HalfWidth) {
  EXPECT_NEAR(hoeffding_halfwidth(1000), std::sqrt(std::log(200.0) / 2000.0), 1e-15);
}
