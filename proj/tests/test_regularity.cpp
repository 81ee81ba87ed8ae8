#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "simtest/regularity.hpp"

using namespace simtest;

namespace {

RealTable random_rt(int bits, Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(std::size_t{1} << bits);
  for (auto& x : v) x = u(rng);
  return {Domain(bits), std::move(v)};
}

DistinguisherFamily random_family(int n, int size, Rng& rng) {
  std::vector<Distinguisher> e;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < size; ++k) {
    std::vector<double> v(std::size_t{1} << n);
    for (auto& x : v) x = k % 2 ? u(rng) : static_cast<double>(rng() & 1U);
    e.emplace_back(Domain(n), std::move(v));
  }
  return DistinguisherFamily::explicit_list(Domain(n), std::move(e));
}

}  // namespace

TEST(PotentialBudget, Values) {
  EXPECT_DOUBLE_EQ(potential_budget(0.0), 0.5);
  EXPECT_DOUBLE_EQ(potential_budget(0.5), 0.125);
  EXPECT_DOUBLE_EQ(term_cap(0.1, 0.05, 0.0), 0.5 / (0.05 * 0.05));
  EXPECT_TRUE(std::isinf(term_cap(0.1, 0.1, 0.0)));
}

TEST(Ttv, OutputIsRegularAndShort) {
  Rng rng(17);
  for (int k = 0; k < 40; ++k) {
    const int n = 1 + k % 4;
    const double delta = k % 2 ? 0.1 : 0.2;
    const auto fam = random_family(n, 1 + static_cast<int>(rng() % 64), rng);
    const auto g = random_rt(n, rng);
    const auto d = Distribution::uniform(Domain(n));
    SimulationParams p;
    p.delta = delta;
    const auto rep = ttv_simulate(g, fam, d, p);
    EXPECT_EQ(rep.status, Certification::exhaustively_certified);
    EXPECT_LT(static_cast<double>(rep.k()), 2.0 / (delta * delta));
    EXPECT_TRUE(rep.below_cap());
    EXPECT_TRUE(rep.potential_holds());
    EXPECT_LE(max_advantage(fam, g, rep.sum.table(), d), delta + 1e-9);
  }
}

TEST(Ttv, EmptyWorkWhenAlreadyRegular) {
  const auto fam = DistinguisherFamily::explicit_list(Domain(2), {Distinguisher::constant(Domain(2), 0.0)});
  SimulationParams p;
  const auto rep = ttv_simulate(RealTable::constant(Domain(2), 0.7), fam, Distribution::uniform(Domain(2)), p);
  EXPECT_EQ(rep.k(), 0u);
  EXPECT_EQ(rep.status, Certification::exhaustively_certified);
}

TEST(Ttv, StepOverrideLosesGuarantee) {
  Rng rng(2);
  SimulationParams p;
  p.delta = 0.1;
  p.eta = 0.2;
  p.fallback_max_terms = 50;
  const auto rep = ttv_simulate(random_rt(3, rng), random_family(3, 16, rng), Distribution::uniform(Domain(3)), p);
  EXPECT_TRUE(rep.eta_overridden);
  EXPECT_TRUE(std::isinf(rep.cap));
  EXPECT_EQ(rep.to_json()["termination_guaranteed"], false);
}

TEST(Ttv, OffsetShiftsStart) {
  SimulationParams p;
  p.offset = 0.5;
  const auto fam = DistinguisherFamily::explicit_list(Domain(1), {Distinguisher::constant(Domain(1), 1.0)});
  const auto rep = ttv_simulate(RealTable::constant(Domain(1), 0.5), fam, Distribution::uniform(Domain(1)), p);
  EXPECT_EQ(rep.k(), 0u);
  EXPECT_DOUBLE_EQ(rep.sum.table()(0), 0.5);
  p.offset = 1.5;
  EXPECT_THROW(ttv_simulate(RealTable::constant(Domain(1), 0.5), fam, Distribution::uniform(Domain(1)), p),
               std::invalid_argument);
}

TEST(Supersimulate, GrowthSeesCurrentPrefix) {
  Rng rng(8);
  const auto g = random_rt(3, rng);
  std::vector<std::size_t> sizes;
  GrowthFunction growth{[&](const StructuredSum& prefix) {
    sizes.push_back(prefix.size());
    std::vector<Distinguisher> e;
    for (std::uint64_t x = 0; x < 8; ++x)
      e.push_back(Distinguisher::from_boolean(BooleanFunction::from_predicate(Domain(3), [x](std::uint64_t z) { return z == x; })));
    return DistinguisherFamily::explicit_list(Domain(3), std::move(e));
  }};
  SimulationParams p;
  p.delta = 0.05;
  const auto rep = supersimulate(g, growth, Distribution::uniform(Domain(3)), p);
  ASSERT_EQ(sizes.size(), rep.k() + 1);
  for (std::size_t j = 0; j < sizes.size(); ++j) EXPECT_EQ(sizes[j], j);
  for (std::uint64_t x = 0; x < 8; ++x) EXPECT_LE(std::abs(g(x) - rep.sum.table()(x)) / 8.0, 0.05 + 1e-12);
}

TEST(PrefixClipSlack, NonNegativeOnRandomInstances) {
  Rng rng(99);
  std::uniform_real_distribution<double> u(-1, 1), ub(0, 1);
  for (int k = 0; k < 20000; ++k) {
    std::vector<double> a(1 + rng() % 12);
    for (auto& x : a) x = u(rng) * 0.5;
    EXPECT_GE(prefix_clip_slack(a, ub(rng)), -1e-12);
  }
}

TEST(PrefixClipSlack, ClosedForms) {
  const std::vector<double> one{0.4};
  EXPECT_DOUBLE_EQ(prefix_clip_slack(one, 0.4), 0.08);
  const std::vector<double> up_down{2.0, -2.0};
  // prefix clipped to 1 then 0: b²/2 − [2(b − 1) − 2b]
  EXPECT_DOUBLE_EQ(prefix_clip_slack(up_down, 0.5), 0.125 - (2.0 * (0.5 - 1.0) - 2.0 * 0.5));
  EXPECT_THROW(prefix_clip_slack(one, 1.5), std::invalid_argument);
}
