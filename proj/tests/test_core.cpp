#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>

#include "simtest/core.hpp"

using namespace simtest;

TEST(Domain, SizeAndBounds) {
  EXPECT_EQ(Domain(0).size(), 1u);
  EXPECT_EQ(Domain(5).size(), 32u);
  EXPECT_TRUE(Domain(3).contains(7));
  EXPECT_FALSE(Domain(3).contains(8));
  EXPECT_THROW(Domain(-1), std::invalid_argument);
  EXPECT_THROW(Domain(25), std::invalid_argument);
}

TEST(BooleanFunction, StringAndCodeAgree) {
  const auto f = BooleanFunction::from_string("0001");
  EXPECT_EQ(f.domain().bits(), 2);
  EXPECT_TRUE(f(3));
  EXPECT_FALSE(f(1));
  EXPECT_EQ(f.code(), 8u);
  EXPECT_EQ(BooleanFunction::from_code(Domain(2), 8), f);
  EXPECT_EQ(f.to_string(), "0001");
  EXPECT_THROW(BooleanFunction::from_string("010"), std::invalid_argument);
  EXPECT_THROW(BooleanFunction::from_string("01a1"), std::invalid_argument);
}

TEST(BooleanFunction, ComplementAndFlip) {
  const auto f = BooleanFunction::from_string("0110");
  EXPECT_EQ(f.complement().to_string(), "1001");
  EXPECT_EQ(f.with_flipped(0).to_string(), "1110");
  EXPECT_EQ(f.ones(), 2u);
}

TEST(RealTable, RejectsValuesOutsideUnitInterval) {
  EXPECT_THROW(RealTable(Domain(1), {0.5, 1.5}), std::invalid_argument);
  EXPECT_THROW(RealTable(Domain(1), {0.5}), std::invalid_argument);
  EXPECT_TRUE(RealTable::from_boolean(BooleanFunction::from_string("10")).is_boolean());
}

TEST(Distribution, MassMustBeOne) {
  EXPECT_THROW(Distribution(Domain(1), {0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(Distribution(Domain(1), {1.5, -0.5}), std::invalid_argument);
  const auto d = Distribution::normalized(Domain(2), {1, 1, 2, 4});
  EXPECT_DOUBLE_EQ(d(3), 0.5);
  const std::vector<std::uint64_t> pts{0, 1};
  EXPECT_DOUBLE_EQ(d.mass(pts), 0.25);
}

TEST(PointSampler, FrequenciesTrackWeights) {
  const auto d = Distribution(Domain(2), {0.1, 0.0, 0.6, 0.3});
  PointSampler s(d);
  Rng rng(3);
  std::vector<int> c(4, 0);
  const int N = 200000;
  for (int i = 0; i < N; ++i) ++c[s(rng)];
  EXPECT_EQ(c[1], 0);
  for (int x = 0; x < 4; ++x) EXPECT_NEAR(c[x] / double(N), d(x), 0.01);
}

TEST(Distance, MatchesPopcountOfXor) {
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const std::uint64_t a = rng() & 0xffff, b = rng() & 0xffff;
    const auto f = BooleanFunction::from_code(Domain(4), a), g = BooleanFunction::from_code(Domain(4), b);
    EXPECT_DOUBLE_EQ(distance_frac(f, g), std::popcount(a ^ b) / 16.0);
  }
}

TEST(PropertySet, DistanceAndClosure) {
  PropertySet p(Domain(2), {BooleanFunction::from_string("0000"), BooleanFunction::from_string("0000")});
  EXPECT_EQ(p.size(), 1u);
  EXPECT_DOUBLE_EQ(p.distance_to(BooleanFunction::from_string("0110")), 0.5);
  EXPECT_TRUE(eps_closure_member(BooleanFunction::from_string("0100"), p, 0.25));
  EXPECT_FALSE(eps_closure_member(BooleanFunction::from_string("0110"), p, 0.25));
  EXPECT_TRUE(std::isinf(PropertySet(Domain(2)).distance_to(BooleanFunction::from_string("0000"))));
}

TEST(PropertySet, UniverseEnumeration) {
  EXPECT_EQ(PropertySet::all_functions(Domain(3)).size(), 256u);
  EXPECT_THROW(PropertySet::all_functions(Domain(5)), budget_exceeded);
  const auto odd = PropertySet::from_predicate(Domain(2), [](const BooleanFunction& f) { return f.ones() % 2 == 1; });
  EXPECT_EQ(odd.size(), 8u);
}

TEST(Expectation, CompensatedAgainstNaive) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> w(1024), v(1024);
  for (auto& x : w) x = u(rng);
  for (auto& x : v) x = u(rng);
  const auto d = Distribution::normalized(Domain(10), w);
  const RealTable h(Domain(10), v);
  long double naive = 0;
  for (std::size_t x = 0; x < 1024; ++x) naive += static_cast<long double>(d(x)) * v[x];
  EXPECT_NEAR(expectation_under(h, d), static_cast<double>(naive), 1e-14);
}

TEST(Expectation, DomainMismatchThrows) {
  EXPECT_THROW(expectation_under(RealTable::constant(Domain(2), 0.5), Distribution::uniform(Domain(3))),
               domain_mismatch);
}
