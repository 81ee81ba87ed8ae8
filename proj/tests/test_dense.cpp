#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "simtest/dense.hpp"
#include "simtest/experiment.hpp"

using namespace simtest;

TEST(DenseDistribution, DensityIsInverseMaxRatio) {
  const auto d0 = Distribution::uniform(Domain(2));
  const Distribution d(Domain(2), {0.5, 0.5, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(dense_density(d, d0), 0.5);
  const auto dd = DenseDistribution::of(d0, d);
  EXPECT_TRUE(dd.valid());
  EXPECT_THROW(dense_density(d0, d), density_error);
}

TEST(DensityFunction, Validation) {
  const auto d0 = Distribution::uniform(Domain(1));
  EXPECT_NO_THROW(DensityFunction(d0, {2.0, 0.0}, 0.5));
  EXPECT_THROW(DensityFunction(d0, {2.0, 0.0}, 0.6), density_error);
  EXPECT_THROW(DensityFunction(d0, {1.0, 0.5}, 0.5), density_error);
  EXPECT_THROW(DensityFunction(d0, {1.0}, 0.5), domain_mismatch);
  EXPECT_THROW(DensityFunction(Distribution::point_mass(Domain(1), 0), {0.0, 2.0}, 0.5), density_error);
}

TEST(DensityFunction, DistributionRoundTrip) {
  const auto d0 = Distribution(Domain(2), {0.1, 0.2, 0.3, 0.4});
  const Distribution d(Domain(2), {0.0, 0.4, 0.6, 0.0});
  const auto f = DensityFunction::from_distribution(d, d0, dense_density(d, d0));
  const auto back = f.distribution();
  for (std::uint64_t x = 0; x < 4; ++x) EXPECT_NEAR(back(x), d(x), 1e-15);
  EXPECT_LE(f.scaled()(1), 1.0);
  const std::vector<std::uint32_t> xs{1, 2};
  EXPECT_DOUBLE_EQ(f.product(xs), f(1) * f(2));
}

TEST(DensityFunction, PairLawIsLabeledLaw) {
  Rng rng(1);
  const auto d = detail::random_distribution(2, rng);
  const auto f = detail::random_function(2, rng);
  const auto law = DensityFunction::pair(f, d).distribution();
  const auto want = labeled_point_distribution(d, RealTable::from_boolean(f));
  for (std::uint64_t p = 0; p < 8; ++p) EXPECT_NEAR(law(p), want(p), 1e-15);
  const auto ft = detail::random_table(2, rng);
  const auto law2 = DensityFunction::pair(ft, d).distribution();
  const auto want2 = labeled_point_distribution(d, ft);
  for (std::uint64_t p = 0; p < 8; ++p) EXPECT_NEAR(law2(p), want2(p), 1e-15);
}

TEST(Mix, StaysDense) {
  const auto d0 = Distribution::uniform(Domain(2));
  const DensityFunction a(d0, {2, 2, 0, 0}, 0.5), b(d0, {0, 0, 2, 2}, 0.5);
  const auto m = mix(a, b, 0.25);
  EXPECT_DOUBLE_EQ(m(0), 1.5);
  EXPECT_DOUBLE_EQ(m(3), 0.5);
}

TEST(DenseGaps, BoundsHoldOnRandomInstances) {
  const auto d0 = Distribution::uniform(Domain(3));
  for (std::uint64_t s = 0; s < 8; ++s) {
    const DenseInstance in{3, 1 + static_cast<int>(s % 2), static_cast<int>(s % 3), s % 2 ? 0.25 : 0.5, s};
    const auto r = run_dense_instance(in, d0);
    EXPECT_TRUE(r.oracle.holds) << s;
    EXPECT_TRUE(r.tester.holds) << s;
    EXPECT_LE(r.oracle.gap, in.m * r.oracle.delta_star / in.mu + 1e-9);
    EXPECT_LE(r.tester.gap, r.tester.gamma_star / std::pow(in.mu, in.m) + 1e-9);
  }
}

TEST(DenseGaps, RejectsLabeledTester) {
  const auto t = Tester::from_table(2, 1, 0, true, BooleanFunction::from_string("0110"));
  const auto d0 = Distribution::uniform(Domain(2));
  const DensityFunction f(d0, {1, 1, 1, 1}, 1.0);
  EXPECT_THROW(dense_oracle_sim_gap(t, f, f), std::invalid_argument);
}

TEST(BooleanSpecialization, HybridsAgreeWithLabeledGap) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto sp = boolean_specialization(2 + static_cast<int>(s % 2), 1 + static_cast<int>(s % 2), 1, s, 0.05);
    EXPECT_LE(sp.max_difference, 1e-12);
    EXPECT_LE(sp.dense.bound, sp.boolean.bound + 1e-12);
    EXPECT_TRUE(sp.matches());
  }
}

TEST(DenseConstants, Formulae) {
  const auto c = dense_constants(0.25, 2);
  EXPECT_DOUBLE_EQ(c.delta, 0.25 / 50.0);
  EXPECT_DOUBLE_EQ(c.gamma, 0.0625 / 13.0);
}

TEST(ThresholdFamily, SizeIsGridPower) {
  const RealTable g(Domain(2), {0.0, 0.5, 1.0, 0.5});
  const auto fam = threshold_family(g, 2);
  EXPECT_EQ(fam.size(), 4u);
  const auto e = fam.at(0);
  for (std::uint64_t t = 0; t < 16; ++t) {
    const bool want = g(t & 3) >= 0.5 && g(t >> 2) >= 0.5;
    EXPECT_EQ(e(t), want ? 1.0 : 0.0);
  }
}
