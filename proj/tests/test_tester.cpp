#include <gtest/gtest.h>

#include <random>

#include "simtest/tester.hpp"
#include "simtest/testing.hpp"

using namespace simtest;

namespace {

BooleanFunction random_bf(int bits, Rng& rng) {
  std::vector<std::uint8_t> t(std::size_t{1} << bits);
  for (auto& b : t) b = rng() & 1U;
  return {Domain(bits), std::move(t)};
}

}  // namespace

TEST(Encoding, LabeledPoints) {
  EXPECT_EQ(labeled_point(5, true, 3), 13u);
  EXPECT_EQ(point_x(13, 3), 5u);
  EXPECT_TRUE(point_y(13, 3));
  const TupleLayout lay{4, 3};
  const std::vector<std::uint32_t> pts{1, 15, 6};
  const auto t = lay.encode(pts);
  EXPECT_EQ(t, 1u | (15u << 4) | (6u << 8));
  std::vector<std::uint32_t> back(3);
  lay.decode(t, back);
  EXPECT_EQ(back, pts);
  EXPECT_EQ(lay.point(lay.with_point(t, 1, 2), 1), 2u);
}

TEST(Tester, TableAndCircuitBackendsAgree) {
  // T = y_1 XOR r over n = 1, m = 1, ℓ = 1: inputs (x, y, r)
  CircuitBuilder b(3);
  b.output(b.xor_(b.input(1), b.input(2)));
  const auto tc = Tester::from_circuit(2, 1, 1, true, b.build());
  const auto tt = Tester::from_table(2, 1, 1, true, BooleanFunction::from_string("00111100"));
  for (std::uint32_t p = 0; p < 4; ++p)
    for (std::uint64_t r = 0; r < 2; ++r) {
      const std::vector<std::uint32_t> pts{p};
      EXPECT_EQ(tc(pts, r), static_cast<bool>(((p >> 1) & 1U) ^ r));
      EXPECT_EQ(tc(pts, r), tt(pts, r));
    }
  EXPECT_EQ(tc.gates()->total, 1u);
  EXPECT_FALSE(tt.gates());
  EXPECT_THROW(Tester::from_table(2, 1, 1, true, BooleanFunction::from_string("0011")), std::invalid_argument);
}

TEST(MeanTester, AveragesSeeds) {
  Rng rng(5);
  const auto table = random_bf(2 * 2 + 2, rng);
  const auto t = Tester::from_table(2, 2, 2, true, table);
  const auto mt = mean_tester(t);
  for (std::uint64_t tup = 0; tup < 16; ++tup) {
    int acc = 0;
    for (std::uint64_t r = 0; r < 4; ++r) acc += table(tup | (r << 4));
    EXPECT_DOUBLE_EQ(mt.table(tup), acc / 4.0);
  }
}

TEST(ProductDistribution, WeightsMultiply) {
  const Distribution a(Domain(1), {0.25, 0.75}), b(Domain(1), {0.5, 0.5});
  const ProductDistribution p({a, b}, 2);
  EXPECT_DOUBLE_EQ(p.weight(0b01), 0.75 * 0.5);
  EXPECT_DOUBLE_EQ(p.weight(0b10), 0.25 * 0.5);
  const auto m = p.materialize();
  double s = 0;
  for (auto w : m.weights()) s += w;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_THROW(ProductDistribution({a, b, a}, 2), std::invalid_argument);
}

TEST(LabeledPointDistribution, ConditionalLabels) {
  const auto d = Distribution(Domain(1), {0.4, 0.6});
  const RealTable q(Domain(1), {0.25, 1.0});
  const auto l = labeled_point_distribution(d, q);
  EXPECT_DOUBLE_EQ(l(labeled_point(0, false, 1)), 0.3);
  EXPECT_DOUBLE_EQ(l(labeled_point(0, true, 1)), 0.1);
  EXPECT_DOUBLE_EQ(l(labeled_point(1, false, 1)), 0.0);
  EXPECT_DOUBLE_EQ(l(labeled_point(1, true, 1)), 0.6);
}

TEST(AcceptProb, ExactMatchesMonteCarloInterval) {
  Rng rng(9);
  const auto t = Tester::from_table(3, 2, 1, true, random_bf(7, rng));
  const auto d = Distribution::uniform(Domain(2));
  const auto f = random_bf(2, rng);
  const auto lab = deterministic_labels(d, 2, f);
  const auto ex = accept_prob(t, lab, AcceptMode::exact());
  const auto mc = accept_prob(t, lab, AcceptMode::mc(40000, 3));
  EXPECT_TRUE(ex.exact);
  EXPECT_LE(mc.lo, ex.value);
  EXPECT_GE(mc.hi, ex.value);
}

// Direct oracle: sum over x-tuples and seeds of T(x, f(x), r).
TEST(AcceptProb, ExactMatchesDirectSum) {
  Rng rng(21);
  for (int k = 0; k < 20; ++k) {
    const auto table = random_bf(3 * 2 + 1, rng);
    const auto t = Tester::from_table(3, 2, 1, true, table);
    const auto f = random_bf(2, rng);
    std::vector<double> w(4);
    std::uniform_real_distribution<double> u(0.1, 1);
    for (auto& x : w) x = u(rng);
    const auto d = Distribution::normalized(Domain(2), w);
    double want = 0;
    for (std::uint32_t x0 = 0; x0 < 4; ++x0)
      for (std::uint32_t x1 = 0; x1 < 4; ++x1)
        for (std::uint64_t r = 0; r < 2; ++r) {
          const std::vector<std::uint32_t> pts{labeled_point(x0, f(x0), 2), labeled_point(x1, f(x1), 2)};
          want += d(x0) * d(x1) * 0.5 * t(pts, r);
        }
    EXPECT_NEAR(accept_prob(t, deterministic_labels(d, 2, f), AcceptMode::exact()).value, want, 1e-14);
  }
}
