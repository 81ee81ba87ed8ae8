#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <map>
#include <random>

#include "simtest/constructions.hpp"
#include "simtest/pipeline.hpp"

using namespace simtest;

namespace {

RealTable random_rt(int bits, Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(std::size_t{1} << bits);
  for (auto& x : v) x = u(rng);
  return {Domain(bits), std::move(v)};
}

}  // namespace

TEST(Partition, Validation) {
  EXPECT_THROW(Partition(Domain(1), {0}), std::invalid_argument);
  EXPECT_THROW(Partition(Domain(1), {0, 2}), std::invalid_argument);
  const Partition p(Domain(2), {1, 0, 0, 1});
  EXPECT_EQ(p.size(), 2u);
  EXPECT_TRUE(p.well_formed());
  EXPECT_EQ(p.part(1), (std::vector<std::uint64_t>{0, 3}));
  EXPECT_EQ(Partition::single(Domain(2)).size(), 1u);
}

TEST(Partition, Popcount) {
  const auto p = popcount_partition(3, {1, 2});
  for (std::uint64_t x = 0; x < 8; ++x) EXPECT_EQ(p(x), std::popcount(x) <= 1 ? 0u : std::popcount(x) == 2 ? 1u : 2u);
}

// Oracle: two points share a part iff they agree on every threshold set.
TEST(ExtractPartition, IsCommonRefinement) {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    StructuredSum s(Domain(8), 0.1);
    std::vector<std::pair<RealTable, std::vector<double>>> terms;
    for (int j = 0; j < 3; ++j) {
      auto f = random_rt(3, rng);
      std::vector<double> th{f(rng() % 8), f(rng() % 8)};
      s.append(1, consistency_indicator(f, th));
      terms.push_back({f, th});
    }
    const auto p = extract_partition(s, 2, Domain(3));
    EXPECT_TRUE(p.well_formed());
    for (std::uint64_t x = 0; x < 8; ++x)
      for (std::uint64_t y = 0; y < 8; ++y) {
        bool same = true;
        for (const auto& [f, th] : terms)
          for (double t : th) same = same && ((f(x) >= t) == (f(y) >= t));
        EXPECT_EQ(p(x) == p(y), same);
      }
    EXPECT_LE(p.size(), 64u);
  }
}

TEST(DensityVector, SumsWeightedOnes) {
  const auto p = popcount_partition(2, {0, 1});
  const auto d = Distribution(Domain(2), {0.1, 0.2, 0.3, 0.4});
  const auto mu = density_vector(BooleanFunction::from_string("1101"), p, d);
  EXPECT_DOUBLE_EQ(mu[0], 0.1);
  EXPECT_DOUBLE_EQ(mu[1], 0.2);
  EXPECT_DOUBLE_EQ(mu[2], 0.4);
}

TEST(RoundToGrid, HalvesRoundDown) {
  EXPECT_EQ(round_to_grid(0.25, 0.5), 0);
  EXPECT_EQ(round_to_grid(0.26, 0.5), 1);
  EXPECT_EQ(round_to_grid(0.75, 0.5), 1);
  EXPECT_EQ(round_to_grid(1.0, 0.5), 2);
}

TEST(Sandwich, ReportsBothDirections) {
  const PropertySet p(Domain(2), {BooleanFunction::from_string("0000")});
  const auto r = sandwich_check(p, [](const BooleanFunction& f) { return f.ones() == 2; }, 0.25);
  EXPECT_EQ(r.checked, 16u);
  EXPECT_EQ(r.q_members, 6u);
  EXPECT_EQ(r.p_not_in_q.size(), 1u);
  EXPECT_EQ(r.q_not_in_p_eps.size(), 6u);
  EXPECT_FALSE(r.holds());
  const auto ok = sandwich_check(p, [](const BooleanFunction& f) { return f.ones() <= 1; }, 0.25);
  EXPECT_TRUE(ok.holds());
}

TEST(SwapSweep, SymmetricValuesNeverChange) {
  const auto p = popcount_partition(3, {1, 2});
  const auto d = Distribution::uniform(Domain(3));
  const auto r = single_swap_sweep(p, [&](const BooleanFunction& f) { return density_vector(f, p, d)[1]; }, 0.2);
  EXPECT_GT(r.swaps, 0u);
  EXPECT_EQ(r.membership_changes, 0u);
  EXPECT_DOUBLE_EQ(r.max_value_change, 0.0);
  const auto bad = single_swap_sweep(p, [](const BooleanFunction& f) { return f(1) ? 1.0 : 0.0; }, 0.5);
  EXPECT_GT(bad.membership_changes, 0u);
}

TEST(QProperty, ExpectedIsExactAcceptance) {
  Rng rng(4);
  const auto tt = random_rt(6, rng);
  const auto d = Distribution::uniform(Domain(2));
  const QProperty q(tt, d, 2);
  const auto f = BooleanFunction::from_string("0110");
  double want = 0;
  for (std::uint32_t a = 0; a < 4; ++a)
    for (std::uint32_t b = 0; b < 4; ++b)
      want += tt(labeled_point(a, f(a), 2) | (labeled_point(b, f(b), 2) << 3)) / 16.0;
  EXPECT_NEAR(q.expected(f), want, 1e-15);
  EXPECT_EQ(q.contains(f), want >= 0.5);
  EXPECT_THROW(QProperty(random_rt(5, rng), d, 2), domain_mismatch);
}

TEST(DensityTester, SampleCountAndGrid) {
  EXPECT_EQ(density_tester_samples(3, 0.25), static_cast<int>(std::ceil(2 * std::log(9.0) / std::pow(0.25 / 12, 2))));
  const auto p = popcount_partition(3, {1, 2});
  const auto d = Distribution::uniform(Domain(3));
  const SymmetricProperty q{p, d, [](const DensityVector& mu) { return mu[2] == 0.0 && mu[0] >= mu[1]; }};
  const auto members = q.members();
  EXPECT_EQ(members.size(), 99u);
  // At eps = 0.5 nothing is far from Q; at 0.25 some functions need three flips.
  const auto dt = build_density_tester(p, members, 0.25, d);
  EXPECT_DOUBLE_EQ(dt.delta, 1.0 / 48.0);
  EXPECT_EQ(dt.grid_max, 48);
  EXPECT_GT(dt.accepting_points, 0u);
  const auto rep = validity_check(dt.tester, members, 0.25, d, AcceptMode::mc(60, 7));
  EXPECT_GT(rep.count(Verdict::valid_reject), 0u);
  EXPECT_EQ(rep.count(Verdict::violation), 0u);
}

TEST(ConsistencyCounter, StrictMajority) {
  ConsistencyCounter c{1, 1, {BooleanFunction::from_string("01"), BooleanFunction::from_string("01")},
                       {BooleanFunction::from_string("00")}};
  const std::vector<std::uint32_t> one_at_1{labeled_point(1, true, 1)}, zero_at_0{labeled_point(0, false, 1)};
  EXPECT_TRUE(run_consistency_counter(c, one_at_1));
  EXPECT_TRUE(run_consistency_counter(c, zero_at_0));
  c.minus.push_back(BooleanFunction::from_string("11"));
  c.minus.push_back(BooleanFunction::from_string("01"));
  EXPECT_FALSE(run_consistency_counter(c, one_at_1));
  EXPECT_THROW(run_consistency_counter(c, std::vector<std::uint32_t>{}), std::invalid_argument);
}

TEST(ConsistencyCounter, DecisionEqualsSimulatorAboveHalf) {
  const auto t = anchored_ones_tester(2, 2, 1);
  const auto d = Distribution::uniform(Domain(2));
  const auto b = build_consistency_counter(t, 1.0 / 52.0, d);
  EXPECT_LT(static_cast<double>(b.report.k()), 2.0 * 52.0 * 52.0);
  EXPECT_EQ(b.counter.plus.size() + b.counter.minus.size(), b.report.k());
  const TupleLayout lay{3, 2};
  std::vector<std::uint32_t> pts(2);
  for (std::uint64_t tup = 0; tup < 64; ++tup) {
    lay.decode(tup, pts);
    EXPECT_EQ(b.ttilde(tup) > 0.5, run_consistency_counter(b.counter, pts));
  }
}

TEST(Templates, CircuitFamilyAndSampleSize) {
  EXPECT_EQ(small_circuit_family(3, 3).size(), enumerate_circuit_tables(3, 3).size());
  EXPECT_EQ(template_sample_size(100, 0.1, 0.1), static_cast<std::uint64_t>(std::ceil(2 * (std::log(100.0) + std::log(10.0)) / 0.01)));
}

TEST(Templates, MembersCompatibleWithOwnTemplate) {
  const auto p = anchored_ones_property(2);
  const auto fs = small_circuit_family(2, 2);
  const auto d = Distribution::uniform(Domain(2));
  const auto ts = build_template_set(p, fs, 2, d);
  EXPECT_DOUBLE_EQ(ts.delta, 1.0 / 26.0);
  ASSERT_EQ(ts.assignment.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_LE(ts.max_adv(RealTable::from_boolean(p.members()[i]), ts.assignment[i]), ts.delta);
    EXPECT_TRUE(ts.compatible(p.members()[i]));
  }
}

TEST(Templates, TesterNeedsEnoughSamples) {
  const auto p = anchored_ones_property(2);
  const auto d = Distribution::uniform(Domain(2));
  const auto ts = build_template_set(p, small_circuit_family(2, 1), 2, d);
  Rng rng(1);
  const auto h = SampleHistogram::draw(d, p.members()[0], 10, rng);
  EXPECT_THROW(template_tester(ts, 0.01, h), std::invalid_argument);
  const double alpha = 0.25 * ts.delta / 4;
  const auto big = SampleHistogram::draw(d, p.members()[0], template_sample_size(ts.family.size(), alpha, 0.1), rng);
  EXPECT_TRUE(template_tester(ts, alpha, big));
}

TEST(SampleHistogram, DrawIsMultinomial) {
  Rng rng(5);
  const auto d = Distribution(Domain(2), {0.1, 0.2, 0.3, 0.4});
  const auto g = BooleanFunction::from_string("0110");
  const auto h = SampleHistogram::draw(d, g, 1000000, rng);
  std::uint64_t total = 0;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(total, 1000000u);
  for (std::uint64_t x = 0; x < 4; ++x) {
    EXPECT_EQ(h.counts[labeled_point(x, !g(x), 2)], 0u);
    EXPECT_NEAR(h.counts[labeled_point(x, g(x), 2)] / 1e6, d(x), 0.003);
  }
  const std::vector<std::uint32_t> pts{labeled_point(1, true, 2), labeled_point(1, true, 2)};
  EXPECT_EQ(SampleHistogram::from_points(2, pts).counts[labeled_point(1, true, 2)], 2u);
}
