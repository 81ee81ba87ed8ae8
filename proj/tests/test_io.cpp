#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "simtest/experiment.hpp"
#include "simtest/io.hpp"

using namespace simtest;

namespace {

template <class F>
parse_error capture(F&& f) {
  try {
    f();
  } catch (const parse_error& e) {
    return e;
  }
  ADD_FAILURE() << "no parse_error";
  return parse_error("none", 0, 0);
}

}  // namespace

TEST(Bfn, RoundTrip) {
  const auto f = BooleanFunction::from_string("01101001");
  EXPECT_EQ(save_bfn(f), "BFN 1\n3\n01101001\n");
  EXPECT_EQ(load_bfn(save_bfn(f)), f);
}

TEST(Bfn, Errors) {
  auto e = capture([] { load_bfn("BFN 1\n2\n0120\n"); });
  EXPECT_EQ(e.line(), 3u);
  EXPECT_EQ(e.column(), 3u);
  e = capture([] { load_bfn("BFN 1\n2\n011\n"); });
  EXPECT_EQ(e.line(), 3u);
  e = capture([] { load_bfn("BFX 1\n2\n0110\n"); });
  EXPECT_EQ(e.line(), 1u);
  e = capture([] { load_bfn("BFN 1\n2\n0110\n1\n"); });
  EXPECT_EQ(e.line(), 4u);
  e = capture([] { load_bfn("BFN 1\n2\n"); });
  EXPECT_EQ(e.line(), 3u);
}

TEST(Rfn, ShortestRoundTripIsBitExact) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto t = detail::random_table(3, rng);
    const auto back = load_rfn(save_rfn(t));
    for (std::uint64_t x = 0; x < 8; ++x) EXPECT_EQ(std::bit_cast<std::uint64_t>(back(x)), std::bit_cast<std::uint64_t>(t(x)));
  }
}

TEST(Rfn, RejectsOutOfRange) {
  const auto e = capture([] { load_rfn("RFN 1\n1\n0.5\n1.5\n"); });
  EXPECT_NE(std::string(e.what()).find("outside"), std::string::npos);
  const auto bad = capture([] { load_rfn("RFN 1\n1\n0.5\nabc\n"); });
  EXPECT_EQ(bad.line(), 4u);
  EXPECT_EQ(bad.column(), 1u);
}

TEST(Dst, RoundTripAndMass) {
  Rng rng(4);
  const auto d = detail::random_distribution(3, rng);
  EXPECT_EQ(load_dst(save_dst(d)), d);
  EXPECT_THROW(load_dst("DST 1\n1\n0.5\n0.6\n"), parse_error);
}

TEST(Cir, RoundTrip) {
  Circuit c(2, {{GateOp::and_op, 0, 1}, {GateOp::not_op, 2, 0}, {GateOp::const1}}, {3, 4});
  const auto text = save_cir(c);
  EXPECT_EQ(text, "CIR 1 2\n2 AND 0 1\n3 NOT 2\n4 CONST1\nOUT 3 4\n");
  EXPECT_EQ(load_cir(text), c);
}

TEST(Cir, Errors) {
  auto e = capture([] { load_cir("CIR 1 2\n2 NAND 0 1\nOUT 2\n"); });
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(e.column(), 3u);
  e = capture([] { load_cir("CIR 1 2\n2 AND 0 2\nOUT 2\n"); });
  EXPECT_EQ(e.line(), 2u);
  e = capture([] { load_cir("CIR 1 2\n3 AND 0 1\nOUT 3\n"); });
  EXPECT_EQ(e.line(), 2u);
  e = capture([] { load_cir("CIR 1 2\n2 AND 0\n1\nOUT 2\n"); });
  EXPECT_EQ(e.line(), 2u);
  e = capture([] { load_cir("CIR 1 2\nOUT 5\n"); });
  EXPECT_NE(std::string(e.what()).find("does not exist"), std::string::npos);
}

TEST(Prt, RoundTripAndErrors) {
  const Partition p(Domain(2), {0, 1, 1, 2});
  EXPECT_EQ(save_prt(p), "PRT 1\n2\n3\n0 1 1 2\n");
  EXPECT_EQ(load_prt(save_prt(p)), p);
  auto e = capture([] { load_prt("PRT 1\n2\n3\n0 1 1 3\n"); });
  EXPECT_EQ(e.line(), 4u);
  EXPECT_EQ(e.column(), 7u);
  e = capture([] { load_prt("PRT 1\n2\n3\n0 1 1 1\n"); });
  EXPECT_NE(std::string(e.what()).find("empty"), std::string::npos);
}

TEST(Cct, RoundTripAndWidthCheck) {
  ConsistencyCounter c{2, 2, {BooleanFunction::from_string("0110"), BooleanFunction::from_string("0110")},
                       {BooleanFunction::from_string("1111")}};
  const auto back = load_cct(save_cct(c));
  EXPECT_EQ(back.arity, 2);
  EXPECT_EQ(back.plus, c.plus);
  EXPECT_EQ(back.minus, c.minus);
  EXPECT_THROW(load_cct("CCT 1\n2\n2\nPLUS 1\nBFN 1\n1\n01\nMINUS 0\n"), parse_error);
  EXPECT_THROW(load_cct("CCT 1\n2\n2\nPLUS 0\n"), parse_error);
}

TEST(Files, MissingFileIsIoError) {
  EXPECT_THROW(read_text("/nonexistent/dir/file.bfn"), io_error);
}

TEST(TemplateSetFiles, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "simtest_templates_io";
  std::filesystem::remove_all(dir);
  const auto d = Distribution::uniform(Domain(2));
  const auto fam = small_circuit_family(2, 1);
  const auto ts = build_template_set(anchored_ones_property(2), fam, 2, d);
  save_template_set(ts, dir);
  const auto back = load_template_set(dir, fam, d);
  EXPECT_EQ(back.templates, ts.templates);
  EXPECT_EQ(back.assignment, ts.assignment);
  EXPECT_DOUBLE_EQ(back.delta, ts.delta);
  std::filesystem::remove_all(dir);
}
