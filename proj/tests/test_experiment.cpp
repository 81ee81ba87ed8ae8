#include <gtest/gtest.h>

#include <filesystem>

#include "simtest/experiment.hpp"

using namespace simtest;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("simtest_exp_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, RejectsUnknownKeysAndTypes) {
  EXPECT_THROW(ExperimentConfig::from_json({{"kind", "ttv"}, {"bogus", 1}}), config_error);
  EXPECT_THROW(ExperimentConfig::from_json({{"kind", "ttv"}, {"n", "three"}}), config_error);
  EXPECT_THROW(ExperimentConfig::from_json({{"kind", "nope"}}).validate(), config_error);
}

TEST(Config, RoundTripsThroughJson) {
  auto c = ExperimentConfig::from_json({{"kind", "ttv"}, {"n", 2}, {"delta", 0.2}, {"seed", 9}});
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Config, PipelineAndCounterDefaults) {
  const auto p = ExperimentConfig::from_json({{"kind", "main-hard-pipeline"}});
  EXPECT_DOUBLE_EQ(p.delta, 1.0 / 50.0);
  EXPECT_DOUBLE_EQ(p.gamma, 1.0 / 52.0);
  EXPECT_EQ(p.mode, "greedy");
  const auto c = ExperimentConfig::from_json({{"kind", "consistency-counter"}, {"m", 1}});
  EXPECT_DOUBLE_EQ(c.gamma, 1.0 / 26.0);
  EXPECT_THROW(ExperimentConfig::from_json({{"kind", "main-hard-pipeline"}, {"mode", "exhaustive"}}).validate(),
               config_error);
}

TEST(Config, ValidateRanges) {
  auto c = ExperimentConfig::from_json({{"kind", "ttv"}});
  c.delta = 0.0;
  EXPECT_THROW(c.validate(), config_error);
  c.delta = 0.1;
  c.mode = "random";
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Report, MetricsCsvLayout) {
  RunReport r;
  r.measure("k", 3);
  r.check_le("gap", 0.1, 0.2);
  r.check_eq("bad", 1, 0);
  EXPECT_EQ(r.metrics_csv(), "name,value,bound,relation,pass\nk,3,,,1\ngap,0.1,0.2,<=,1\nbad,1,0,==,0\n");
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.failures(), std::vector<std::string>{"bad"});
}

TEST(Run, TtvIsDeterministic) {
  const auto c = ExperimentConfig::from_json({{"kind", "ttv"}, {"family", "random"}, {"seed", 4}});
  const auto a = run_experiment(c), b = run_experiment(c);
  EXPECT_TRUE(a.passed());
  EXPECT_EQ(a.metrics_csv(), b.metrics_csv());
  EXPECT_EQ(a.results, b.results);
}

TEST(Run, GapExperimentsPass) {
  for (const char* kind : {"oracle-gap", "tester-gap", "supersim"}) {
    const auto r = run_experiment(ExperimentConfig::from_json({{"kind", kind}, {"seed", 2}}));
    EXPECT_TRUE(r.passed()) << kind << ": " << r.failures().size();
  }
}

TEST(Run, ConfiguredFilesAreUsed) {
  const auto dir = scratch("files");
  std::filesystem::create_directories(dir);
  write_text(dir / "f.bfn", save_bfn(BooleanFunction::from_string("11110101")));
  write_text(dir / "d.dst", save_dst(Distribution::normalized(Domain(3), {1, 2, 3, 4, 5, 6, 7, 8})));
  const auto r = run_experiment(ExperimentConfig::from_json(
      {{"kind", "oracle-gap"}, {"function", (dir / "f.bfn").string()}, {"distribution", (dir / "d.dst").string()}}));
  EXPECT_EQ(r.results["f"], "11110101");
  EXPECT_TRUE(r.passed());
  write_text(dir / "g.bfn", save_bfn(BooleanFunction::from_string("0110")));
  EXPECT_THROW(run_experiment(ExperimentConfig::from_json({{"kind", "oracle-gap"}, {"function", (dir / "g.bfn").string()}})),
               config_error);
  std::filesystem::remove_all(dir);
}

TEST(Report, WriteAndRoundtripArtifacts) {
  const auto dir = scratch("report");
  auto r = run_experiment(ExperimentConfig::from_json({{"kind", "ttv"}, {"n", 2}}));
  write_report(r, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_EQ(read_text(dir / "metrics.csv"), r.metrics_csv());
  const auto j = json::parse(read_text(dir / "report.json"));
  EXPECT_EQ(j["passed"], true);
  write_text(dir / "p.prt", save_prt(popcount_partition(3, {1, 2})));
  const auto rt = artifact_roundtrip(dir / "p.prt", "PRT");
  EXPECT_EQ(rt["identical"], true);
  EXPECT_EQ(rt["text_stable"], true);
  EXPECT_THROW(artifact_roundtrip(dir / "p.prt", "XYZ"), config_error);
  std::filesystem::remove_all(dir);
}
