// simtest_cli: run one experiment and write report.json and metrics.csv.
//
// Exit codes: 0 all assertions hold, 1 an assertion failed, 2 invalid config, 3 I/O or parse failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "simtest/experiment.hpp"

namespace {

const std::map<std::string, std::string> kind_of = {
    {"simulate", "ttv"},
    {"supersimulate", "supersim"},
    {"oracle-gap", "oracle-gap"},
    {"tester-gap", "tester-gap"},
    {"pipeline", "main-hard-pipeline"},
    {"density-tester", "density-tester"},
    {"counter", "consistency-counter"},
    {"templates", "templates"},
    {"dense", "dense"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-based property testing experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string mode;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_option("--out-dir", out_dir, "directory for report.json and metrics.csv");
  app.add_option("--mode", mode, "search mode: exhaustive, sampled, or greedy");

  for (const auto& [name, kind] : kind_of) app.add_subcommand(name, "run the " + kind + " experiment");

  std::string rt_path;
  std::string rt_kind;
  auto* rt = app.add_subcommand("roundtrip", "load, save, and reload an artifact");
  rt->add_option("path", rt_path, "artifact file")->required();
  rt->add_option("--kind", rt_kind, "BFN, RFN, DST, CIR, PRT, or CCT")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rt->parsed()) {
      const auto res = simtest::artifact_roundtrip(rt_path, rt_kind);
      std::cout << res.dump(2) << "\n";
      return res.at("identical").get<bool>() && res.at("text_stable").get<bool>() ? 0 : 1;
    }

    simtest::json j = simtest::json::object();
    if (!config_path.empty()) {
      try {
        j = simtest::json::parse(simtest::read_text(config_path));
      } catch (const simtest::json::parse_error& e) {
        throw simtest::parse_error(e.what(), 1, e.byte);
      }
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    const std::string kind = kind_of.at(sub);
    if (j.contains("kind") && j.at("kind") != kind)
      throw simtest::config_error("config kind '" + j.at("kind").dump() + "' does not match subcommand " + sub);
    j["kind"] = kind;
    if (seed) j["seed"] = *seed;
    if (!mode.empty()) j["mode"] = mode;
    if (!out_dir.empty()) j["out_dir"] = out_dir;

    const auto cfg = simtest::ExperimentConfig::from_json(j);
    auto report = simtest::run_experiment(cfg);
    simtest::write_report(report, cfg.out_dir);
    for (const auto& m : report.metrics) {
      std::cout << m.name << " = " << m.value;
      if (m.bound) std::cout << " " << m.relation << " " << *m.bound << (m.pass ? "  ok" : "  FAIL");
      std::cout << "\n";
    }
    return report.passed() ? 0 : 1;
  } catch (const simtest::parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const simtest::io_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
}
