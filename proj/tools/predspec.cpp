//===-- predspec.cpp - Command-line front end ------------------------------===//

#include "predspec/report.h"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <cstdio>

using namespace predspec;

int main(int argc, char **argv) {
  CLI::App app{"Prediction-aware speculative leak detector for SIR programs"};

  RunConfig cfg;
  PredictorOptions po;
  std::string mode = "prediction-aware";
  std::string granularity = "line";
  std::string report, stats;
  bool quiet = false;

  app.add_option("program", cfg.programPath, "SIR program")->required();
  app.add_option("--pattern", cfg.patternPaths, "pattern JSON file (repeatable)")
      ->check(CLI::ExistingFile);
  app.add_option("--preset", po.preset,
                 "cortex-a53, cortex-a7 or pentium4; flags override it");
  app.add_option("--pht-bits", po.phtBits, "BHR bits of the two-level predictor (0 disables it)");
  app.add_option("--pht-init-counter", po.phtInitCounter, "initial 2-bit counter value");
  app.add_option("--btb-sets", po.btbSets, "BTB sets (power of two)");
  app.add_option("--btb-ways", po.btbWays, "BTB ways");
  app.add_option("--btb-tag-bits", po.btbTagBits, "BTB tag bits");
  app.add_flag("--btfnt", po.btfnt, "static backward-taken fallback");
  app.add_option("--window", po.window, "speculation window in instructions");
  app.add_option("--mode", mode, "prediction-aware, baseline or both")
      ->check(CLI::IsMember({"prediction-aware", "pl", "baseline", "nopl", "both"}));
  app.add_option("--bit-budget", cfg.engine.bitBudget, "input bits the solver may enumerate");
  app.add_option("--step-limit", cfg.engine.stepLimit, "architectural steps per path");
  app.add_option("--cache-line", cfg.engine.cache.lineSize, "cache line size in bytes");
  app.add_option("--cache-sets", cfg.engine.cache.sets, "cache sets");
  app.add_option("--cache-ways", cfg.engine.cache.ways, "cache ways");
  app.add_option("--granularity", granularity, "line or set")
      ->check(CLI::IsMember({"line", "set"}));
  app.add_option("--report", report, "write the report JSON here");
  app.add_option("--stats", stats, "write the stats JSON here");
  app.add_flag("-q,--quiet", quiet, "no summary on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    cfg.engine.predictor = buildPredictorConfig(po);
    cfg.engine.cache.validate();
  } catch (const std::exception &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  }
  cfg.engine.cache.granularity =
      granularity == "set" ? Granularity::Set : Granularity::Line;
  cfg.mode = *runModeFromName(mode);
  if (!report.empty())
    cfg.reportPath = report;
  if (!stats.empty())
    cfg.statsPath = stats;

  RunOutput out = run(cfg);
  if (!out.error.empty()) {
    fmt::print(stderr, "{}\n", out.error);
    return kExitUsage;
  }
  if (!quiet)
    fmt::print("{}", out.summary);
  return out.exitCode;
}
