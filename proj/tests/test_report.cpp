//===-- test_report.cpp - Run orchestration and report tests ---------------===//

#include "doctest.h"
#include "support/fixtures.h"

#include "predspec/report.h"

#include "json.hpp"

#include <cstdio>
#include <filesystem>

using namespace predspec;
using namespace predspec::testing;
using nlohmann::json;

namespace {

RunConfig runConfig(const std::string &fixture, PredictorOptions opts,
                    RunMode mode = RunMode::PredictionAware) {
  RunConfig c;
  c.programPath = fixturePath(fixture);
  c.patternPaths = {patternPath("br-ld-ld.json"), patternPath("ld-br-ld.json"),
                    patternPath("ic-ld-ld.json")};
  c.engine.predictor = buildPredictorConfig(opts);
  c.mode = mode;
  return c;
}

PredictorOptions pht(unsigned bits, unsigned window) {
  PredictorOptions o;
  o.phtBits = bits;
  o.window = window;
  return o;
}

std::string tempFile(const std::string &name, const std::string &text) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::FILE *f = std::fopen(path.c_str(), "wb");
  REQUIRE(f);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
  return path.string();
}

} // namespace

TEST_CASE("preset expansion") {
  PredictorOptions o;
  o.preset = "cortex-a7";
  PredictorConfig c = buildPredictorConfig(o);
  CHECK(c.window == 16);
  REQUIRE(c.twoLevel);
  CHECK(c.twoLevel->historyBits == 8);
  REQUIRE(c.btb);
  CHECK(c.btb->sets == 8);

  o.window = 4;
  o.btbSets = 2;
  c = buildPredictorConfig(o);
  CHECK(c.window == 4);
  CHECK(c.btb->sets == 2);
  CHECK(c.twoLevel->historyBits == 8);

  PredictorOptions none;
  c = buildPredictorConfig(none);
  REQUIRE(c.twoLevel);
  CHECK(c.twoLevel->historyBits == 1);
  CHECK(!c.btb);

  PredictorOptions btbOnly;
  btbOnly.btbSets = 4;
  c = buildPredictorConfig(btbOnly);
  CHECK(!c.twoLevel);
  CHECK(c.btb->sets == 4);

  PredictorOptions bad;
  bad.preset = "m68k";
  CHECK_THROWS_AS(buildPredictorConfig(bad), ConfigError);
  bad = {};
  bad.phtInitCounter = 4;
  CHECK_THROWS_AS(buildPredictorConfig(bad), ConfigError);
}

TEST_CASE("mode names") {
  CHECK(runModeFromName("prediction-aware") == RunMode::PredictionAware);
  CHECK(runModeFromName("nopl") == RunMode::Baseline);
  CHECK(runModeFromName("both") == RunMode::Both);
  CHECK(!runModeFromName("fast"));
}

TEST_CASE("exit codes") {
  CHECK(run(runConfig("v01.sir", pht(1, 16))).exitCode == kExitFindings);
  CHECK(run(runConfig("v02.sir", pht(1, 16))).exitCode == kExitClean);

  PredictorOptions btb1;
  btb1.btbSets = 1;
  btb1.btbWays = 1;
  btb1.window = 16;
  CHECK(run(runConfig("spectre_v2.sir", btb1)).exitCode == kExitClean);
  PredictorOptions btb4 = btb1;
  btb4.btbSets = 4;
  CHECK(run(runConfig("spectre_v2.sir", btb4)).exitCode == kExitFindings);

  RunConfig missing = runConfig("v01.sir", pht(1, 16));
  missing.programPath = fixturePath("does-not-exist.sir");
  RunOutput r = run(missing);
  CHECK(r.exitCode == kExitUsage);
  CHECK(!r.error.empty());
}

TEST_CASE("unknown verdict exits with 2") {
  std::string path = tempFile("predspec-wide.sir",
                              "sym.32 x, x, 16\nsym.32 y, y, 16\nlt c, x, y\n"
                              "br c, a, b\na: halt\nb: halt\n");
  RunConfig c = runConfig("v01.sir", pht(1, 16));
  c.programPath = path;
  RunOutput r = run(c);
  CHECK(r.exitCode == kExitUnknown);
  json rep = json::parse(r.report);
  CHECK(rep["verdict"] == "unknown");
  CHECK(!rep["prediction_aware"]["unknowns"].empty());
}

TEST_CASE("parse errors are reported with a position") {
  std::string path = tempFile("predspec-bad.sir", "halt\nbr r1, nowhere, x\n");
  RunConfig c = runConfig("v01.sir", pht(1, 16));
  c.programPath = path;
  RunOutput r = run(c);
  CHECK(r.exitCode == kExitUsage);
  CHECK(r.error.rfind(path + ":2:", 0) == 0);

  std::string pat = tempFile("predspec-bad.json", R"({"name":"x","nodes":[{}]})");
  RunConfig pc = runConfig("v01.sir", pht(1, 16));
  pc.patternPaths = {pat};
  RunOutput pr = run(pc);
  CHECK(pr.exitCode == kExitUsage);
  CHECK(pr.error.find("$.nodes[0]") != std::string::npos);
}

TEST_CASE("report contents") {
  RunOutput r = run(runConfig("v01.sir", pht(1, 16)));
  json rep = json::parse(r.report);
  CHECK(rep["verdict"] == "leaking");
  CHECK(rep["mode"] == "prediction-aware");
  const json &fs = rep["prediction_aware"]["findings"];
  REQUIRE(fs.size() == 1);
  CHECK(fs[0]["pattern"] == "BR-LD-LD");
  CHECK(fs[0]["kind"] == "leak");
  REQUIRE(fs[0]["chain"].size() == 3);
  CHECK(fs[0]["chain"][0]["pc"] == 3);
  CHECK(fs[0]["witness"]["kind"] == "cache-line");
  CHECK(fs[0]["witness"]["first"]["x"] == fs[0]["witness"]["second"]["x"]);
  CHECK(fs[0]["witness"]["observed"][0] != fs[0]["witness"]["observed"][1]);
}

TEST_CASE("stats for a straight-line program") {
  std::string path = tempFile("predspec-line.sir", "const.32 a, 1\nhalt\n");
  RunConfig c = runConfig("v01.sir", pht(1, 16), RunMode::Both);
  c.programPath = path;
  RunOutput r = run(c);
  json st = json::parse(r.stats);
  CHECK(st["spec_traces_pl"] == 0);
  CHECK(st["spec_traces_nopl"] == 0);
  CHECK(st["common"] == 0);
  CHECK(st["arch_instructions_pl"] == 2);
  CHECK(st["paths_nopl"] == 1);
}

TEST_CASE("stats keys per mode") {
  json aware = json::parse(run(runConfig("v01.sir", pht(1, 16))).stats);
  CHECK(aware.contains("spec_traces_pl"));
  CHECK(!aware.contains("spec_traces_nopl"));
  CHECK(!aware.contains("common"));
  json base = json::parse(
      run(runConfig("v01.sir", pht(1, 16), RunMode::Baseline)).stats);
  CHECK(base.contains("spec_traces_nopl"));
  CHECK(!base.contains("common"));
  for (const char *k : {"arch_instructions_nopl", "spec_instructions_nopl",
                        "paths_nopl", "forks_nopl", "solver_queries_nopl",
                        "step_limit_hits_nopl", "max_trace_length_nopl"})
    CHECK(base.contains(k));
}

TEST_CASE("both mode: common traces never exceed either mode") {
  for (const char *fx : {"v01.sir", "v02.sir", "v09_btb.sir", "spectre_v2.sir",
                         "v11.sir", "v12.sir", "v03.sir", "v04.sir", "v06.sir",
                         "v08.sir", "v13.sir", "v14.sir"}) {
    CAPTURE(fx);
    json st = json::parse(run(runConfig(fx, pht(1, 16), RunMode::Both)).stats);
    const int pl = st["spec_traces_pl"], nopl = st["spec_traces_nopl"],
              common = st["common"];
    CHECK(common <= std::min(pl, nopl));
    CHECK(pl <= nopl);
  }
}

TEST_CASE("identical inputs give byte-identical outputs") {
  for (const char *fx : {"v01.sir", "v09_btb.sir", "spectre_v2.sir", "v11.sir"}) {
    PredictorOptions o;
    o.preset = "cortex-a7";
    RunOutput a = run(runConfig(fx, o, RunMode::Both));
    RunOutput b = run(runConfig(fx, o, RunMode::Both));
    CHECK(a.report == b.report);
    CHECK(a.stats == b.stats);
    CHECK(a.summary == b.summary);
  }
}

TEST_CASE("exit code is clean exactly when the verdict is leakage-free") {
  for (const char *fx : {"v01.sir", "v02.sir", "v11.sir", "spectre_v2.sir"})
    for (unsigned bits : {1u, 4u}) {
      RunOutput r = run(runConfig(fx, pht(bits, 16)));
      json rep = json::parse(r.report);
      CHECK((r.exitCode == kExitClean) == (rep["verdict"] == "leakage-free"));
      CHECK((r.exitCode == kExitClean) ==
            (rep["prediction_aware"]["findings"].empty() &&
             rep["prediction_aware"]["unknowns"].empty()));
    }
}

TEST_CASE("report and stats files") {
  auto dir = std::filesystem::temp_directory_path();
  RunConfig c = runConfig("v01.sir", pht(1, 16), RunMode::Both);
  c.reportPath = (dir / "predspec-report.json").string();
  c.statsPath = (dir / "predspec-stats.json").string();
  RunOutput r = run(c);
  CHECK(readText(*c.reportPath) == r.report);
  CHECK(readText(*c.statsPath) == r.stats);
}
