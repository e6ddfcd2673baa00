//===-- report.h - Run orchestration and JSON reports -----------*- C++ -*-===//
//
// Exit codes: 0 leakage-free, 1 findings present, 2 unknown (a budget or
// limit was hit and nothing was found), 3 usage or parse error.
//
//===----------------------------------------------------------------------===//

#ifndef PREDSPEC_REPORT_H
#define PREDSPEC_REPORT_H

#include "predspec/engine.h"

#include <optional>
#include <string>
#include <vector>

namespace predspec {

enum class RunMode { PredictionAware, Baseline, Both };

std::optional<RunMode> runModeFromName(std::string_view name);
std::string_view runModeName(RunMode m);

inline constexpr int kExitClean = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitUnknown = 2;
inline constexpr int kExitUsage = 3;

/// Predictor flags as given on the command line; a preset is applied first
/// and explicit flags override it.
struct PredictorOptions {
  std::optional<std::string> preset;
  std::optional<unsigned> phtBits;
  std::optional<unsigned> phtInitCounter;
  std::optional<std::uint32_t> btbSets;
  std::optional<std::uint32_t> btbWays;
  std::optional<unsigned> btbTagBits;
  bool btfnt = false;
  std::optional<unsigned> window;
};

/// Throws ConfigError. With no preset and no table flags the predictor is
/// a 1-bit two-level predictor.
PredictorConfig buildPredictorConfig(const PredictorOptions &o);

struct RunConfig {
  std::string programPath;
  std::vector<std::string> patternPaths;
  EngineConfig engine;
  RunMode mode = RunMode::PredictionAware;
  std::optional<std::string> reportPath;
  std::optional<std::string> statsPath;
};

struct RunOutput {
  int exitCode = kExitUsage;
  std::string report; // JSON
  std::string stats;  // JSON
  std::string summary;
  std::string error;
};

/// Results of the modes that were run; either may be absent.
struct ModeResults {
  std::optional<ExploreResult> aware;
  std::optional<ExploreResult> baseline;
};

std::set<TraceId> commonTraces(const ExploreResult &a, const ExploreResult &b);

std::string emitStats(const ModeResults &r);
std::string emitReport(const Program &p, const RunConfig &cfg,
                       const ModeResults &r);
std::string summarize(const Program &p, const ModeResults &r);
int exitCodeFor(const ExploreResult &r);

/// Loads inputs, explores, writes the report and stats files if requested.
RunOutput run(const RunConfig &cfg);

/// Same, with the program and patterns already in memory.
RunOutput runLoaded(const Program &p, const std::vector<MonitorSpec> &patterns,
                    const RunConfig &cfg);

} // namespace predspec

#endif
