//===-- report.cpp - Run orchestration and JSON reports --------------------===//

#include "predspec/report.h"

#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace predspec {

using nlohmann::ordered_json;

std::optional<RunMode> runModeFromName(std::string_view name) {
  if (name == "prediction-aware" || name == "pl")
    return RunMode::PredictionAware;
  if (name == "baseline" || name == "nopl")
    return RunMode::Baseline;
  if (name == "both")
    return RunMode::Both;
  return std::nullopt;
}

std::string_view runModeName(RunMode m) {
  switch (m) {
  case RunMode::PredictionAware: return "prediction-aware";
  case RunMode::Baseline: return "baseline";
  case RunMode::Both: return "both";
  }
  return "?";
}

PredictorConfig buildPredictorConfig(const PredictorOptions &o) {
  PredictorConfig cfg;
  if (o.preset)
    cfg = preset(*o.preset);
  const bool tables = o.phtBits || o.btbSets || o.btbWays || o.btbTagBits;
  if (!o.preset && !tables && !o.btfnt)
    cfg.twoLevel = TwoLevelParams{1};
  if (o.phtBits) {
    if (*o.phtBits == 0)
      cfg.twoLevel.reset();
    else
      cfg.twoLevel = TwoLevelParams{*o.phtBits};
  }
  if (o.btbSets || o.btbWays || o.btbTagBits) {
    BtbParams b = cfg.btb.value_or(BtbParams{});
    if (o.btbSets)
      b.sets = *o.btbSets;
    if (o.btbWays)
      b.ways = *o.btbWays;
    if (o.btbTagBits)
      b.tagBits = *o.btbTagBits;
    cfg.btb = b;
  }
  if (o.btfnt)
    cfg.fallback = StaticFallback::Btfnt;
  if (o.phtInitCounter) {
    if (*o.phtInitCounter > 3)
      throw ConfigError("initial counter must be in 0..3");
    cfg.initCounter = static_cast<std::uint8_t>(*o.phtInitCounter);
  }
  if (o.window)
    cfg.window = *o.window;
  cfg.validate();
  return cfg;
}

std::set<TraceId> commonTraces(const ExploreResult &a, const ExploreResult &b) {
  std::set<TraceId> out;
  std::set_intersection(a.traces.begin(), a.traces.end(), b.traces.begin(),
                        b.traces.end(), std::inserter(out, out.begin()));
  return out;
}

int exitCodeFor(const ExploreResult &r) {
  switch (r.verdict()) {
  case Verdict::LeakageFree: return kExitClean;
  case Verdict::Leaking: return kExitFindings;
  case Verdict::Unknown: return kExitUnknown;
  }
  return kExitUsage;
}

namespace {

ordered_json modelJson(const Model &m) {
  ordered_json j = ordered_json::object();
  for (const auto &[k, v] : m)
    j[k] = v;
  return j;
}

ordered_json findingJson(const Program &p, const Finding &f) {
  ordered_json j;
  j["kind"] = f.kind == FindingKind::Leak ? "leak" : "unknown";
  j["pattern"] = f.pattern;
  j["config"] = f.config;
  ordered_json chain = ordered_json::array();
  for (const auto &l : f.chain) {
    ordered_json c;
    c["pc"] = l.pc;
    c["line"] = l.pc < p.instructions.size() ? p.instructions[l.pc].line : 0;
    c["instruction"] = l.pc < p.instructions.size()
                           ? printInstruction(p, p.instructions[l.pc])
                           : std::string(opcodeName(l.op));
    c["speculative"] = l.speculative;
    c["event"] = l.eventIndex;
    chain.push_back(c);
  }
  j["chain"] = chain;
  j["path_condition"] = f.pathCondition;
  if (f.witness) {
    ordered_json w;
    w["kind"] =
        f.witness->kind == Witness::Kind::CacheLine ? "cache-line" : "branch";
    w["observable"] = printExpr(f.witness->observable);
    w["first"] = modelJson(f.witness->pair.first);
    w["second"] = modelJson(f.witness->pair.second);
    w["observed"] = {f.witness->pair.observedFirst,
                     f.witness->pair.observedSecond};
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  if (!f.message.empty())
    j["message"] = f.message;
  return j;
}

ordered_json resultJson(const Program &p, const ExploreResult &r) {
  ordered_json j;
  j["verdict"] = std::string(verdictName(r.verdict()));
  ordered_json fs = ordered_json::array();
  for (const auto &f : r.findings)
    fs.push_back(findingJson(p, f));
  j["findings"] = fs;
  j["unknowns"] = std::vector<std::string>(r.stats.unknowns.begin(),
                                           r.stats.unknowns.end());
  j["diagnostics"] = r.diagnostics;
  return j;
}

void modeStats(ordered_json &j, const std::string &suffix, const Stats &s) {
  j["arch_instructions_" + suffix] = s.archInstructions;
  j["spec_instructions_" + suffix] = s.specInstructions;
  j["paths_" + suffix] = s.paths;
  j["forks_" + suffix] = s.forks;
  j["solver_queries_" + suffix] = s.solverQueries;
  j["step_limit_hits_" + suffix] = s.stepLimitHits;
  j["max_trace_length_" + suffix] = s.maxTraceLength;
}

} // namespace

std::string emitStats(const ModeResults &r) {
  ordered_json j;
  if (r.aware)
    j["spec_traces_pl"] = r.aware->traces.size();
  if (r.baseline)
    j["spec_traces_nopl"] = r.baseline->traces.size();
  if (r.aware && r.baseline)
    j["common"] = commonTraces(*r.aware, *r.baseline).size();
  if (r.aware)
    modeStats(j, "pl", r.aware->stats);
  if (r.baseline)
    modeStats(j, "nopl", r.baseline->stats);
  return j.dump(2) + "\n";
}

std::string emitReport(const Program &p, const RunConfig &cfg,
                       const ModeResults &r) {
  ordered_json j;
  j["program"] = cfg.programPath;
  j["patterns"] = cfg.patternPaths;
  ordered_json c;
  c["predictor"] = cfg.engine.predictor.describe();
  c["window"] = cfg.engine.predictor.window;
  c["cache"] = fmt::format(
      "{}B lines, {} sets, {} ways, {} granularity", cfg.engine.cache.lineSize,
      cfg.engine.cache.sets, cfg.engine.cache.ways,
      cfg.engine.cache.granularity == Granularity::Line ? "line" : "set");
  c["bit_budget"] = cfg.engine.bitBudget;
  c["step_limit"] = cfg.engine.stepLimit;
  j["config"] = c;
  j["mode"] = std::string(runModeName(cfg.mode));
  const ExploreResult &primary = r.aware ? *r.aware : *r.baseline;
  j["verdict"] = std::string(verdictName(primary.verdict()));
  if (r.aware)
    j["prediction_aware"] = resultJson(p, *r.aware);
  if (r.baseline)
    j["baseline"] = resultJson(p, *r.baseline);
  return j.dump(2) + "\n";
}

std::string summarize(const Program &p, const ModeResults &r) {
  std::string out;
  auto section = [&](const char *title, const ExploreResult &res) {
    out += fmt::format("{}: {} ({} finding{}, {} speculative trace{}, {} "
                       "path{})\n",
                       title, verdictName(res.verdict()), res.findings.size(),
                       res.findings.size() == 1 ? "" : "s",
                       res.traces.size(), res.traces.size() == 1 ? "" : "s",
                       res.stats.paths, res.stats.paths == 1 ? "" : "s");
    for (const auto &f : res.findings) {
      std::vector<std::string> links;
      for (const auto &l : f.chain)
        links.push_back(fmt::format(
            "{}@{}{}", opcodeName(l.op), l.pc,
            l.pc < p.instructions.size()
                ? fmt::format(" (line {})", p.instructions[l.pc].line)
                : ""));
      out += fmt::format("  {} {}: {}\n",
                         f.kind == FindingKind::Leak ? "leak" : "unknown",
                         f.pattern.empty() ? "-" : f.pattern,
                         f.message.empty() ? fmt::format("{}", fmt::join(links, " -> "))
                                           : fmt::format("{} [{}]",
                                                         fmt::join(links, " -> "),
                                                         f.message));
    }
    for (const auto &u : res.stats.unknowns)
      out += fmt::format("  unknown: {}\n", u);
  };
  if (r.aware)
    section("prediction-aware", *r.aware);
  if (r.baseline)
    section("baseline", *r.baseline);
  if (r.aware && r.baseline)
    out += fmt::format("common speculative traces: {}\n",
                       commonTraces(*r.aware, *r.baseline).size());
  return out;
}

namespace {

std::string readFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error(fmt::format("cannot read '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error(fmt::format("cannot write '{}'", path));
  out << text;
}

} // namespace

RunOutput runLoaded(const Program &p, const std::vector<MonitorSpec> &patterns,
                    const RunConfig &cfg) {
  RunOutput out;
  Program laid = p.laidOut()
                     ? p
                     : layoutRegions(p, kDefaultBase, cfg.engine.cache.lineSize);
  ModeResults r;
  if (cfg.mode != RunMode::Baseline)
    r.aware = explore(laid, cfg.engine, patterns);
  if (cfg.mode != RunMode::PredictionAware)
    r.baseline = exploreBaseline(laid, cfg.engine, patterns);
  out.report = emitReport(laid, cfg, r);
  out.stats = emitStats(r);
  out.summary = summarize(laid, r);
  out.exitCode = exitCodeFor(r.aware ? *r.aware : *r.baseline);
  if (cfg.reportPath)
    writeFile(*cfg.reportPath, out.report);
  if (cfg.statsPath)
    writeFile(*cfg.statsPath, out.stats);
  return out;
}

RunOutput run(const RunConfig &cfg) {
  RunOutput out;
  Program p;
  std::vector<MonitorSpec> patterns;
  try {
    p = layoutRegions(parseProgram(readFile(cfg.programPath)), kDefaultBase,
                      cfg.engine.cache.lineSize);
  } catch (const ParseError &e) {
    out.error = fmt::format("{}:{}", cfg.programPath, e.what());
    return out;
  } catch (const std::exception &e) {
    out.error = fmt::format("{}: error: {}", cfg.programPath, e.what());
    return out;
  }
  for (const auto &path : cfg.patternPaths) {
    try {
      patterns.push_back(loadPattern(readFile(path)));
    } catch (const std::exception &e) {
      out.error = fmt::format("{}: error: {}", path, e.what());
      return out;
    }
  }
  try {
    return runLoaded(p, patterns, cfg);
  } catch (const std::exception &e) {
    out.error = fmt::format("error: {}", e.what());
    out.exitCode = kExitUsage;
    return out;
  }
}

} // namespace predspec
