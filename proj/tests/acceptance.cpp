//===-- acceptance.cpp - One pass/fail line per acceptance criterion -------===//
//
// Exit status is nonzero when any criterion fails.
//
//===----------------------------------------------------------------------===//

#include "support/checks.h"
#include "support/fixtures.h"
#include "support/random_program.h"

#include "predspec/engine.h"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <deque>
#include <functional>
#include <random>

using namespace predspec;
using namespace predspec::testing;

namespace {

// Tolerances.
constexpr double kCriterion1Seconds = 5.0;
constexpr double kCriterion2Seconds = 10.0;
constexpr int kRandomDominancePrograms = 200;
constexpr int kRandomRollbackPrograms = 1000;
constexpr int kHistoryResolutions = 10000;
constexpr std::size_t kAllowedViolations = 0;

const char *const kFixtures[] = {"v01.sir", "v02.sir", "v03.sir", "v04.sir",
                                 "v06.sir", "v08.sir", "v09_btb.sir",
                                 "v11.sir", "v12.sir", "v13.sir", "v14.sir",
                                 "spectre_v2.sir"};

struct Recorded {
  Finding finding;
  CacheConfig cache;
  MonitorSpec spec;
};

/// Every finding produced by criteria 1-6, for criteria 8 and 9.
std::vector<Recorded> gFindings;

ExploreResult runAndRecord(const Program &p, const EngineConfig &cfg,
                           const std::vector<MonitorSpec> &pats,
                           bool baseline = false) {
  ExploreResult r = baseline ? exploreBaseline(p, cfg, pats)
                             : explore(p, cfg, pats);
  for (const auto &f : r.findings)
    if (f.kind == FindingKind::Leak)
      gFindings.push_back({f, cfg.cache, pats.at(f.monitorIndex)});
  return r;
}

EngineConfig engine(PredictorConfig pc) {
  EngineConfig c;
  c.predictor = std::move(pc);
  return c;
}

bool hasPattern(const ExploreResult &r, const std::string &name) {
  return std::any_of(r.findings.begin(), r.findings.end(), [&](const Finding &f) {
    return f.kind == FindingKind::Leak && f.pattern == name;
  });
}

double seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

int gFailures = 0;

void report(int n, bool ok, const std::string &what, const std::string &detail) {
  fmt::print("criterion {}: {} - {} ({})\n", n, ok ? "PASS" : "FAIL", what,
             detail);
  if (!ok)
    ++gFailures;
}

void criterion1() {
  auto start = std::chrono::steady_clock::now();
  Program v01 = loadFixture("v01.sir"), v02 = loadFixture("v02.sir");
  std::vector<std::string> bad;
  for (unsigned bits : {1u, 4u})
    for (unsigned w : {16u, 32u}) {
      auto pats = shippedPatterns();
      if (!hasPattern(runAndRecord(v01, engine(phtConfig(bits, w)), pats),
                      "BR-LD-LD"))
        bad.push_back(fmt::format("v01 PHT:{} w={} missed", bits, w));
      if (!runAndRecord(v02, engine(phtConfig(bits, w)), pats).findings.empty())
        bad.push_back(fmt::format("v02 PHT:{} w={} flagged", bits, w));
    }
  const double t = seconds(start);
  report(1, bad.empty() && t < kCriterion1Seconds,
         "v01 leaks and v02 is clean for PHT:{1,4} x w={16,32}",
         bad.empty() ? fmt::format("8/8 verdicts, {:.2f}s < {}s", t,
                                   kCriterion1Seconds)
                     : fmt::format("{}", fmt::join(bad, "; ")));
}

void criterion2() {
  struct Row {
    const char *name;
    PredictorConfig cfg;
    bool vulnerable;
  };
  std::vector<Row> rows;
  for (unsigned w : {16u, 32u}) {
    rows.push_back({"PHT:1", phtConfig(1, w), false});
    rows.push_back({"PHT:4", phtConfig(4, w), false});
    rows.push_back({"BTB:1", btbConfig(1, w, true), false});
    rows.push_back({"BTB:4", btbConfig(4, w, true), true});
    rows.push_back({"PHT:4+BTB:4", btbConfig(4, w, true, 4), true});
  }
  auto start = std::chrono::steady_clock::now();
  Program p = loadFixture("spectre_v2.sir");
  std::vector<std::string> bad;
  for (const auto &row : rows) {
    ExploreResult r = runAndRecord(p, engine(row.cfg), shippedPatterns());
    const bool leaks = r.verdict() == Verdict::Leaking;
    if (leaks != row.vulnerable || r.verdict() == Verdict::Unknown)
      bad.push_back(fmt::format("{} w={}: {}", row.name, row.cfg.window,
                                verdictName(r.verdict())));
  }
  const double t = seconds(start);
  report(2, bad.empty() && t < kCriterion2Seconds,
         "Spectre-v2 verdicts over the 10 litmus configurations",
         bad.empty() ? fmt::format("10/10 exact, {:.2f}s < {}s", t,
                                   kCriterion2Seconds)
                     : fmt::format("{}", fmt::join(bad, "; ")));
}

void criterion3() {
  // Line map of the fixture: line 2 guarded load at pc 7, line 4 at pc 20.
  // At w=32 the cold-BTB mispredict of the line 2 branch runs 17 instructions
  // into line 4, so that site also shows up there; it is reported, not
  // counted against the line 2 attribution.
  constexpr Pc kLine2Load = 7, kLine4Load = 20;
  constexpr unsigned kCrossingWindow = 17;
  Program p = loadFixture("v09_btb.sir");
  struct Row {
    std::string name;
    PredictorConfig cfg;
    Pc expected;
  };
  std::vector<Row> rows;
  for (unsigned w : {16u, 32u}) {
    rows.push_back({"BTB:1", btbConfig(1, w, true), kLine2Load});
    rows.push_back({"BTB:4", btbConfig(4, w, true), kLine4Load});
    rows.push_back({"PHT:1", phtConfig(1, w), kLine4Load});
    rows.push_back({"PHT:4", phtConfig(4, w), kLine4Load});
  }
  std::vector<std::string> bad, extra;
  for (const auto &row : rows) {
    ExploreResult r = runAndRecord(p, engine(row.cfg), shippedPatterns());
    std::set<Pc> loads;
    for (const auto &f : r.findings)
      if (f.kind == FindingKind::Leak && f.pattern == "BR-LD-LD")
        loads.insert(f.chain.at(1).pc);
    std::set<Pc> allowed{row.expected};
    const bool crossing = row.expected == kLine2Load &&
                          row.cfg.window >= kCrossingWindow;
    if (crossing)
      allowed.insert(kLine4Load);
    const bool ok = loads.count(row.expected) &&
                    std::includes(allowed.begin(), allowed.end(),
                                  loads.begin(), loads.end());
    if (!ok)
      bad.push_back(fmt::format("{} w={}: guarded loads {{{}}}, expected {}",
                                row.name, row.cfg.window,
                                fmt::join(loads, ","), row.expected));
    else if (loads.size() > 1)
      extra.push_back(fmt::format("{} w={} also {{{}}}", row.name,
                                  row.cfg.window, fmt::join(loads, ",")));
  }
  std::string detail = bad.empty()
                           ? "8/8 configurations at the documented pc"
                           : fmt::format("{}", fmt::join(bad, "; "));
  if (!extra.empty())
    detail += fmt::format("; line 2 trace crossing into line 4: {}",
                          fmt::join(extra, "; "));
  report(3, bad.empty(), "v09 leak site: line 2 under BTB:1, line 4 otherwise",
         detail);
}

void criterion4() {
  std::vector<std::string> bad;
  for (const char *fx : {"v11.sir", "v12.sir"}) {
    ExploreResult r = runAndRecord(loadFixture(fx), engine(phtConfig(1, 16)),
                                   shippedPatterns());
    if (!hasPattern(r, "LD-BR-LD"))
      bad.push_back(fmt::format("{} has no LD-BR-LD finding", fx));
  }
  report(4, bad.empty(), "key-dependent branch matches LD-BR-LD under PHT:1 w=16",
         bad.empty() ? "v11 and v12 detected" : fmt::format("{}", fmt::join(bad, "; ")));
}

struct Dominance {
  std::size_t runs = 0;
  std::size_t violations = 0;
  std::string first;
};

void checkDominance(const Program &p, const EngineConfig &cfg,
                    const std::string &label, Dominance &d) {
  auto pats = shippedPatterns();
  ExploreResult aware = runAndRecord(p, cfg, pats);
  ExploreResult base = runAndRecord(p, cfg, pats, true);
  std::set<TraceId> common;
  std::set_intersection(aware.traces.begin(), aware.traces.end(),
                        base.traces.begin(), base.traces.end(),
                        std::inserter(common, common.begin()));
  ++d.runs;
  const bool ok =
      aware.traces.size() <= base.traces.size() &&
      std::includes(aware.traces.begin(), aware.traces.end(), common.begin(),
                    common.end()) &&
      std::includes(base.traces.begin(), base.traces.end(), common.begin(),
                    common.end()) &&
      std::includes(base.traces.begin(), base.traces.end(),
                    aware.traces.begin(), aware.traces.end());
  if (!ok && d.violations++ == 0)
    d.first = fmt::format("{}: pl={} nopl={}", label, aware.traces.size(),
                          base.traces.size());
}

void criterion5() {
  Dominance d;
  for (const char *fx : kFixtures)
    for (unsigned bits : {1u, 4u})
      for (unsigned w : {16u, 32u})
        checkDominance(loadFixture(fx), engine(phtConfig(bits, w)),
                       fmt::format("{} PHT:{} w={}", fx, bits, w), d);
  std::mt19937 rng(5005);
  for (int i = 0; i < kRandomDominancePrograms; ++i) {
    Program p = randomProgram(rng);
    checkDominance(p, engine(randomPhtPredictor(rng)),
                   fmt::format("random #{}", i), d);
  }
  report(5, d.violations <= kAllowedViolations,
         "prediction-aware traces <= baseline, common within both",
         fmt::format("{} runs ({} fixtures x 4 configs + {} random), {} "
                     "violations{}",
                     d.runs, std::size(kFixtures), kRandomDominancePrograms,
                     d.violations, d.first.empty() ? "" : "; first: " + d.first));
}

void criterion6() {
  std::mt19937 rng(6006);
  std::size_t traces = 0, rollbackViolations = 0, checks = 0, diffs = 0;
  std::string first;
  for (int i = 0; i < kRandomRollbackPrograms; ++i) {
    Program p = randomProgram(rng);
    EngineConfig cfg = engine(randomPredictor(rng));
    cfg.recordFinalStates = true;
    auto pats = shippedPatterns();
    ExploreResult r = runAndRecord(p, cfg, pats);
    traces += r.stats.specTraces;
    checks += r.stats.rollbackChecks;
    rollbackViolations += r.stats.rollbackViolations;
    if (r.stats.rollbackChecks != r.stats.specTraces)
      ++rollbackViolations;

    EngineConfig zero = cfg;
    zero.predictor.window = 0;
    EngineConfig off = cfg;
    off.disableSpeculation = true;
    ExploreResult rz = explore(p, zero, pats);
    ExploreResult ro = explore(p, off, pats);
    if (rz.finalStates != ro.finalStates || rz.stats.specTraces != 0 ||
        r.finalStates != ro.finalStates) {
      if (diffs++ == 0)
        first = fmt::format("program #{}", i);
    }
  }
  const bool ok = rollbackViolations <= kAllowedViolations &&
                  diffs <= kAllowedViolations && traces > 0;
  report(6, ok, "rollback exactness and w=0 equivalence on random programs",
         fmt::format("{} programs, {} traces, {} rollback checks, {} rollback "
                     "violations, {} final-state differences{}",
                     kRandomRollbackPrograms, traces, checks, rollbackViolations,
                     diffs, first.empty() ? "" : "; first: " + first));
}

void criterion7() {
  std::vector<std::string> bad;
  auto expect = [&](bool cond, const std::string &what) {
    if (!cond)
      bad.push_back(what);
  };
  PredictorConfig four = phtConfig(4, 16);

  {
    PredictorState s(four);
    s.twoLevel()->setBhr(0b0111);
    s.twoLevel()->setCounter(7, 0b10);
    expect(s.predictDirection(0, 1), "BHR 0111 with PHT[7]=10 is not taken");
  }
  {
    PredictorState s(four);
    s.twoLevel()->setBhr(0);
    s.twoLevel()->setCounter(0, 3);
    s.update(0, true, 1);
    expect(s.twoLevel()->counter(0) == 3, "counter exceeds 3");
    s.twoLevel()->setBhr(0);
    s.twoLevel()->setCounter(0, 0);
    s.update(0, false, 1);
    expect(s.twoLevel()->counter(0) == 0, "counter drops below 0");
  }
  std::size_t historyMismatches = 0;
  {
    std::mt19937 rng(7007);
    PredictorState s(four);
    std::deque<bool> log;
    for (int i = 0; i < kHistoryResolutions; ++i) {
      const bool t = rng() & 1;
      s.update(static_cast<Pc>(rng() % 32), t, 0);
      log.push_back(t);
      if (log.size() > 4)
        log.pop_front();
      std::uint32_t want = 0;
      for (bool b : log)
        want = (want << 1) | b;
      historyMismatches += s.twoLevel()->bhr() != want;
    }
    expect(historyMismatches == 0,
           fmt::format("{} BHR mismatches", historyMismatches));
  }
  std::size_t lruMismatches = 0;
  {
    std::mt19937 rng(7008);
    for (std::uint32_t sets : {1u, 2u, 4u})
      for (std::uint32_t ways : {1u, 2u, 4u}) {
        PredictorConfig c;
        c.btb = BtbParams{sets, ways, 4};
        PredictorState s(c);
        const unsigned setBits = std::countr_zero(sets);
        std::vector<std::deque<std::pair<std::uint32_t, Pc>>> ref(sets);
        for (int i = 0; i < 2000; ++i) {
          const Pc pc = rng() % 256;
          const std::uint32_t tag = (pc >> setBits) & 15u;
          auto &r = ref[pc % sets];
          if (rng() & 1) {
            const Pc target = rng() % 100;
            s.updateIndirect(pc, target);
            auto it = std::find_if(r.begin(), r.end(),
                                   [&](auto &e) { return e.first == tag; });
            if (it != r.end())
              r.erase(it);
            else if (r.size() == ways)
              r.pop_back();
            r.emplace_front(tag, target);
          } else {
            std::optional<Pc> want;
            for (auto &e : r)
              if (e.first == tag)
                want = e.second;
            lruMismatches += s.predictTarget(pc) != want;
          }
        }
      }
    expect(lruMismatches == 0, fmt::format("{} BTB mismatches", lruMismatches));
  }
  report(7, bad.empty(), "predictor: two-level lookup, saturation, history, BTB LRU",
         bad.empty()
             ? fmt::format("{} resolutions, 0 history and 0 BTB mismatches",
                           kHistoryResolutions)
             : fmt::format("{}", fmt::join(bad, "; ")));
}

void criterion8() {
  std::size_t checked = 0, violations = 0;
  std::string first;
  for (const auto &rec : gFindings) {
    ++checked;
    std::string why;
    bool ok = independentWitnessCheck(rec.finding, rec.cache, &why);
    if (ok) {
      const auto *psi = witnessPathCondition(rec.finding);
      ok = witnessValid(*rec.finding.witness, *psi);
      if (!ok)
        why = "engine re-check failed";
    }
    if (!ok && violations++ == 0)
      first = fmt::format("{} at pcs {}: {}", rec.finding.pattern,
                          rec.finding.chain.front().pc, why);
  }
  report(8, violations <= kAllowedViolations && checked > 0,
         "leak witnesses differ only in secrets and split the observable",
         fmt::format("{} leak findings, {} violations{}", checked, violations,
                     first.empty() ? "" : "; first: " + first));
}

void criterion9() {
  std::size_t replayed = 0, violations = 0;
  for (const auto &rec : gFindings) {
    ++replayed;
    if (!replayMatches(rec.finding, rec.spec))
      ++violations;
  }

  // Countdown semantics: a token with startTTL=k survives k-1 further events
  // and is gone after the k-th.
  std::size_t ttlViolations = 0;
  for (int k = 1; k <= 6; ++k) {
    MonitorSpec spec;
    spec.name = "ttl";
    NodeProps first, second;
    first.instruction = Opcode::Br;
    first.startTTL = k;
    second.instruction = Opcode::Load;
    spec.nodes = {first, second};
    auto shared = std::make_shared<const MonitorSpec>(spec);
    for (int gap = 0; gap <= 7; ++gap) {
      MonitorInstance m(shared);
      Event br;
      br.name = Opcode::Br;
      m.observe(br, {});
      Event filler;
      filler.name = Opcode::Add;
      for (int i = 0; i < gap; ++i)
        m.observe(filler, {});
      Event ld;
      ld.name = Opcode::Load;
      const bool matched = m.observe(ld, {}).match.has_value();
      ttlViolations += matched != (gap < k);
    }
  }
  report(9, violations + ttlViolations <= kAllowedViolations && replayed > 0,
         "findings replay on a fresh monitor; TTL countdown",
         fmt::format("{} findings replayed, {} replay violations, {} TTL "
                     "violations over 48 cases",
                     replayed, violations, ttlViolations));
}

} // namespace

int main() {
  const std::function<void()> criteria[] = {criterion1, criterion2, criterion3,
                                            criterion4, criterion5, criterion6,
                                            criterion7, criterion8, criterion9};
  for (const auto &c : criteria)
    c();
  return gFailures == 0 ? 0 : 1;
}
