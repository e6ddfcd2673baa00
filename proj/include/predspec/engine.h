//===-- engine.h - Prediction-aware symbolic executor -----------*- C++ -*-===//
//
// Explores every feasible architectural path of a SIR program depth-first,
// taken edge first. At each conditional branch and indirect call the path's
// own predictor is consulted before it is updated; a misprediction spawns a
// speculative trace of at most `window` instructions from the predicted
// target. Speculative traces run on a copy of the architectural state and are
// rolled back afterwards; only the cache, monitors, stats and findings keep
// their effects. Speculation does not nest.
//
//===----------------------------------------------------------------------===//

#ifndef PREDSPEC_ENGINE_H
#define PREDSPEC_ENGINE_H

#include "predspec/cache.h"
#include "predspec/monitor.h"
#include "predspec/predictor.h"
#include "predspec/sir.h"
#include "predspec/solver.h"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace predspec {

enum class ExploreMode {
  /// Speculate only where the path's predictor mispredicts.
  PredictionAware,
  /// Every conditional branch speculates down the direction not taken;
  /// indirect calls never speculate.
  Baseline,
};

std::string_view modeName(ExploreMode m);

struct EngineConfig {
  PredictorConfig predictor;
  CacheConfig cache;
  unsigned bitBudget = kDefaultBitBudget;
  /// Architectural instructions per path before the path is abandoned.
  std::size_t stepLimit = 10000;
  /// Completed or abandoned paths before exploration stops.
  std::size_t pathLimit = 100000;
  ExploreMode mode = ExploreMode::PredictionAware;
  /// Compiles out every speculative trace; used as a differential reference.
  bool disableSpeculation = false;
  /// Compare the architectural state before and after every trace.
  bool checkRollback = true;
  /// Keep a summary of every final architectural state.
  bool recordFinalStates = false;
};

using PathCondition = std::shared_ptr<const std::vector<ExprRef>>;

/// One event together with what the cache reported for it.
struct LoggedEvent {
  Event event;
  CacheObservation cache;
  /// Branch condition for `br`, target for `icall`.
  ExprRef operand;
  PathCondition pathCond;
};

struct EventLogNode {
  LoggedEvent entry;
  std::shared_ptr<const EventLogNode> prev;
  std::size_t index = 0;
};
using EventLog = std::shared_ptr<const EventLogNode>;

std::vector<const LoggedEvent *> flattenLog(const EventLog &tail);

/// Identity of a speculative trace: the branch decisions of the architectural
/// prefix, the number of architectural steps, the branch and the start pc.
struct TraceId {
  std::string decisions;
  std::size_t archStep = 0;
  Pc branchPc = 0;
  Pc startPc = 0;

  auto operator<=>(const TraceId &) const = default;
};

struct Witness {
  enum class Kind { CacheLine, Branch };
  Kind kind = Kind::CacheLine;
  LeakPair pair;
  /// Line (or set) index for CacheLine, branch condition for Branch.
  ExprRef observable;
};

enum class FindingKind { Leak, Unknown };

struct ChainLink {
  Pc pc = 0;
  Opcode op = Opcode::Halt;
  bool speculative = false;
  std::size_t eventIndex = 0;
};

struct Finding {
  FindingKind kind = FindingKind::Leak;
  std::string pattern;
  std::vector<ChainLink> chain;
  std::vector<std::string> pathCondition;
  std::string config;
  std::optional<Witness> witness;
  std::string message;
  /// Event log of the path up to and including the matching event.
  EventLog log;
  std::size_t monitorIndex = 0;

  /// Sort and deduplication key.
  std::pair<std::string, std::vector<Pc>> key() const;
};

struct FinalState {
  std::string decisions;
  std::vector<std::string> pathCondition;
  std::map<std::string, std::string> registers;
  std::vector<std::string> memoryWrites;
  std::vector<Pc> returnStack;
  Pc pc = 0;
  std::string endReason;

  bool operator==(const FinalState &) const = default;
};

struct Stats {
  std::size_t archInstructions = 0;
  std::size_t specInstructions = 0;
  std::size_t specTraces = 0;
  /// Events emitted, architectural and speculative.
  std::size_t events = 0;
  std::size_t paths = 0;
  std::size_t forks = 0;
  std::size_t branchResolutions = 0;
  std::size_t predictorUpdates = 0;
  std::size_t solverQueries = 0;
  std::size_t stepLimitHits = 0;
  std::size_t rollbackChecks = 0;
  std::size_t rollbackViolations = 0;
  std::size_t maxTraceLength = 0;
  /// Number of speculative traces longer than the window (must stay 0).
  std::size_t windowViolations = 0;
  bool pathLimitHit = false;
  /// Distinct causes that make the verdict unknown.
  std::set<std::string> unknowns;
};

struct ExploreResult {
  std::vector<Finding> findings;
  Stats stats;
  std::set<TraceId> traces;
  std::vector<std::string> diagnostics;
  std::vector<FinalState> finalStates;

  Verdict verdict() const;
};

ExploreResult explore(const Program &p, const EngineConfig &cfg,
                      const std::vector<MonitorSpec> &patterns);
/// explore() with the mode forced to Baseline.
ExploreResult exploreBaseline(const Program &p, EngineConfig cfg,
                              const std::vector<MonitorSpec> &patterns);

/// Feeds the finding's event log through a fresh monitor and reports whether
/// it matches at the same event with the same chain.
bool replayMatches(const Finding &f, const MonitorSpec &spec);

/// Re-evaluates a witness: the two models agree on every public input of the
/// observable and the path condition, satisfy the path condition and
/// disagree on the observable.
bool witnessValid(const Witness &w, const std::vector<ExprRef> &pathCond);

} // namespace predspec

#endif
