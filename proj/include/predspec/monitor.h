//===-- monitor.h - Token-propagating pattern monitor -----------*- C++ -*-===//
//
// A pattern is a chain Start -> Node_1 -> ... -> Node_n. The monitor holds
// tokens <id, pid, inst, ttl>; an event that satisfies the properties of
// Node_{i+1} copies a token from Node_i into Node_{i+1}. Nodes are swept from
// the back so one event advances a token by at most one node. A token that
// reaches Node_n is a match.
//
// isConst polarity: `isConst: true` matches events with no symbolic operand,
// `isConst: false` demands a symbolic operand.
//
//===----------------------------------------------------------------------===//

#ifndef PREDSPEC_MONITOR_H
#define PREDSPEC_MONITOR_H

#include "predspec/cache.h"
#include "predspec/sir.h"

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace predspec {

struct MemoryInfo {
  ExprRef addr;
  std::optional<Address> concreteAddr;
  std::optional<std::uint32_t> line;
  bool isWrite = false;
};

/// One executed instruction, architectural or speculative.
struct Event {
  Opcode name = Opcode::Halt;
  Pc pc = 0;
  bool speculative = false;
  bool symbolicAccess = false;
  bool secretAccess = false;
  std::optional<MemoryInfo> memory;
};

/// A leak verdict computed at most once, on first demand.
class LazyLeakVerdict {
public:
  explicit LazyLeakVerdict(std::function<LeakVerdict()> compute)
      : Compute(std::move(compute)) {}
  explicit LazyLeakVerdict(LeakVerdict known) : Cached(std::move(known)) {}

  const LeakVerdict &get() const {
    if (!Cached) {
      Cached = Compute();
      Compute = nullptr;
    }
    return *Cached;
  }
  bool computed() const { return Cached.has_value(); }

private:
  mutable std::function<LeakVerdict()> Compute;
  mutable std::optional<LeakVerdict> Cached;
};

/// The cache's report for one event (C_i): the access, if the event touched
/// a concrete line, and the vulnerability verdict for its address.
struct CacheObservation {
  std::optional<AccessResult> access;
  std::shared_ptr<const LazyLeakVerdict> leak;

  bool leaks() const { return leak && leak->get().leaks(); }
};

struct NodeProps {
  std::optional<Opcode> instruction;
  std::optional<bool> isSpeculative;
  std::optional<bool> isConst;
  std::optional<bool> isSensitive;
  std::optional<bool> checkCacheState;
  std::optional<int> startTTL;
  std::optional<bool> stopTTL;

  bool empty() const {
    return !instruction && !isSpeculative && !isConst && !isSensitive &&
           !checkCacheState && !startTTL && !stopTTL;
  }
};

struct MonitorSpec {
  std::string name;
  std::vector<NodeProps> nodes;
};

class PatternError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

MonitorSpec loadPattern(std::string_view jsonText);
std::string patternToJson(const MonitorSpec &spec);

bool satisfies(const NodeProps &np, const Event &e, const CacheObservation &c);

struct Token {
  std::uint64_t id = 0;
  /// 0 for the Start token (which has id 0 itself).
  std::uint64_t pid = 0;
  Pc pc = 0;
  Opcode op = Opcode::Halt;
  bool speculative = false;
  std::size_t eventIndex = 0;
  int ttl = -1;
  /// Node the token lives in; 0 is Start.
  std::size_t node = 0;
};

struct Match {
  /// Tokens in Node_1 .. Node_n, in chain order.
  std::vector<Token> chain;
  std::size_t eventIndex = 0;
};

struct ObserveResult {
  unsigned transitions = 0;
  std::optional<Match> match;
};

class MonitorInstance {
public:
  explicit MonitorInstance(std::shared_ptr<const MonitorSpec> spec);

  ObserveResult observe(const Event &e, const CacheObservation &c);

  const MonitorSpec &spec() const { return *Spec; }
  std::size_t events() const { return Events; }
  /// Live token ids per node; index 0 is Start.
  const std::vector<std::vector<std::uint64_t>> &live() const { return Live; }
  const Token &token(std::uint64_t id) const { return Tokens.at(id); }
  std::size_t tokenCount() const { return Tokens.size(); }

private:
  std::vector<Token> chainOf(std::uint64_t id) const;

  std::shared_ptr<const MonitorSpec> Spec;
  std::vector<std::vector<std::uint64_t>> Live;
  std::vector<Token> Tokens;
  std::size_t Events = 0;
};

/// Leakage-free iff no trace drove a token into the last node. Unknown
/// outcomes (budget limits) downgrade a clean verdict.
enum class Verdict { LeakageFree, Leaking, Unknown };
std::string_view verdictName(Verdict v);

} // namespace predspec

#endif
