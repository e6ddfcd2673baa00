//===-- cache.h - Set-associative LRU cache and leak check ------*- C++ -*-===//

#ifndef PREDSPEC_CACHE_H
#define PREDSPEC_CACHE_H

#include "predspec/expr.h"
#include "predspec/solver.h"

#include <cstdint>
#include <optional>
#include <vector>

namespace predspec {

/// What the adversary observes: the cache line (Flush+Reload) or only the
/// cache set (Prime+Probe).
enum class Granularity { Line, Set };

struct CacheConfig {
  std::uint32_t lineSize = 64;
  std::uint32_t sets = 64;
  std::uint32_t ways = 4;
  Granularity granularity = Granularity::Line;

  void validate() const;
  bool operator==(const CacheConfig &) const = default;
};

struct AccessResult {
  bool hit = false;
  std::optional<std::uint32_t> evictedLine;
  std::uint32_t line = 0;
  std::uint32_t set = 0;
};

class CacheState {
public:
  explicit CacheState(const CacheConfig &cfg);

  AccessResult access(Address addr);

  const CacheConfig &config() const { return Cfg; }
  /// Resident line numbers of one set, most recent first.
  const std::vector<std::uint32_t> &set(std::uint32_t index) const {
    return Sets.at(index);
  }
  std::size_t residentLines() const;
  bool contains(Address addr) const;

  bool operator==(const CacheState &) const = default;

private:
  CacheConfig Cfg;
  std::vector<std::vector<std::uint32_t>> Sets;
};

struct LeakWitness {
  LeakPair pair;
  /// The observable whose two values differ under the pair.
  ExprRef observable;
};

struct LeakVerdict {
  Status status = Status::Unsat; // Sat: leaks, Unsat: no leak, Unknown
  std::optional<LeakWitness> witness;
  std::string reason;

  bool leaks() const { return status == Status::Sat; }
};

/// The expression the adversary observes for an access at `addr`.
ExprRef observableOf(const ExprRef &addr, const CacheConfig &cfg);

/// Searches for two secret assignments, equal on public inputs and feasible
/// under `pathCondition`, that touch different lines (or sets).
LeakVerdict leakCheck(const ExprRef &addr,
                      const std::vector<ExprRef> &pathCondition,
                      const CacheConfig &cfg, Oracle &oracle,
                      unsigned bitBudget = kDefaultBitBudget);

} // namespace predspec

#endif
