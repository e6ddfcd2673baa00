//===-- solver.h - Satisfiability and leak-pair oracles ---------*- C++ -*-===//
//
// Queries are decided by exhaustive enumeration of every input the
// constraints can observe. Enumeration order is lexicographic over the
// assignment tuple, inputs sorted by name, values ascending. Queries over more
// than `bitBudget` input bits are refused (Status::Unknown), never truncated.
//
//===----------------------------------------------------------------------===//

#ifndef PREDSPEC_SOLVER_H
#define PREDSPEC_SOLVER_H

#include "predspec/expr.h"

#include <optional>
#include <string>
#include <vector>

namespace predspec {

inline constexpr unsigned kDefaultBitBudget = 20;

struct Query {
  /// Each constraint is truthy iff nonzero.
  std::vector<ExprRef> constraints;
  unsigned bitBudget = kDefaultBitBudget;
};

enum class Status { Sat, Unsat, Unknown };

struct SatResult {
  Status status = Status::Unknown;
  Model model;
  std::string reason;

  bool sat() const { return status == Status::Sat; }
};

struct LeakPair {
  Model first;
  Model second;
  std::uint32_t observedFirst = 0;
  std::uint32_t observedSecond = 0;
};

struct LeakResult {
  Status status = Status::Unknown; // Sat: pair found, Unsat: none exists
  std::optional<LeakPair> pair;
  std::string reason;
};

class Oracle {
public:
  virtual ~Oracle() = default;
  virtual SatResult isSat(const Query &q) = 0;
  /// Two models of `q` that agree on every non-secret input and disagree on
  /// `observable`.
  virtual LeakResult findLeakPair(const Query &q, const ExprRef &observable) = 0;
};

class EnumerationOracle final : public Oracle {
public:
  SatResult isSat(const Query &q) override;
  LeakResult findLeakPair(const Query &q, const ExprRef &observable) override;

  std::size_t queries() const { return Queries; }
  std::size_t evaluations() const { return Evaluations; }

private:
  std::size_t Queries = 0;
  std::size_t Evaluations = 0;
};

} // namespace predspec

#endif
