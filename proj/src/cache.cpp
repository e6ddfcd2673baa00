//===-- cache.cpp - Cache model ---------------------------------------------===//

#include "predspec/cache.h"

#include <algorithm>
#include <bit>
#include <cassert>
#include <stdexcept>

namespace predspec {

void CacheConfig::validate() const {
  if (lineSize == 0 || !std::has_single_bit(lineSize))
    throw std::invalid_argument("cache line size must be a power of two");
  if (sets == 0 || !std::has_single_bit(sets))
    throw std::invalid_argument("cache sets must be a power of two");
  if (ways == 0)
    throw std::invalid_argument("cache needs at least one way");
}

CacheState::CacheState(const CacheConfig &cfg) : Cfg(cfg), Sets(cfg.sets) {
  cfg.validate();
}

AccessResult CacheState::access(Address addr) {
  AccessResult r;
  r.line = addr / Cfg.lineSize;
  r.set = r.line & (Cfg.sets - 1);
  auto &set = Sets[r.set];
  auto it = std::find(set.begin(), set.end(), r.line);
  if (it != set.end()) {
    r.hit = true;
    std::rotate(set.begin(), it, it + 1);
    return r;
  }
  if (set.size() == Cfg.ways) {
    r.evictedLine = set.back();
    set.pop_back();
  }
  set.insert(set.begin(), r.line);
  return r;
}

std::size_t CacheState::residentLines() const {
  std::size_t n = 0;
  for (const auto &s : Sets)
    n += s.size();
  return n;
}

bool CacheState::contains(Address addr) const {
  const std::uint32_t line = addr / Cfg.lineSize;
  const auto &set = Sets[line & (Cfg.sets - 1)];
  return std::find(set.begin(), set.end(), line) != set.end();
}

ExprRef observableOf(const ExprRef &addr, const CacheConfig &cfg) {
  const auto shift = static_cast<std::uint32_t>(std::countr_zero(cfg.lineSize));
  ExprRef line = mkBinOp(BinOpKind::Lshr, addr, mkConst(shift, 32));
  if (cfg.granularity == Granularity::Set)
    line = mkBinOp(BinOpKind::And, line, mkConst(cfg.sets - 1, 32));
  return line;
}

LeakVerdict leakCheck(const ExprRef &addr,
                      const std::vector<ExprRef> &pathCondition,
                      const CacheConfig &cfg, Oracle &oracle,
                      unsigned bitBudget) {
  LeakVerdict v;
  ExprRef observable = observableOf(addr, cfg);
  if (observable->isConst()) {
    v.status = Status::Unsat;
    return v;
  }
  Query q{pathCondition, bitBudget};
  LeakResult r = oracle.findLeakPair(q, observable);
  v.status = r.status;
  v.reason = r.reason;
  if (r.pair) {
    assert(eval(observable, r.pair->first) != eval(observable, r.pair->second));
    v.witness = LeakWitness{std::move(*r.pair), observable};
  }
  return v;
}

} // namespace predspec
