//===-- predictor.h - Branch prediction logic -------------------*- C++ -*-===//
//
// A global-history two-level direction predictor (n-bit BHR indexing a 2^n
// entry PHT of 2-bit saturating counters), a set-associative tagged BTB with
// LRU replacement, and a static BTFNT fallback. PCs are instruction indices.
//
//===----------------------------------------------------------------------===//

#ifndef PREDSPEC_PREDICTOR_H
#define PREDSPEC_PREDICTOR_H

#include "predspec/sir.h"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace predspec {

enum class StaticFallback { None, Btfnt };

struct TwoLevelParams {
  unsigned historyBits = 1;
  bool operator==(const TwoLevelParams &) const = default;
};

struct BtbParams {
  std::uint32_t sets = 1;
  std::uint32_t ways = 1;
  unsigned tagBits = 4;
  bool operator==(const BtbParams &) const = default;
};

struct PredictorConfig {
  std::optional<TwoLevelParams> twoLevel;
  std::optional<BtbParams> btb;
  /// Speculation window in SIR instructions.
  unsigned window = 16;
  StaticFallback fallback = StaticFallback::None;
  std::uint8_t initCounter = 2;
  std::optional<std::string> presetName;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
  std::string describe() const;
  bool operator==(const PredictorConfig &) const = default;
};

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Real-processor presets: cortex-a53, cortex-a7, pentium4.
PredictorConfig preset(const std::string &name);

class TwoLevel {
public:
  TwoLevel(unsigned historyBits, std::uint8_t initCounter);

  bool predictTaken() const { return Pht[Bhr] >= 2; }
  /// Counter update at the current history, then shift in the outcome.
  void resolve(bool taken);
  /// Shift only; used for speculative history.
  void shiftHistory(bool taken);

  unsigned historyBits() const { return Bits; }
  std::uint32_t bhr() const { return Bhr; }
  std::uint8_t counter(std::uint32_t index) const { return Pht.at(index); }
  void setBhr(std::uint32_t v) { Bhr = v & mask(); }
  void setCounter(std::uint32_t index, std::uint8_t v);
  std::size_t phtSize() const { return Pht.size(); }

  bool operator==(const TwoLevel &) const = default;

private:
  std::uint32_t mask() const { return (1u << Bits) - 1u; }

  unsigned Bits;
  std::uint32_t Bhr = 0;
  std::vector<std::uint8_t> Pht;
};

class Btb {
public:
  struct Entry {
    std::uint32_t tag = 0;
    Pc target = 0;
    bool operator==(const Entry &) const = default;
  };

  explicit Btb(BtbParams params);

  std::uint32_t setIndex(Pc pc) const;
  std::uint32_t tagOf(Pc pc) const;

  std::optional<Pc> lookup(Pc pc) const;
  /// Install or refresh; the hit or new entry becomes most recent.
  void install(Pc pc, Pc target);
  /// Lookup that refreshes recency on hit.
  std::optional<Pc> touch(Pc pc);

  const BtbParams &params() const { return Params; }
  /// Entries of one set, most recently used first.
  const std::vector<Entry> &set(std::uint32_t index) const {
    return Sets.at(index);
  }

  bool operator==(const Btb &) const = default;

private:
  BtbParams Params;
  unsigned SetBits = 0;
  std::vector<std::vector<Entry>> Sets;
};

struct Prediction {
  bool taken = false;
  /// Where execution continues under the prediction; none means stall.
  std::optional<Pc> next;
};

/// Composite predictor state owned by one execution path.
class PredictorState {
public:
  explicit PredictorState(const PredictorConfig &cfg);

  /// Direction for a conditional branch at `pc` whose taken edge goes to
  /// `takenTarget` and whose fall-through goes to `notTakenTarget`.
  Prediction predictBranch(Pc pc, Pc takenTarget, Pc notTakenTarget) const;
  bool predictDirection(Pc pc, Pc takenTarget) const;
  std::optional<Pc> predictTarget(Pc pc) const;

  /// Non-speculative resolution of a conditional branch or indirect call.
  void update(Pc pc, bool taken, Pc actualTarget);
  void updateIndirect(Pc pc, Pc actualTarget);

  /// Copy whose history follows predicted outcomes while tables stay frozen.
  PredictorState shadow() const { return *this; }
  /// Speculative history update; tables are not touched.
  void speculate(bool predictedTaken);

  const PredictorConfig &config() const { return Cfg; }
  const std::optional<TwoLevel> &twoLevel() const { return Direction; }
  const std::optional<Btb> &btb() const { return Targets; }
  std::optional<TwoLevel> &twoLevel() { return Direction; }
  std::optional<Btb> &btb() { return Targets; }

  std::string serialize() const;
  bool operator==(const PredictorState &) const = default;

private:
  PredictorConfig Cfg;
  std::optional<TwoLevel> Direction;
  std::optional<Btb> Targets;
};

} // namespace predspec

#endif
