//===-- predictor.cpp - Two-level predictor, BTB and presets --------------===//

#include "predspec/predictor.h"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cassert>

namespace predspec {

void PredictorConfig::validate() const {
  if (!twoLevel && !btb && fallback == StaticFallback::None)
    throw ConfigError("predictor needs a two-level table, a BTB or a static "
                      "fallback");
  if (twoLevel && (twoLevel->historyBits == 0 || twoLevel->historyBits > 16))
    throw ConfigError("history bits must be in 1..16");
  if (btb) {
    if (btb->sets == 0 || !std::has_single_bit(btb->sets))
      throw ConfigError("BTB sets must be a power of two");
    if (btb->ways == 0)
      throw ConfigError("BTB needs at least one way");
    if (btb->tagBits > 31)
      throw ConfigError("BTB tag bits must be below 32");
  }
  if (initCounter > 3)
    throw ConfigError("initial counter must be in 0..3");
}

std::string PredictorConfig::describe() const {
  std::vector<std::string> parts;
  if (presetName)
    parts.push_back(*presetName);
  parts.push_back(fmt::format("w={}", window));
  if (twoLevel)
    parts.push_back(fmt::format("PHT:{}-{}", twoLevel->historyBits,
                                1u << twoLevel->historyBits));
  if (btb)
    parts.push_back(fmt::format("BTB:{}x{}t{}", btb->sets, btb->ways,
                                btb->tagBits));
  if (fallback == StaticFallback::Btfnt)
    parts.push_back("btfnt");
  if (initCounter != 2)
    parts.push_back(fmt::format("init={}", initCounter));
  return fmt::format("{}", fmt::join(parts, ","));
}

PredictorConfig preset(const std::string &name) {
  PredictorConfig cfg;
  cfg.presetName = name;
  if (name == "cortex-a53") {
    cfg.window = 32;
    cfg.twoLevel = TwoLevelParams{12};
    cfg.btb = BtbParams{256, 1, 4};
  } else if (name == "cortex-a7") {
    cfg.window = 16;
    cfg.twoLevel = TwoLevelParams{8};
    cfg.btb = BtbParams{8, 1, 4};
  } else if (name == "pentium4") {
    cfg.window = 40;
    cfg.btb = BtbParams{4096, 1, 4};
    cfg.fallback = StaticFallback::Btfnt;
  } else {
    throw ConfigError(fmt::format("unknown preset '{}'", name));
  }
  return cfg;
}

//===----------------------------------------------------------------------===//

TwoLevel::TwoLevel(unsigned historyBits, std::uint8_t initCounter)
    : Bits(historyBits), Pht(std::size_t(1) << historyBits, initCounter) {
  assert(historyBits > 0 && historyBits <= 16 && initCounter <= 3);
}

void TwoLevel::resolve(bool taken) {
  auto &c = Pht[Bhr];
  if (taken && c < 3)
    ++c;
  else if (!taken && c > 0)
    --c;
  shiftHistory(taken);
}

void TwoLevel::shiftHistory(bool taken) {
  Bhr = ((Bhr << 1) | (taken ? 1u : 0u)) & mask();
}

void TwoLevel::setCounter(std::uint32_t index, std::uint8_t v) {
  assert(v <= 3);
  Pht.at(index) = v;
}

//===----------------------------------------------------------------------===//

Btb::Btb(BtbParams params)
    : Params(params),
      SetBits(static_cast<unsigned>(std::countr_zero(params.sets))),
      Sets(params.sets) {}

std::uint32_t Btb::setIndex(Pc pc) const { return pc & (Params.sets - 1); }

std::uint32_t Btb::tagOf(Pc pc) const {
  if (Params.tagBits == 0)
    return 0;
  const std::uint32_t shifted = SetBits >= 32 ? 0 : pc >> SetBits;
  return shifted & ((1u << Params.tagBits) - 1u);
}

std::optional<Pc> Btb::lookup(Pc pc) const {
  const auto &set = Sets[setIndex(pc)];
  const std::uint32_t tag = tagOf(pc);
  for (const auto &e : set)
    if (e.tag == tag)
      return e.target;
  return std::nullopt;
}

std::optional<Pc> Btb::touch(Pc pc) {
  auto &set = Sets[setIndex(pc)];
  const std::uint32_t tag = tagOf(pc);
  auto it = std::find_if(set.begin(), set.end(),
                         [&](const Entry &e) { return e.tag == tag; });
  if (it == set.end())
    return std::nullopt;
  std::rotate(set.begin(), it, it + 1);
  return set.front().target;
}

void Btb::install(Pc pc, Pc target) {
  auto &set = Sets[setIndex(pc)];
  const std::uint32_t tag = tagOf(pc);
  auto it = std::find_if(set.begin(), set.end(),
                         [&](const Entry &e) { return e.tag == tag; });
  if (it != set.end()) {
    it->target = target;
    std::rotate(set.begin(), it, it + 1);
    return;
  }
  if (set.size() == Params.ways)
    set.pop_back();
  set.insert(set.begin(), Entry{tag, target});
}

//===----------------------------------------------------------------------===//

PredictorState::PredictorState(const PredictorConfig &cfg) : Cfg(cfg) {
  cfg.validate();
  if (cfg.twoLevel)
    Direction.emplace(cfg.twoLevel->historyBits, cfg.initCounter);
  if (cfg.btb)
    Targets.emplace(*cfg.btb);
}

bool PredictorState::predictDirection(Pc pc, Pc takenTarget) const {
  if (Direction)
    return Direction->predictTaken();
  if (Targets && Targets->lookup(pc))
    return true;
  if (Cfg.fallback == StaticFallback::Btfnt)
    return takenTarget < pc;
  return false;
}

std::optional<Pc> PredictorState::predictTarget(Pc pc) const {
  if (!Targets)
    return std::nullopt;
  return Targets->lookup(pc);
}

Prediction PredictorState::predictBranch(Pc pc, Pc takenTarget,
                                         Pc notTakenTarget) const {
  Prediction p;
  p.taken = predictDirection(pc, takenTarget);
  if (!p.taken) {
    p.next = notTakenTarget;
    return p;
  }
  // A BTB hit supplies the target; conditionals otherwise fall back to their
  // statically known taken edge.
  p.next = predictTarget(pc).value_or(takenTarget);
  return p;
}

void PredictorState::update(Pc pc, bool taken, Pc actualTarget) {
  if (Direction)
    Direction->resolve(taken);
  if (Targets && taken)
    Targets->install(pc, actualTarget);
}

void PredictorState::updateIndirect(Pc pc, Pc actualTarget) {
  if (Targets)
    Targets->install(pc, actualTarget);
}

void PredictorState::speculate(bool predictedTaken) {
  if (Direction)
    Direction->shiftHistory(predictedTaken);
}

std::string PredictorState::serialize() const {
  std::string out = Cfg.describe();
  if (Direction) {
    out += fmt::format("|bhr={}|pht=", Direction->bhr());
    for (std::size_t i = 0; i < Direction->phtSize(); ++i)
      out += static_cast<char>('0' + Direction->counter(static_cast<std::uint32_t>(i)));
  }
  if (Targets) {
    out += "|btb=";
    for (std::uint32_t s = 0; s < Targets->params().sets; ++s) {
      const auto &set = Targets->set(s);
      if (set.empty())
        continue;
      out += fmt::format("{}:", s);
      for (const auto &e : set)
        out += fmt::format("({},{})", e.tag, e.target);
    }
  }
  return out;
}

} // namespace predspec
