//===-- monitor.cpp - Pattern monitor ---------------------------------------===//

#include "predspec/monitor.h"

#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cassert>
#include <set>

namespace predspec {

using nlohmann::json;

namespace {

[[noreturn]] void schemaError(const std::string &path, const std::string &msg) {
  throw PatternError(fmt::format("{}: {}", path, msg));
}

bool readBool(const json &j, const std::string &path) {
  if (!j.is_boolean())
    schemaError(path, "expected a boolean");
  return j.get<bool>();
}

} // namespace

MonitorSpec loadPattern(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    throw PatternError(fmt::format("invalid JSON: {}", e.what()));
  }
  if (!root.is_object())
    schemaError("$", "expected an object");
  for (const auto &[key, _] : root.items())
    if (key != "name" && key != "nodes")
      schemaError("$." + key, "unknown field");

  MonitorSpec spec;
  if (!root.contains("name") || !root["name"].is_string())
    schemaError("$.name", "expected a string");
  spec.name = root["name"].get<std::string>();
  if (!root.contains("nodes") || !root["nodes"].is_array())
    schemaError("$.nodes", "expected an array");
  if (root["nodes"].empty())
    schemaError("$.nodes", "pattern needs at least one node");

  std::size_t i = 0;
  for (const auto &jn : root["nodes"]) {
    const std::string base = fmt::format("$.nodes[{}]", i++);
    if (!jn.is_object())
      schemaError(base, "expected an object");
    NodeProps np;
    for (const auto &[key, val] : jn.items()) {
      const std::string path = base + "." + key;
      if (key == "instruction") {
        if (!val.is_string())
          schemaError(path, "expected a string");
        auto op = opcodeFromName(val.get<std::string>());
        if (!op)
          schemaError(path, fmt::format("unknown instruction '{}'",
                                        val.get<std::string>()));
        np.instruction = op;
      } else if (key == "isSpeculative") {
        np.isSpeculative = readBool(val, path);
      } else if (key == "isConst") {
        np.isConst = readBool(val, path);
      } else if (key == "isSensitive") {
        np.isSensitive = readBool(val, path);
      } else if (key == "checkCacheState") {
        np.checkCacheState = readBool(val, path);
      } else if (key == "startTTL") {
        if (!val.is_number_integer() || val.get<long long>() <= 0 ||
            val.get<long long>() > 1'000'000)
          schemaError(path, "expected a positive integer");
        np.startTTL = static_cast<int>(val.get<long long>());
      } else if (key == "stopTTL") {
        np.stopTTL = readBool(val, path);
      } else {
        schemaError(path, "unknown field");
      }
    }
    if (np.empty())
      schemaError(base, "node has no properties");
    if (np.startTTL && np.stopTTL.value_or(false))
      schemaError(base, "startTTL and stopTTL on the same node");
    spec.nodes.push_back(np);
  }
  return spec;
}

std::string patternToJson(const MonitorSpec &spec) {
  json root;
  root["name"] = spec.name;
  root["nodes"] = json::array();
  for (const auto &np : spec.nodes) {
    json n = json::object();
    if (np.instruction)
      n["instruction"] = std::string(opcodeName(*np.instruction));
    if (np.isSpeculative)
      n["isSpeculative"] = *np.isSpeculative;
    if (np.isConst)
      n["isConst"] = *np.isConst;
    if (np.isSensitive)
      n["isSensitive"] = *np.isSensitive;
    if (np.checkCacheState)
      n["checkCacheState"] = *np.checkCacheState;
    if (np.startTTL)
      n["startTTL"] = *np.startTTL;
    if (np.stopTTL)
      n["stopTTL"] = *np.stopTTL;
    root["nodes"].push_back(n);
  }
  return root.dump(2);
}

bool satisfies(const NodeProps &np, const Event &e, const CacheObservation &c) {
  if (np.instruction && *np.instruction != e.name)
    return false;
  if (np.isSpeculative && *np.isSpeculative != e.speculative)
    return false;
  if (np.isConst && *np.isConst != !e.symbolicAccess)
    return false;
  if (np.isSensitive && *np.isSensitive != e.secretAccess)
    return false;
  // Cheapest checks first; the cache verdict may need the solver.
  if (np.checkCacheState && *np.checkCacheState != c.leaks())
    return false;
  return true;
}

MonitorInstance::MonitorInstance(std::shared_ptr<const MonitorSpec> spec)
    : Spec(std::move(spec)) {
  assert(Spec && !Spec->nodes.empty());
  Live.resize(Spec->nodes.size() + 1);
  Token start;
  start.id = 0;
  start.pid = 0;
  start.ttl = -1;
  start.node = 0;
  Tokens.push_back(start);
  Live[0].push_back(0);
}

ObserveResult MonitorInstance::observe(const Event &e,
                                       const CacheObservation &c) {
  ObserveResult result;
  const std::size_t n = Spec->nodes.size();
  const std::size_t eventIndex = Events++;
  std::set<std::uint64_t> created;

  for (std::size_t i = n; i-- > 0;) {
    if (Live[i].empty())
      continue;
    const NodeProps &np = Spec->nodes[i];
    if (!satisfies(np, e, c))
      continue;
    const Token &src = Tokens[Live[i].back()];
    Token t;
    t.id = Tokens.size();
    t.pid = src.id;
    t.pc = e.pc;
    t.op = e.name;
    t.speculative = e.speculative;
    t.eventIndex = eventIndex;
    t.ttl = src.ttl;
    if (np.startTTL)
      t.ttl = *np.startTTL;
    if (np.stopTTL.value_or(false))
      t.ttl = -1;
    t.node = i + 1;
    Tokens.push_back(t);
    Live[i + 1].push_back(t.id);
    created.insert(t.id);
    ++result.transitions;
    if (i + 1 == n)
      result.match = Match{chainOf(t.id), eventIndex};
  }

  for (std::size_t node = 1; node <= n; ++node) {
    auto &ids = Live[node];
    std::erase_if(ids, [&](std::uint64_t id) {
      Token &t = Tokens[id];
      if (created.count(id) || t.ttl < 0)
        return false;
      if (t.ttl > 0)
        --t.ttl;
      return t.ttl == 0;
    });
  }
  return result;
}

std::vector<Token> MonitorInstance::chainOf(std::uint64_t id) const {
  std::vector<Token> chain;
  for (std::uint64_t cur = id; cur != 0; cur = Tokens[cur].pid)
    chain.push_back(Tokens[cur]);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::string_view verdictName(Verdict v) {
  switch (v) {
  case Verdict::LeakageFree: return "leakage-free";
  case Verdict::Leaking: return "leaking";
  case Verdict::Unknown: return "unknown";
  }
  return "?";
}

} // namespace predspec
