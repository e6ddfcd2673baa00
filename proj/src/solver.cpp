//===-- solver.cpp - Brute-force enumeration oracle -----------------------===//
//
// Expressions are flattened once per query into a topologically ordered
// node array and re-evaluated for every assignment.
//
//===----------------------------------------------------------------------===//

#include "predspec/solver.h"

#include <fmt/format.h>

#include <cassert>
#include <unordered_map>

namespace predspec {

namespace {

struct CompiledMemory {
  /// Newest first: (address node, value node).
  std::vector<std::pair<int, int>> writes;
  const MemoryImage *image = nullptr;
  /// For each image slot with symbolic bytes, the input index per byte.
  std::vector<std::vector<int>> slotVars;
};

struct Node {
  ExprKind kind;
  int op = 0;
  unsigned width = 0;
  unsigned kidWidth = 0;
  int a = -1, b = -1, c = -1;
  std::uint32_t value = 0; // Const value, Sym input index, MemRead memory
};

class Compiled {
public:
  explicit Compiled(const std::map<std::string, SymInfo> &syms) {
    for (const auto &[name, info] : syms) {
      VarIndex.emplace(name, static_cast<int>(Names.size()));
      Names.push_back(name);
      Widths.push_back(info.width);
      Secret.push_back(info.secret);
    }
  }

  int add(const ExprRef &e) {
    if (auto it = Seen.find(e.get()); it != Seen.end())
      return it->second;
    Node n{e->kind()};
    n.width = e->width();
    switch (e->kind()) {
    case ExprKind::Const:
      n.value = e->value();
      break;
    case ExprKind::Sym:
      n.value = static_cast<std::uint32_t>(VarIndex.at(e->name()));
      break;
    case ExprKind::UnOp:
      n.op = static_cast<int>(e->unop());
      n.a = add(e->kids()[0]);
      n.kidWidth = e->kids()[0]->width();
      break;
    case ExprKind::BinOp:
      n.op = static_cast<int>(e->binop());
      n.a = add(e->kids()[0]);
      n.b = add(e->kids()[1]);
      n.kidWidth = e->kids()[0]->width();
      break;
    case ExprKind::Ite:
      n.a = add(e->kids()[0]);
      n.b = add(e->kids()[1]);
      n.c = add(e->kids()[2]);
      break;
    case ExprKind::MemRead:
      n.a = add(e->kids()[0]);
      n.value = static_cast<std::uint32_t>(addMemory(e->memory()));
      break;
    }
    Nodes.push_back(n);
    int idx = static_cast<int>(Nodes.size()) - 1;
    Seen.emplace(e.get(), idx);
    return idx;
  }

  std::size_t numVars() const { return Names.size(); }
  unsigned varWidth(std::size_t i) const { return Widths[i]; }
  bool varSecret(std::size_t i) const { return Secret[i]; }

  void run(const std::vector<std::uint32_t> &vars,
           std::vector<std::uint32_t> &vals) const {
    vals.resize(Nodes.size());
    for (std::size_t i = 0; i < Nodes.size(); ++i) {
      const Node &n = Nodes[i];
      switch (n.kind) {
      case ExprKind::Const:
        vals[i] = n.value;
        break;
      case ExprKind::Sym:
        vals[i] = vars[n.value];
        break;
      case ExprKind::UnOp:
        vals[i] = applyUnOp(static_cast<UnOpKind>(n.op), vals[n.a], n.kidWidth,
                            n.width);
        break;
      case ExprKind::BinOp:
        vals[i] = applyBinOp(static_cast<BinOpKind>(n.op), vals[n.a],
                             vals[n.b], n.kidWidth);
        break;
      case ExprKind::Ite:
        vals[i] = vals[n.a] ? vals[n.b] : vals[n.c];
        break;
      case ExprKind::MemRead:
        vals[i] = read(Memories[n.value], vals[n.a], n.width, vars, vals);
        break;
      }
    }
  }

  Model model(const std::vector<std::uint32_t> &vars) const {
    Model m;
    for (std::size_t i = 0; i < Names.size(); ++i)
      m.emplace(Names[i], vars[i]);
    return m;
  }

private:
  int addMemory(const Memory &mem) {
    CompiledMemory cm;
    cm.image = &mem.image();
    for (auto w = mem.head(); w; w = w->prev)
      cm.writes.push_back({add(w->addr), add(w->value)});
    for (const auto &slot : mem.image().slots()) {
      std::vector<int> vars;
      for (std::uint32_t i = 0; i < slot.symbols.size(); ++i)
        vars.push_back(VarIndex.at(fmt::format("{}[{}]", slot.name, i)));
      cm.slotVars.push_back(std::move(vars));
    }
    Memories.push_back(std::move(cm));
    return static_cast<int>(Memories.size()) - 1;
  }

  static std::uint32_t read(const CompiledMemory &cm, std::uint32_t addr,
                            unsigned width,
                            const std::vector<std::uint32_t> &vars,
                            const std::vector<std::uint32_t> &vals) {
    std::uint32_t result = 0;
    for (unsigned k = 0; k < width / 8; ++k) {
      const std::uint32_t a = addr + k;
      std::uint32_t byte = 0;
      bool found = false;
      for (const auto &[wa, wv] : cm.writes) {
        if (vals[wa] == a) {
          byte = vals[wv];
          found = true;
          break;
        }
      }
      if (!found) {
        const auto &slots = cm.image->slots();
        for (std::size_t s = 0; s < slots.size(); ++s) {
          const auto &slot = slots[s];
          if (a < slot.base || std::uint64_t(a) >= std::uint64_t(slot.base) + slot.size)
            continue;
          const std::uint32_t off = a - slot.base;
          if (!cm.slotVars[s].empty())
            byte = vars[cm.slotVars[s][off]];
          else if (off < slot.init.size())
            byte = slot.init[off];
          break;
        }
      }
      result |= (byte & 0xFF) << (8 * k);
    }
    return result & widthMask(width);
  }

  std::vector<Node> Nodes;
  std::vector<CompiledMemory> Memories;
  std::unordered_map<const Expr *, int> Seen;
  std::unordered_map<std::string, int> VarIndex;
  std::vector<std::string> Names;
  std::vector<unsigned> Widths;
  std::vector<bool> Secret;
};

/// Advances the assignment over `indices` as a mixed-radix counter whose last
/// position varies fastest. Returns false after the final assignment.
bool advance(std::vector<std::uint32_t> &vars, const std::vector<int> &indices,
             const Compiled &c) {
  for (std::size_t k = indices.size(); k-- > 0;) {
    const int i = indices[k];
    if (vars[i] < widthMask(c.varWidth(i))) {
      ++vars[i];
      return true;
    }
    vars[i] = 0;
  }
  return false;
}

unsigned totalBits(const std::map<std::string, SymInfo> &syms) {
  unsigned bits = 0;
  for (const auto &[_, info] : syms)
    bits += info.width;
  return bits;
}

} // namespace

SatResult EnumerationOracle::isSat(const Query &q) {
  ++Queries;
  std::map<std::string, SymInfo> syms;
  for (const auto &c : q.constraints)
    collectSymbols(c, syms);
  const unsigned bits = totalBits(syms);
  if (bits > q.bitBudget) {
    return {Status::Unknown, {},
            fmt::format("query needs {} input bits, budget is {}", bits,
                        q.bitBudget)};
  }

  Compiled c(syms);
  std::vector<int> roots;
  for (const auto &e : q.constraints)
    roots.push_back(c.add(e));
  std::vector<int> all;
  for (std::size_t i = 0; i < c.numVars(); ++i)
    all.push_back(static_cast<int>(i));

  std::vector<std::uint32_t> vars(c.numVars(), 0), vals;
  do {
    ++Evaluations;
    c.run(vars, vals);
    bool ok = true;
    for (int r : roots)
      if (!vals[r]) {
        ok = false;
        break;
      }
    if (ok)
      return {Status::Sat, c.model(vars), {}};
  } while (advance(vars, all, c));
  return {Status::Unsat, {}, {}};
}

LeakResult EnumerationOracle::findLeakPair(const Query &q,
                                           const ExprRef &observable) {
  ++Queries;
  std::map<std::string, SymInfo> syms;
  for (const auto &c : q.constraints)
    collectSymbols(c, syms);
  collectSymbols(observable, syms);
  const unsigned bits = totalBits(syms);
  if (bits > q.bitBudget) {
    return {Status::Unknown, std::nullopt,
            fmt::format("query needs {} input bits, budget is {}", bits,
                        q.bitBudget)};
  }

  Compiled c(syms);
  std::vector<int> roots;
  for (const auto &e : q.constraints)
    roots.push_back(c.add(e));
  const int obs = c.add(observable);

  std::vector<int> publicVars, secretVars;
  for (std::size_t i = 0; i < c.numVars(); ++i)
    (c.varSecret(i) ? secretVars : publicVars).push_back(static_cast<int>(i));
  if (secretVars.empty())
    return {Status::Unsat, std::nullopt, {}};

  std::vector<std::uint32_t> vars(c.numVars(), 0), vals;
  do {
    for (int i : secretVars)
      vars[i] = 0;
    std::optional<std::pair<std::vector<std::uint32_t>, std::uint32_t>> first;
    do {
      ++Evaluations;
      c.run(vars, vals);
      bool ok = true;
      for (int r : roots)
        if (!vals[r]) {
          ok = false;
          break;
        }
      if (!ok)
        continue;
      if (!first) {
        first.emplace(vars, vals[obs]);
      } else if (first->second != vals[obs]) {
        LeakPair pair{c.model(first->first), c.model(vars), first->second,
                      vals[obs]};
        assert(pair.observedFirst != pair.observedSecond);
        return {Status::Sat, std::move(pair), {}};
      }
    } while (advance(vars, secretVars, c));
  } while (advance(vars, publicVars, c));
  return {Status::Unsat, std::nullopt, {}};
}

} // namespace predspec
