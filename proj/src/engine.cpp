//===-- engine.cpp - Prediction-aware symbolic executor --------------------===//

#include "predspec/engine.h"

#include <fmt/format.h>

#include <algorithm>
#include <cassert>

namespace predspec {

std::string_view modeName(ExploreMode m) {
  return m == ExploreMode::PredictionAware ? "prediction-aware" : "baseline";
}

std::vector<const LoggedEvent *> flattenLog(const EventLog &tail) {
  std::vector<const LoggedEvent *> out;
  for (auto n = tail; n; n = n->prev)
    out.push_back(&n->entry);
  std::reverse(out.begin(), out.end());
  return out;
}

std::pair<std::string, std::vector<Pc>> Finding::key() const {
  std::vector<Pc> pcs;
  for (const auto &l : chain)
    pcs.push_back(l.pc);
  return {pattern, pcs};
}

Verdict ExploreResult::verdict() const {
  bool unknown = !stats.unknowns.empty();
  for (const auto &f : findings) {
    if (f.kind == FindingKind::Leak)
      return Verdict::Leaking;
    unknown = true;
  }
  return unknown ? Verdict::Unknown : Verdict::LeakageFree;
}

namespace {

/// Solver state shared with lazily evaluated leak verdicts, which may outlive
/// the exploration.
struct SolverContext {
  EnumerationOracle oracle;
  unsigned budget = kDefaultBitBudget;
  std::set<std::string> unknowns;
};

struct SpecContext {
  unsigned remaining = 0;
  PredictorState shadow;
  std::vector<std::pair<ExprRef, ExprRef>> storeBuffer;
};

struct ExecState {
  Pc pc = 0;
  std::map<std::string, ExprRef> regs;
  Memory mem;
  PathCondition pathCond;
  PredictorState pred;
  CacheState cache;
  std::vector<MonitorInstance> monitors;
  std::vector<Pc> retStack;
  std::string decisions;
  std::size_t archSteps = 0;
  EventLog log;
  std::optional<SpecContext> spec;
};

/// Architectural state compared across a speculative trace.
struct Fingerprint {
  Pc pc = 0;
  std::map<std::string, const Expr *> regs;
  const MemWrite *memHeadPtr = nullptr;
  std::vector<Pc> retStack;
  std::string predictor;
  const void *pathCond = nullptr;
  std::string decisions;
  std::size_t archSteps = 0;

  bool operator==(const Fingerprint &o) const {
    return pc == o.pc && regs == o.regs && memHeadPtr == o.memHeadPtr &&
           retStack == o.retStack && predictor == o.predictor &&
           pathCond == o.pathCond && decisions == o.decisions &&
           archSteps == o.archSteps;
  }
};

Fingerprint fingerprint(const ExecState &s) {
  Fingerprint f;
  f.pc = s.pc;
  for (const auto &[k, v] : s.regs)
    f.regs[k] = v.get();
  f.memHeadPtr = s.mem.head().get();
  f.retStack = s.retStack;
  f.predictor = s.pred.serialize();
  f.pathCond = s.pathCond.get();
  f.decisions = s.decisions;
  f.archSteps = s.archSteps;
  return f;
}

Event makeEvent(Opcode op, Pc pc, bool speculative = false) {
  Event e;
  e.name = op;
  e.pc = pc;
  e.speculative = speculative;
  return e;
}

ExprRef coerce(const ExprRef &e, unsigned w) {
  if (e->width() < w)
    return mkZExt(e, w);
  if (e->width() > w)
    return mkTrunc(e, w);
  return e;
}

ExprRef anyOf(std::vector<ExprRef> terms) {
  if (terms.empty())
    return mkConst(0, 32);
  ExprRef acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i)
    acc = mkBinOp(BinOpKind::Or, acc, terms[i]);
  return acc;
}

ExprRef inRange(const ExprRef &a, Address base, std::uint32_t size) {
  ExprRef lo = mkBinOp(BinOpKind::Le, mkConst(base, 32), a);
  ExprRef hi = mkBinOp(BinOpKind::Lt, a, mkConst(base + size, 32));
  return mkBinOp(BinOpKind::And, lo, hi);
}

BinOpKind binOpOf(Opcode op) {
  switch (op) {
  case Opcode::Add: return BinOpKind::Add;
  case Opcode::Sub: return BinOpKind::Sub;
  case Opcode::Mul: return BinOpKind::Mul;
  case Opcode::And: return BinOpKind::And;
  case Opcode::Or: return BinOpKind::Or;
  case Opcode::Xor: return BinOpKind::Xor;
  case Opcode::Shl: return BinOpKind::Shl;
  case Opcode::Lshr: return BinOpKind::Lshr;
  case Opcode::Lt: return BinOpKind::Lt;
  case Opcode::Le: return BinOpKind::Le;
  case Opcode::Eq: return BinOpKind::Eq;
  case Opcode::Ne: return BinOpKind::Ne;
  default: break;
  }
  assert(false && "not a binary opcode");
  return BinOpKind::Add;
}

class Explorer {
public:
  Explorer(const Program &p, const EngineConfig &cfg,
           const std::vector<MonitorSpec> &patterns)
      : P(p.laidOut() ? p : layoutRegions(p, kDefaultBase, cfg.cache.lineSize)),
        Cfg(cfg), Image(std::make_shared<MemoryImage>(P)),
        Solver(std::make_shared<SolverContext>()) {
    Cfg.predictor.validate();
    Cfg.cache.validate();
    Solver->budget = Cfg.bitBudget;
    for (const auto &spec : patterns)
      Specs.push_back(std::make_shared<const MonitorSpec>(spec));
  }

  ExploreResult run();

private:
  enum class Flow { Next, Fork, End };

  // Architectural execution.
  void runPath(ExecState s);
  Flow branch(ExecState &s, const Instruction &inst);
  Flow indirectCall(ExecState &s, const Instruction &inst);
  void finish(ExecState &s, const std::string &reason);

  // Speculative execution.
  void speculate(ExecState &s, Pc branchPc, Pc start, PredictorState shadow,
                 std::optional<Pc> pushReturn);
  bool specStep(ExecState &s, const Instruction &inst);

  /// Non-control instructions; false when an architectural path must end.
  bool execData(ExecState &s, const Instruction &inst);

  void emit(ExecState &s, Event e, const ExprRef &operand);
  void onMatch(ExecState &s, std::size_t monitorIndex, const Match &m);
  std::optional<Witness> findWitness(const Finding &f, bool &inconclusive);

  ExprRef readReg(ExecState &s, const std::string &name);
  ExprRef address(ExecState &s, const MemOperand &m);
  bool mayReadSecret(const ExecState &s, const Memory &mem, const ExprRef &addr,
                     unsigned width);
  Status check(const std::vector<ExprRef> &pc, const ExprRef &extra);
  void diag(const ExecState &s, const std::string &msg);
  void unknown(const std::string &why) { Solver->unknowns.insert(why); }

  PathCondition withConstraint(const PathCondition &pc, ExprRef c) {
    auto v = std::make_shared<std::vector<ExprRef>>(*pc);
    v->push_back(std::move(c));
    return v;
  }

  bool speculationOn() const {
    return !Cfg.disableSpeculation && Cfg.predictor.window > 0;
  }

  Program P;
  EngineConfig Cfg;
  std::shared_ptr<const MemoryImage> Image;
  std::shared_ptr<SolverContext> Solver;
  std::vector<std::shared_ptr<const MonitorSpec>> Specs;
  std::vector<ExecState> Stack;
  std::shared_ptr<const LazyLeakVerdict> NoLeak =
      std::make_shared<LazyLeakVerdict>(LeakVerdict{});

  Stats St;
  std::set<TraceId> Traces;
  std::set<std::string> Diags;
  std::map<std::pair<std::string, std::vector<Pc>>, Finding> Findings;
  std::vector<FinalState> Finals;
};

ExploreResult Explorer::run() {
  ExecState init{.pc = P.entry,
                 .regs = {},
                 .mem = Memory(Image),
                 .pathCond = std::make_shared<const std::vector<ExprRef>>(),
                 .pred = PredictorState(Cfg.predictor),
                 .cache = CacheState(Cfg.cache),
                 .monitors = {},
                 .retStack = {},
                 .decisions = {},
                 .archSteps = 0,
                 .log = nullptr,
                 .spec = std::nullopt};
  for (const auto &spec : Specs)
    init.monitors.emplace_back(spec);
  Stack.push_back(std::move(init));

  while (!Stack.empty()) {
    if (St.paths >= Cfg.pathLimit) {
      St.pathLimitHit = true;
      unknown("path limit reached");
      break;
    }
    ExecState s = std::move(Stack.back());
    Stack.pop_back();
    runPath(std::move(s));
  }

  ExploreResult r;
  St.solverQueries = Solver->oracle.queries();
  St.unknowns.insert(Solver->unknowns.begin(), Solver->unknowns.end());
  r.stats = St;
  r.traces = std::move(Traces);
  r.diagnostics.assign(Diags.begin(), Diags.end());
  for (auto &[_, f] : Findings)
    r.findings.push_back(std::move(f));
  r.finalStates = std::move(Finals);
  return r;
}

void Explorer::runPath(ExecState s) {
  for (;;) {
    if (s.pc >= P.instructions.size()) {
      diag(s, "execution ran past the last instruction");
      finish(s, "end of program");
      return;
    }
    if (s.archSteps >= Cfg.stepLimit) {
      ++St.stepLimitHits;
      unknown("step limit reached");
      finish(s, "step limit");
      return;
    }
    const Instruction &inst = P.instructions[s.pc];
    ++s.archSteps;
    ++St.archInstructions;
    Flow flow = Flow::Next;
    switch (inst.op) {
    case Opcode::Br:
      flow = branch(s, inst);
      break;
    case Opcode::Icall:
      flow = indirectCall(s, inst);
      break;
    case Opcode::Jmp:
      emit(s, makeEvent(Opcode::Jmp, s.pc), nullptr);
      s.pc = P.labelPc(std::get<NameOperand>(inst.operands[0]).name);
      break;
    case Opcode::Call:
      emit(s, makeEvent(Opcode::Call, s.pc), nullptr);
      s.retStack.push_back(s.pc + 1);
      s.pc = P.labelPc(std::get<NameOperand>(inst.operands[0]).name);
      break;
    case Opcode::Ret:
      emit(s, makeEvent(Opcode::Ret, s.pc), nullptr);
      if (s.retStack.empty()) {
        finish(s, "return from entry");
        return;
      }
      s.pc = s.retStack.back();
      s.retStack.pop_back();
      break;
    case Opcode::Halt:
      emit(s, makeEvent(Opcode::Halt, s.pc), nullptr);
      finish(s, "halt");
      return;
    default:
      if (!execData(s, inst)) {
        finish(s, "infeasible memory access");
        return;
      }
      ++s.pc;
      break;
    }
    if (flow == Flow::Fork)
      return;
    if (flow == Flow::End) {
      finish(s, "abandoned");
      return;
    }
  }
}

Status Explorer::check(const std::vector<ExprRef> &pc, const ExprRef &extra) {
  Query q{pc, Cfg.bitBudget};
  q.constraints.push_back(extra);
  SatResult r = Solver->oracle.isSat(q);
  if (r.status == Status::Unknown)
    unknown("solver budget exceeded: " + r.reason);
  return r.status;
}

Explorer::Flow Explorer::branch(ExecState &s, const Instruction &inst) {
  const Pc pc = s.pc;
  ExprRef cond = readReg(s, std::get<RegOperand>(inst.operands[0]).name);
  const Pc takenT = P.labelPc(std::get<NameOperand>(inst.operands[1]).name);
  const Pc notTakenT = P.labelPc(std::get<NameOperand>(inst.operands[2]).name);

  Event e = makeEvent(Opcode::Br, pc);
  e.symbolicAccess = cond->taint().symbolic;
  e.secretAccess = cond->taint().secret;
  emit(s, e, cond);

  ExprRef takenC = cond;
  ExprRef notTakenC = mkBinOp(BinOpKind::Eq, cond, mkConst(0, cond->width()));
  std::vector<bool> dirs;
  if (cond->isConst()) {
    dirs.push_back(cond->value() != 0);
  } else {
    // Unknown counts as feasible so no path is silently dropped.
    if (check(*s.pathCond, notTakenC) != Status::Unsat)
      dirs.push_back(false);
    if (check(*s.pathCond, takenC) != Status::Unsat)
      dirs.push_back(true);
  }
  if (dirs.empty()) {
    diag(s, "branch with no feasible direction");
    return Flow::End;
  }
  if (dirs.size() == 2)
    ++St.forks;

  const Prediction pred = s.pred.predictBranch(pc, takenT, notTakenT);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const bool d = dirs[i];
    const bool last = i + 1 == dirs.size();
    ExecState n = last ? std::move(s) : s;
    if (!cond->isConst())
      n.pathCond = withConstraint(n.pathCond, d ? takenC : notTakenC);
    n.decisions += d ? '1' : '0';
    const Pc actual = d ? takenT : notTakenT;
    ++St.branchResolutions;

    if (speculationOn()) {
      if (Cfg.mode == ExploreMode::PredictionAware) {
        const bool miss =
            pred.taken != d || (pred.next && *pred.next != actual);
        if (miss && pred.next) {
          PredictorState shadow = n.pred.shadow();
          shadow.speculate(pred.taken);
          speculate(n, pc, *pred.next, std::move(shadow), std::nullopt);
        }
      } else {
        PredictorState shadow = n.pred.shadow();
        shadow.speculate(!d);
        speculate(n, pc, d ? notTakenT : takenT, std::move(shadow),
                  std::nullopt);
      }
    }

    n.pred.update(pc, d, actual);
    ++St.predictorUpdates;
    n.pc = actual;
    Stack.push_back(std::move(n));
  }
  return Flow::Fork;
}

Explorer::Flow Explorer::indirectCall(ExecState &s, const Instruction &inst) {
  const Pc pc = s.pc;
  ExprRef target = readReg(s, std::get<RegOperand>(inst.operands[0]).name);
  Event e = makeEvent(Opcode::Icall, pc);
  e.symbolicAccess = target->taint().symbolic;
  e.secretAccess = target->taint().secret;
  emit(s, e, target);

  if (!target->isConst()) {
    Finding f;
    f.kind = FindingKind::Unknown;
    f.pattern = "";
    f.chain.push_back(ChainLink{pc, Opcode::Icall, false,
                                s.log ? s.log->index : 0});
    for (const auto &c : *s.pathCond)
      f.pathCondition.push_back(printExpr(c));
    f.config = Cfg.predictor.describe();
    f.message = "unsupported symbolic indirect target";
    f.log = s.log;
    Findings.emplace(f.key(), std::move(f));
    unknown("symbolic indirect call target");
    return Flow::End;
  }
  const Pc actual = target->value();
  if (actual >= P.instructions.size()) {
    diag(s, fmt::format("indirect call to invalid pc {}", actual));
    return Flow::End;
  }

  if (speculationOn() && Cfg.mode == ExploreMode::PredictionAware) {
    auto predicted = s.pred.predictTarget(pc);
    if (predicted && *predicted != actual)
      speculate(s, pc, *predicted, s.pred.shadow(), pc + 1);
  }
  s.pred.updateIndirect(pc, actual);
  ++St.predictorUpdates;
  ++St.branchResolutions;
  s.retStack.push_back(pc + 1);
  s.pc = actual;
  return Flow::Next;
}

void Explorer::finish(ExecState &s, const std::string &reason) {
  ++St.paths;
  if (!Cfg.recordFinalStates)
    return;
  FinalState f;
  f.decisions = s.decisions;
  for (const auto &c : *s.pathCond)
    f.pathCondition.push_back(printExpr(c));
  for (const auto &[k, v] : s.regs)
    f.registers[k] = printExpr(v);
  for (auto w = s.mem.head(); w; w = w->prev)
    f.memoryWrites.push_back(
        fmt::format("{} := {}", printExpr(w->addr), printExpr(w->value)));
  std::reverse(f.memoryWrites.begin(), f.memoryWrites.end());
  f.returnStack = s.retStack;
  f.pc = s.pc;
  f.endReason = reason;
  Finals.push_back(std::move(f));
}

void Explorer::speculate(ExecState &s, Pc branchPc, Pc start,
                         PredictorState shadow, std::optional<Pc> pushReturn) {
  Traces.insert(TraceId{s.decisions, s.archSteps, branchPc, start});
  ++St.specTraces;

  std::optional<Fingerprint> before;
  if (Cfg.checkRollback)
    before = fingerprint(s);
  const Pc savedPc = s.pc;
  const auto savedRegs = s.regs;
  const Memory savedMem = s.mem;
  const auto savedRet = s.retStack;

  s.spec = SpecContext{Cfg.predictor.window, std::move(shadow), {}};
  if (pushReturn)
    s.retStack.push_back(*pushReturn);
  s.pc = start;
  std::size_t length = 0;
  while (s.spec->remaining > 0 && s.pc < P.instructions.size()) {
    const Instruction &inst = P.instructions[s.pc];
    --s.spec->remaining;
    ++length;
    ++St.specInstructions;
    if (!specStep(s, inst))
      break;
  }
  St.maxTraceLength = std::max(St.maxTraceLength, length);
  if (length > Cfg.predictor.window)
    ++St.windowViolations;

  s.spec.reset();
  s.pc = savedPc;
  s.regs = savedRegs;
  s.mem = savedMem;
  s.retStack = savedRet;

  if (before) {
    ++St.rollbackChecks;
    if (!(fingerprint(s) == *before))
      ++St.rollbackViolations;
  }
}

bool Explorer::specStep(ExecState &s, const Instruction &inst) {
  const Pc pc = s.pc;
  auto &shadow = s.spec->shadow;
  switch (inst.op) {
  case Opcode::Br: {
    ExprRef cond = readReg(s, std::get<RegOperand>(inst.operands[0]).name);
    Event e = makeEvent(Opcode::Br, pc, true);
    e.symbolicAccess = cond->taint().symbolic;
    e.secretAccess = cond->taint().secret;
    emit(s, e, cond);
    const Pc takenT = P.labelPc(std::get<NameOperand>(inst.operands[1]).name);
    const Pc notTakenT =
        P.labelPc(std::get<NameOperand>(inst.operands[2]).name);
    Prediction p = shadow.predictBranch(pc, takenT, notTakenT);
    if (!p.next)
      return false;
    shadow.speculate(p.taken);
    s.pc = *p.next;
    return true;
  }
  case Opcode::Icall: {
    ExprRef target = readReg(s, std::get<RegOperand>(inst.operands[0]).name);
    Event e = makeEvent(Opcode::Icall, pc, true);
    e.symbolicAccess = target->taint().symbolic;
    e.secretAccess = target->taint().secret;
    emit(s, e, target);
    auto predicted = shadow.predictTarget(pc);
    if (!predicted)
      return false;
    s.retStack.push_back(pc + 1);
    s.pc = *predicted;
    return true;
  }
  case Opcode::Jmp:
    emit(s, makeEvent(Opcode::Jmp, pc, true), nullptr);
    s.pc = P.labelPc(std::get<NameOperand>(inst.operands[0]).name);
    return true;
  case Opcode::Call:
    emit(s, makeEvent(Opcode::Call, pc, true), nullptr);
    s.retStack.push_back(pc + 1);
    s.pc = P.labelPc(std::get<NameOperand>(inst.operands[0]).name);
    return true;
  case Opcode::Ret:
    emit(s, makeEvent(Opcode::Ret, pc, true), nullptr);
    if (s.retStack.empty())
      return false;
    s.pc = s.retStack.back();
    s.retStack.pop_back();
    return true;
  case Opcode::Halt:
    emit(s, makeEvent(Opcode::Halt, pc, true), nullptr);
    return false;
  default:
    execData(s, inst);
    ++s.pc;
    return true;
  }
}

ExprRef Explorer::readReg(ExecState &s, const std::string &name) {
  auto it = s.regs.find(name);
  if (it != s.regs.end())
    return it->second;
  if (!s.spec)
    diag(s, fmt::format("read of undefined register '{}'", name));
  return mkConst(0, 32);
}

ExprRef Explorer::address(ExecState &s, const MemOperand &m) {
  ExprRef a;
  if (m.region) {
    const Region *r = P.findRegion(*m.region);
    assert(r && r->base);
    a = mkConst(*r->base, 32);
  } else {
    a = coerce(readReg(s, *m.baseReg), 32);
  }
  if (m.offsetReg)
    a = mkBinOp(BinOpKind::Add, a, coerce(readReg(s, *m.offsetReg), 32));
  if (m.offsetImm)
    a = mkBinOp(BinOpKind::Add, a, mkConst(m.offsetImm, 32));
  return a;
}

bool Explorer::mayReadSecret(const ExecState &s, const Memory &mem,
                             const ExprRef &addr, unsigned width) {
  std::vector<ExprRef> terms;
  for (unsigned k = 0; k < width / 8; ++k) {
    ExprRef ak = k ? mkBinOp(BinOpKind::Add, addr, mkConst(k, 32)) : addr;
    for (const auto &slot : Image->slots())
      if (slot.secret)
        terms.push_back(inRange(ak, slot.base, slot.size));
    for (auto w = mem.head(); w; w = w->prev)
      if (w->value->taint().secret)
        terms.push_back(mkBinOp(BinOpKind::Eq, w->addr, ak));
  }
  ExprRef any = anyOf(std::move(terms));
  if (any->isConst())
    return any->value() != 0;
  return check(*s.pathCond, any) != Status::Unsat;
}

bool Explorer::execData(ExecState &s, const Instruction &inst) {
  const bool spec = s.spec.has_value();
  Event e = makeEvent(inst.op, s.pc, spec);
  std::vector<ExprRef> used;
  auto dest = [&]() -> const std::string & {
    return std::get<RegOperand>(inst.operands[0]).name;
  };

  switch (inst.op) {
  case Opcode::Const: {
    const auto v = std::get<ImmOperand>(inst.operands[1]).value;
    s.regs[dest()] = mkConst(v & widthMask(inst.width), inst.width);
    break;
  }
  case Opcode::Sym: {
    const auto &name = std::get<NameOperand>(inst.operands[1]).name;
    s.regs[dest()] = mkZExt(mkSym(name, inst.symBits, inst.symSecret),
                            inst.width);
    break;
  }
  case Opcode::Addrof: {
    const auto &name = std::get<NameOperand>(inst.operands[1]).name;
    if (const Region *r = P.findRegion(name))
      s.regs[dest()] = mkConst(*r->base, 32);
    else
      s.regs[dest()] = mkConst(P.labelPc(name), 32);
    break;
  }
  case Opcode::Not:
  case Opcode::Neg:
  case Opcode::Zext:
  case Opcode::Trunc: {
    ExprRef a = readReg(s, std::get<RegOperand>(inst.operands[1]).name);
    used.push_back(a);
    ExprRef r;
    if (inst.op == Opcode::Zext)
      r = coerce(a, 32);
    else if (inst.op == Opcode::Trunc)
      r = coerce(a, 8);
    else {
      if (inst.width)
        a = coerce(a, inst.width);
      r = mkUnOp(inst.op == Opcode::Not ? UnOpKind::Not : UnOpKind::Neg, a);
    }
    s.regs[dest()] = r;
    break;
  }
  case Opcode::Load: {
    const auto &m = std::get<MemOperand>(inst.operands[1]);
    ExprRef addr = address(s, m);
    used.push_back(addr);
    bool secret = false;
    if (!addr->isConst()) {
      if (!spec) {
        std::vector<ExprRef> terms;
        for (const auto &slot : Image->slots())
          terms.push_back(inRange(addr, slot.base, slot.size));
        if (check(*s.pathCond, anyOf(std::move(terms))) == Status::Unsat) {
          diag(s, "load address outside every region on all inputs");
          e.symbolicAccess = true;
          e.secretAccess = addr->taint().secret;
          e.memory = MemoryInfo{addr, std::nullopt, std::nullopt, false};
          emit(s, std::move(e), nullptr);
          return false;
        }
      }
      secret = mayReadSecret(s, s.mem, addr, inst.width);
    } else if (!Image->slotAt(addr->value()) && !spec) {
      diag(s, fmt::format("load from unmapped address {:#x}", addr->value()));
    }
    ExprRef value = s.mem.load(addr, inst.width, secret);
    s.regs[dest()] = value;
    e.secretAccess = value->taint().secret;
    MemoryInfo mi{addr, std::nullopt, std::nullopt, false};
    if (addr->isConst()) {
      mi.concreteAddr = addr->value();
      mi.line = addr->value() / Cfg.cache.lineSize;
    }
    e.memory = mi;
    break;
  }
  case Opcode::Store: {
    const auto &m = std::get<MemOperand>(inst.operands[0]);
    ExprRef addr = address(s, m);
    ExprRef value;
    if (const auto *imm = std::get_if<ImmOperand>(&inst.operands[1]))
      value = mkConst(imm->value & widthMask(inst.width), inst.width);
    else
      value = coerce(readReg(s, std::get<RegOperand>(inst.operands[1]).name),
                     inst.width);
    used.push_back(addr);
    used.push_back(value);
    if (!addr->isConst() && !spec) {
      std::vector<ExprRef> terms;
      for (const auto &slot : Image->slots())
        terms.push_back(inRange(addr, slot.base, slot.size));
      if (check(*s.pathCond, anyOf(std::move(terms))) == Status::Unsat) {
        diag(s, "store address outside every region on all inputs");
        e.symbolicAccess = true;
        e.secretAccess = addr->taint().secret || value->taint().secret;
        e.memory = MemoryInfo{addr, std::nullopt, std::nullopt, true};
        emit(s, std::move(e), nullptr);
        return false;
      }
    } else if (addr->isConst() && !Image->slotAt(addr->value()) && !spec) {
      diag(s, fmt::format("store to unmapped address {:#x}", addr->value()));
    }
    s.mem = s.mem.store(addr, value);
    if (spec)
      s.spec->storeBuffer.emplace_back(addr, value);
    MemoryInfo mi{addr, std::nullopt, std::nullopt, true};
    if (addr->isConst()) {
      mi.concreteAddr = addr->value();
      mi.line = addr->value() / Cfg.cache.lineSize;
    }
    e.memory = mi;
    break;
  }
  default: {
    assert(isBinaryOp(inst.op));
    ExprRef a = readReg(s, std::get<RegOperand>(inst.operands[1]).name);
    const auto *imm = std::get_if<ImmOperand>(&inst.operands[2]);
    ExprRef b = imm ? nullptr
                    : readReg(s, std::get<RegOperand>(inst.operands[2]).name);
    unsigned w = inst.width;
    if (!w)
      w = b ? std::max(a->width(), b->width()) : a->width();
    a = coerce(a, w);
    b = b ? coerce(b, w) : mkConst(imm->value & widthMask(w), w);
    used.push_back(a);
    used.push_back(b);
    s.regs[dest()] = mkBinOp(binOpOf(inst.op), a, b);
    break;
  }
  }

  for (const auto &u : used) {
    e.symbolicAccess |= u->taint().symbolic;
    e.secretAccess |= u->taint().secret;
  }
  emit(s, std::move(e), nullptr);
  return true;
}

void Explorer::emit(ExecState &s, Event e, const ExprRef &operand) {
  CacheObservation obs;
  if (e.memory) {
    const ExprRef &addr = e.memory->addr;
    if (e.memory->concreteAddr)
      obs.access = s.cache.access(*e.memory->concreteAddr);
    if (addr->taint().secret && !addr->isConst()) {
      auto ctx = Solver;
      auto pc = s.pathCond;
      auto cacheCfg = Cfg.cache;
      obs.leak = std::make_shared<LazyLeakVerdict>([ctx, addr, pc, cacheCfg] {
        LeakVerdict v =
            leakCheck(addr, *pc, cacheCfg, ctx->oracle, ctx->budget);
        if (v.status == Status::Unknown)
          ctx->unknowns.insert("leak check budget exceeded: " + v.reason);
        return v;
      });
    } else {
      obs.leak = NoLeak;
    }
  }
  ++St.events;

  auto node = std::make_shared<EventLogNode>();
  node->entry = LoggedEvent{e, obs, operand, s.pathCond};
  node->prev = s.log;
  node->index = s.log ? s.log->index + 1 : 0;
  s.log = node;

  for (std::size_t i = 0; i < s.monitors.size(); ++i) {
    ObserveResult r = s.monitors[i].observe(e, obs);
    if (r.match)
      onMatch(s, i, *r.match);
  }
}

void Explorer::onMatch(ExecState &s, std::size_t monitorIndex,
                       const Match &m) {
  Finding f;
  f.kind = FindingKind::Leak;
  f.pattern = Specs[monitorIndex]->name;
  for (const auto &t : m.chain)
    f.chain.push_back(ChainLink{t.pc, t.op, t.speculative, t.eventIndex});
  if (Findings.count(f.key()))
    return;
  f.log = s.log;
  f.monitorIndex = monitorIndex;
  bool inconclusive = false;
  f.witness = findWitness(f, inconclusive);
  if (!f.witness) {
    std::vector<std::string> pcs;
    for (const auto &l : f.chain)
      pcs.push_back(std::to_string(l.pc));
    if (!inconclusive) {
      // The solver refuted every distinguishing input pair.
      Diags.insert(fmt::format("pattern {} matched at pcs {} but no input pair "
                               "distinguishes it",
                               f.pattern, fmt::join(pcs, ",")));
      return;
    }
    f.kind = FindingKind::Unknown;
    f.message = "pattern matched; witness search exceeded the bit budget";
  }
  for (const auto &c : *s.pathCond)
    f.pathCondition.push_back(printExpr(c));
  f.config = fmt::format("{},{}", Cfg.predictor.describe(), modeName(Cfg.mode));
  Findings.emplace(f.key(), std::move(f));
}

std::optional<Witness> Explorer::findWitness(const Finding &f,
                                             bool &inconclusive) {
  auto events = flattenLog(f.log);
  for (auto it = f.chain.rbegin(); it != f.chain.rend(); ++it) {
    const LoggedEvent &le = *events.at(it->eventIndex);
    if (!le.cache.leak)
      continue;
    const LeakVerdict &v = le.cache.leak->get();
    if (v.status == Status::Unknown)
      inconclusive = true;
    if (v.leaks()) {
      assert(v.witness);
      return Witness{Witness::Kind::CacheLine, v.witness->pair,
                     v.witness->observable};
    }
  }
  for (auto it = f.chain.rbegin(); it != f.chain.rend(); ++it) {
    const LoggedEvent &le = *events.at(it->eventIndex);
    if (le.event.name != Opcode::Br || !le.operand ||
        !le.operand->taint().secret || le.operand->isConst())
      continue;
    LeakResult r = Solver->oracle.findLeakPair(
        Query{*le.pathCond, Cfg.bitBudget}, le.operand);
    if (r.status == Status::Unknown) {
      inconclusive = true;
      unknown("witness search budget exceeded: " + r.reason);
    }
    if (r.pair)
      return Witness{Witness::Kind::Branch, *r.pair, le.operand};
  }
  return std::nullopt;
}

void Explorer::diag(const ExecState &s, const std::string &msg) {
  Diags.insert(fmt::format("pc {}: {}", s.pc, msg));
}

} // namespace

ExploreResult explore(const Program &p, const EngineConfig &cfg,
                      const std::vector<MonitorSpec> &patterns) {
  Explorer ex(p, cfg, patterns);
  return ex.run();
}

ExploreResult exploreBaseline(const Program &p, EngineConfig cfg,
                              const std::vector<MonitorSpec> &patterns) {
  cfg.mode = ExploreMode::Baseline;
  return explore(p, cfg, patterns);
}

bool replayMatches(const Finding &f, const MonitorSpec &spec) {
  if (f.kind != FindingKind::Leak || f.chain.empty())
    return false;
  auto events = flattenLog(f.log);
  MonitorInstance m(std::make_shared<const MonitorSpec>(spec));
  std::optional<Match> found;
  for (const auto *le : events) {
    ObserveResult r = m.observe(le->event, le->cache);
    if (r.match)
      found = r.match;
  }
  if (!found || found->eventIndex != f.chain.back().eventIndex)
    return false;
  if (found->chain.size() != f.chain.size())
    return false;
  for (std::size_t i = 0; i < f.chain.size(); ++i) {
    const auto &t = found->chain[i];
    const auto &l = f.chain[i];
    if (t.pc != l.pc || t.op != l.op || t.speculative != l.speculative ||
        t.eventIndex != l.eventIndex)
      return false;
  }
  return true;
}

bool witnessValid(const Witness &w, const std::vector<ExprRef> &pathCond) {
  const Model &a = w.pair.first;
  const Model &b = w.pair.second;
  std::map<std::string, SymInfo> syms;
  collectSymbols(w.observable, syms);
  for (const auto &c : pathCond)
    collectSymbols(c, syms);
  try {
    for (const auto &[name, info] : syms) {
      if (!a.count(name) || !b.count(name))
        return false;
      if (!info.secret && a.at(name) != b.at(name))
        return false;
    }
    for (const auto &c : pathCond)
      if (eval(c, a) == 0 || eval(c, b) == 0)
        return false;
    const auto va = eval(w.observable, a);
    const auto vb = eval(w.observable, b);
    return va != vb && va == w.pair.observedFirst &&
           vb == w.pair.observedSecond;
  } catch (const ExprError &) {
    return false;
  }
}

} // namespace predspec
