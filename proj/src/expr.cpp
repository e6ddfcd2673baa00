//===-- expr.cpp - Expression construction, folding and evaluation --------===//

#include "predspec/expr.h"

#include <fmt/format.h>

#include <unordered_set>

namespace predspec {

std::uint32_t widthMask(unsigned width) {
  return width >= 32 ? 0xFFFFFFFFu : ((1u << width) - 1u);
}

std::string_view binOpName(BinOpKind op) {
  switch (op) {
  case BinOpKind::Add: return "add";
  case BinOpKind::Sub: return "sub";
  case BinOpKind::Mul: return "mul";
  case BinOpKind::And: return "and";
  case BinOpKind::Or: return "or";
  case BinOpKind::Xor: return "xor";
  case BinOpKind::Shl: return "shl";
  case BinOpKind::Lshr: return "lshr";
  case BinOpKind::Lt: return "lt";
  case BinOpKind::Le: return "le";
  case BinOpKind::Eq: return "eq";
  case BinOpKind::Ne: return "ne";
  }
  return "?";
}

std::string_view unOpName(UnOpKind op) {
  switch (op) {
  case UnOpKind::Not: return "not";
  case UnOpKind::Neg: return "neg";
  case UnOpKind::ZExt: return "zext";
  case UnOpKind::Trunc: return "trunc";
  }
  return "?";
}

static bool isCompare(BinOpKind op) {
  return op == BinOpKind::Lt || op == BinOpKind::Le || op == BinOpKind::Eq ||
         op == BinOpKind::Ne;
}

std::uint32_t applyBinOp(BinOpKind op, std::uint32_t a, std::uint32_t b,
                         unsigned width) {
  const std::uint32_t mask = widthMask(width);
  a &= mask;
  b &= mask;
  switch (op) {
  case BinOpKind::Add: return (a + b) & mask;
  case BinOpKind::Sub: return (a - b) & mask;
  case BinOpKind::Mul: return static_cast<std::uint32_t>(std::uint64_t(a) * b) & mask;
  case BinOpKind::And: return a & b;
  case BinOpKind::Or: return a | b;
  case BinOpKind::Xor: return a ^ b;
  case BinOpKind::Shl: return b >= width ? 0 : (a << b) & mask;
  case BinOpKind::Lshr: return b >= width ? 0 : a >> b;
  case BinOpKind::Lt: return a < b;
  case BinOpKind::Le: return a <= b;
  case BinOpKind::Eq: return a == b;
  case BinOpKind::Ne: return a != b;
  }
  return 0;
}

std::uint32_t applyUnOp(UnOpKind op, std::uint32_t a, unsigned fromWidth,
                        unsigned toWidth) {
  a &= widthMask(fromWidth);
  switch (op) {
  case UnOpKind::Not: return ~a & widthMask(fromWidth);
  case UnOpKind::Neg: return (0u - a) & widthMask(fromWidth);
  case UnOpKind::ZExt: return a;
  case UnOpKind::Trunc: return a & widthMask(toWidth);
  }
  return 0;
}

static void checkWidth(unsigned w) {
  if (w == 0 || w > 32)
    throw ExprError(fmt::format("invalid width {}", w));
}

ExprRef mkConst(std::uint32_t value, unsigned width, bool secret) {
  checkWidth(width);
  if (value > widthMask(width))
    throw ExprError(fmt::format("constant {} does not fit in {} bits", value,
                                width));
  auto e = std::make_shared<Expr>(ExprKind::Const, width, Taint{secret, false});
  e->Value = value;
  return e;
}

ExprRef mkSym(std::string name, unsigned width, bool secret) {
  checkWidth(width);
  auto e = std::make_shared<Expr>(ExprKind::Sym, width, Taint{secret, true});
  e->Name = std::move(name);
  return e;
}

ExprRef mkUnOp(UnOpKind op, const ExprRef &x, unsigned toWidth) {
  unsigned w = x->width();
  if (op == UnOpKind::ZExt) {
    checkWidth(toWidth);
    if (toWidth < w)
      throw ExprError("zext to a narrower width");
    if (toWidth == w)
      return x;
    w = toWidth;
  } else if (op == UnOpKind::Trunc) {
    checkWidth(toWidth);
    if (toWidth > w)
      throw ExprError("trunc to a wider width");
    if (toWidth == w)
      return x;
    w = toWidth;
  }
  if (x->isConst())
    return mkConst(applyUnOp(op, x->value(), x->width(), w), w,
                   x->taint().secret);
  auto e = std::make_shared<Expr>(ExprKind::UnOp, w, x->taint());
  e->Op = static_cast<int>(op);
  e->Kids = {x};
  return e;
}

ExprRef mkZExt(const ExprRef &e, unsigned toWidth) {
  return mkUnOp(UnOpKind::ZExt, e, toWidth);
}

ExprRef mkTrunc(const ExprRef &e, unsigned toWidth) {
  return mkUnOp(UnOpKind::Trunc, e, toWidth);
}

ExprRef mkBinOp(BinOpKind op, const ExprRef &a, const ExprRef &b) {
  if (a->width() != b->width())
    throw ExprError(fmt::format("width mismatch in {}: {} vs {}", binOpName(op),
                                a->width(), b->width()));
  const unsigned w = a->width();
  const unsigned rw = isCompare(op) ? 32 : w;
  const Taint t = a->taint() | b->taint();

  if (a->isConst() && b->isConst())
    return mkConst(applyBinOp(op, a->value(), b->value(), w), rw, t.secret);

  // Identity rules. A dropped constant must not carry secret taint.
  auto isZero = [](const ExprRef &e) {
    return e->isConst() && e->value() == 0;
  };
  auto isOne = [](const ExprRef &e) { return e->isConst() && e->value() == 1; };
  auto clean = [](const ExprRef &e) { return !e->taint().secret; };
  switch (op) {
  case BinOpKind::Add:
  case BinOpKind::Or:
  case BinOpKind::Xor:
    if (isZero(b) && clean(b))
      return a;
    if (isZero(a) && clean(a))
      return b;
    break;
  case BinOpKind::Sub:
  case BinOpKind::Shl:
  case BinOpKind::Lshr:
    if (isZero(b) && clean(b))
      return a;
    break;
  case BinOpKind::Mul:
    if (isOne(b) && clean(b))
      return a;
    if (isOne(a) && clean(a))
      return b;
    if (isZero(a) || isZero(b))
      return mkConst(0, w, t.secret);
    break;
  case BinOpKind::And:
    if (isZero(a) || isZero(b))
      return mkConst(0, w, t.secret);
    break;
  default:
    break;
  }
  if ((op == BinOpKind::Xor || op == BinOpKind::Sub) && structurallyEqual(a, b))
    return mkConst(0, w, t.secret);

  auto e = std::make_shared<Expr>(ExprKind::BinOp, rw, t);
  e->Op = static_cast<int>(op);
  e->Kids = {a, b};
  return e;
}

ExprRef mkIte(const ExprRef &cond, const ExprRef &a, const ExprRef &b) {
  if (a->width() != b->width())
    throw ExprError("width mismatch in ite");
  if (cond->isConst() && !cond->taint().secret)
    return cond->value() ? a : b;
  auto e = std::make_shared<Expr>(ExprKind::Ite, a->width(),
                                  cond->taint() | a->taint() | b->taint());
  e->Kids = {cond, a, b};
  return e;
}

ExprRef mkMemRead(const Memory &mem, const ExprRef &addr, unsigned width,
                  bool secret) {
  if (addr->width() != 32)
    throw ExprError("memory address must be 32 bits wide");
  if (width % 8 != 0 || width == 0 || width > 32)
    throw ExprError("memory reads are whole bytes");
  auto e = std::make_shared<Expr>(ExprKind::MemRead, width,
                                  Taint{secret || addr->taint().secret, true});
  e->Kids = {addr};
  e->Mem = mem;
  return e;
}

bool structurallyEqual(const ExprRef &a, const ExprRef &b) {
  if (a == b)
    return true;
  if (a->kind() != b->kind() || a->width() != b->width() ||
      a->taint() != b->taint())
    return false;
  switch (a->kind()) {
  case ExprKind::Const:
    return a->value() == b->value();
  case ExprKind::Sym:
    return a->name() == b->name();
  case ExprKind::MemRead:
    if (!a->memory().sameAs(b->memory()))
      return false;
    break;
  case ExprKind::UnOp:
  case ExprKind::BinOp:
    if (a->unop() != b->unop())
      return false;
    break;
  case ExprKind::Ite:
    break;
  }
  if (a->kids().size() != b->kids().size())
    return false;
  for (std::size_t i = 0; i < a->kids().size(); ++i)
    if (!structurallyEqual(a->kids()[i], b->kids()[i]))
      return false;
  return true;
}

std::uint32_t eval(const Expr &e, const Model &m) {
  switch (e.kind()) {
  case ExprKind::Const:
    return e.value();
  case ExprKind::Sym: {
    auto it = m.find(e.name());
    if (it == m.end())
      throw ExprError(fmt::format("unassigned symbol '{}'", e.name()));
    return it->second & widthMask(e.width());
  }
  case ExprKind::UnOp: {
    const auto &x = *e.kids()[0];
    return applyUnOp(e.unop(), eval(x, m), x.width(), e.width());
  }
  case ExprKind::BinOp: {
    const auto &a = *e.kids()[0];
    return applyBinOp(e.binop(), eval(a, m), eval(*e.kids()[1], m), a.width());
  }
  case ExprKind::Ite:
    return eval(*e.kids()[0], m) ? eval(*e.kids()[1], m)
                                 : eval(*e.kids()[2], m);
  case ExprKind::MemRead:
    return e.memory().evalRead(eval(*e.kids()[0], m), e.width(), m);
  }
  return 0;
}

namespace {

void collectRec(const ExprRef &e, std::map<std::string, SymInfo> &out,
                std::unordered_set<const void *> &seen) {
  if (!seen.insert(e.get()).second)
    return;
  switch (e->kind()) {
  case ExprKind::Const:
    return;
  case ExprKind::Sym: {
    auto [it, inserted] =
        out.emplace(e->name(), SymInfo{e->width(), e->taint().secret});
    if (!inserted && it->second.width != e->width())
      throw ExprError(
          fmt::format("symbol '{}' used with two widths", e->name()));
    return;
  }
  case ExprKind::MemRead: {
    const Memory &mem = e->memory();
    if (seen.insert(mem.head().get()).second || !mem.head()) {
      for (auto w = mem.head(); w; w = w->prev) {
        collectRec(w->addr, out, seen);
        collectRec(w->value, out, seen);
      }
    }
    if (seen.insert(mem.imagePtr().get()).second)
      for (const auto &s : mem.image().symbolicBytes())
        collectRec(s, out, seen);
    break;
  }
  default:
    break;
  }
  for (const auto &k : e->kids())
    collectRec(k, out, seen);
}

void printRec(const ExprRef &e, std::string &out) {
  switch (e->kind()) {
  case ExprKind::Const:
    out += fmt::format("{}:{}", e->value(), e->width());
    return;
  case ExprKind::Sym:
    out += fmt::format("{}:{}", e->name(), e->width());
    return;
  case ExprKind::UnOp:
    out += fmt::format("({}", unOpName(e->unop()));
    if (e->unop() == UnOpKind::ZExt || e->unop() == UnOpKind::Trunc)
      out += std::to_string(e->width());
    break;
  case ExprKind::BinOp:
    out += fmt::format("({}", binOpName(e->binop()));
    break;
  case ExprKind::Ite:
    out += "(ite";
    break;
  case ExprKind::MemRead:
    out += fmt::format("(read{} @v{}", e->width(), e->memory().version());
    break;
  }
  for (const auto &k : e->kids()) {
    out += ' ';
    printRec(k, out);
  }
  out += ')';
}

} // namespace

void collectSymbols(const ExprRef &e, std::map<std::string, SymInfo> &out) {
  std::unordered_set<const void *> seen;
  collectRec(e, out, seen);
}

std::string printExpr(const ExprRef &e) {
  std::string out;
  printRec(e, out);
  return out;
}

//===----------------------------------------------------------------------===//
// Memory
//===----------------------------------------------------------------------===//

MemoryImage::MemoryImage(const Program &p) {
  if (!p.laidOut())
    throw ExprError("memory image needs a laid-out program");
  for (const auto &r : p.regions) {
    Slot s;
    s.name = r.name;
    s.base = *r.base;
    s.size = r.size;
    s.secret = r.secret;
    s.init = r.init;
    if (r.isSymbolic()) {
      for (std::uint32_t i = 0; i < r.size; ++i) {
        auto sym = mkSym(fmt::format("{}[{}]", r.name, i), r.symbolicBits, true);
        s.symbols.push_back(mkZExt(sym, 8));
        SymbolicBytes.push_back(sym);
      }
    }
    Slots.push_back(std::move(s));
  }
}

const MemoryImage::Slot *MemoryImage::slotAt(std::uint64_t addr) const {
  for (const auto &s : Slots)
    if (addr >= s.base && addr < std::uint64_t(s.base) + s.size)
      return &s;
  return nullptr;
}

ExprRef MemoryImage::byteAt(Address addr) const {
  const Slot *s = slotAt(addr);
  if (!s)
    return mkConst(0, 8);
  const std::uint32_t off = addr - s->base;
  if (!s->symbols.empty())
    return s->symbols[off];
  return mkConst(off < s->init.size() ? s->init[off] : 0, 8, s->secret);
}

Memory Memory::store(const ExprRef &addr, const ExprRef &value) const {
  if (addr->width() != 32)
    throw ExprError("memory address must be 32 bits wide");
  Memory out = *this;
  const unsigned bytes = value->width() / 8;
  if (value->width() % 8 != 0 || bytes == 0)
    throw ExprError("stores are whole bytes");
  for (unsigned k = 0; k < bytes; ++k) {
    auto w = std::make_shared<MemWrite>();
    w->addr = k == 0 ? addr : mkBinOp(BinOpKind::Add, addr, mkConst(k, 32));
    ExprRef shifted =
        k == 0 ? value
               : mkBinOp(BinOpKind::Lshr, value, mkConst(8 * k, value->width()));
    w->value = mkTrunc(shifted, 8);
    w->prev = out.Head;
    w->version = out.version() + 1;
    out.Head = std::move(w);
  }
  return out;
}

bool Memory::hasSymbolicWrites() const {
  for (auto w = Head; w; w = w->prev)
    if (!w->addr->isConst())
      return true;
  return false;
}

ExprRef Memory::load(const ExprRef &addr, unsigned width, bool secret) const {
  if (addr->width() != 32)
    throw ExprError("memory address must be 32 bits wide");
  if (!addr->isConst())
    return mkMemRead(*this, addr, width, secret);

  const unsigned bytes = width / 8;
  std::vector<ExprRef> parts;
  for (unsigned k = 0; k < bytes; ++k) {
    const std::uint32_t a = addr->value() + k;
    ExprRef byte;
    for (auto w = Head; w; w = w->prev) {
      if (!w->addr->isConst())
        return mkMemRead(*this, addr, width, secret);
      if (w->addr->value() == a) {
        byte = w->value;
        break;
      }
    }
    if (!byte)
      byte = Image->byteAt(a);
    parts.push_back(byte);
  }
  if (bytes == 1)
    return parts[0];
  ExprRef acc = mkZExt(parts[0], width);
  for (unsigned k = 1; k < bytes; ++k)
    acc = mkBinOp(BinOpKind::Or, acc,
                  mkBinOp(BinOpKind::Shl, mkZExt(parts[k], width),
                          mkConst(8 * k, width)));
  return acc;
}

std::uint32_t Memory::evalRead(std::uint32_t addr, unsigned width,
                               const Model &m) const {
  std::uint32_t result = 0;
  for (unsigned k = 0; k < width / 8; ++k) {
    const std::uint32_t a = addr + k;
    std::uint32_t byte = 0;
    bool found = false;
    for (auto w = Head; w; w = w->prev) {
      if (eval(*w->addr, m) == a) {
        byte = eval(*w->value, m);
        found = true;
        break;
      }
    }
    if (!found)
      byte = eval(*Image->byteAt(a), m);
    result |= (byte & 0xFF) << (8 * k);
  }
  return result & widthMask(width);
}

} // namespace predspec
