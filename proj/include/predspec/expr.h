//===-- expr.h - Bit-precise symbolic expressions with taint ----*- C++ -*-===//
//
// Expressions are immutable DAGs shared through ExprRef. Every node carries a
// two-bit taint: `secret` (derived from secret data) and `symbolic` (depends
// on a program input). Memory is a persistent, versioned byte store; loads
// that cannot be resolved to a single byte expression freeze the snapshot
// they read from inside a MemRead node.
//
//===----------------------------------------------------------------------===//

#ifndef PREDSPEC_EXPR_H
#define PREDSPEC_EXPR_H

#include "predspec/sir.h"

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace predspec {

struct Taint {
  bool secret = false;
  bool symbolic = false;

  Taint operator|(Taint o) const {
    return {secret || o.secret, symbolic || o.symbolic};
  }
  bool operator==(const Taint &) const = default;
};

enum class ExprKind { Const, Sym, UnOp, BinOp, Ite, MemRead };

enum class UnOpKind { Not, Neg, ZExt, Trunc };

enum class BinOpKind {
  Add,
  Sub,
  Mul,
  And,
  Or,
  Xor,
  Shl,
  Lshr,
  Lt,
  Le,
  Eq,
  Ne,
};

class Expr;
using ExprRef = std::shared_ptr<const Expr>;

/// Assignment of program inputs. Values must fit the input's width.
using Model = std::map<std::string, std::uint32_t>;

class ExprError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//===----------------------------------------------------------------------===//
// Memory
//===----------------------------------------------------------------------===//

/// Initial contents of the laid-out regions of a program.
class MemoryImage {
public:
  struct Slot {
    std::string name;
    Address base = 0;
    std::uint32_t size = 0;
    bool secret = false;
    std::vector<std::uint8_t> init;
    /// Per-byte input symbols for symbolic secret regions.
    std::vector<ExprRef> symbols;
  };

  explicit MemoryImage(const Program &laidOut);

  const Slot *slotAt(std::uint64_t addr) const;
  const std::vector<Slot> &slots() const { return Slots; }

  /// Byte expression at a concrete address; Const 0 outside every region.
  ExprRef byteAt(Address addr) const;
  /// All symbols any read of this image may observe.
  const std::vector<ExprRef> &symbolicBytes() const { return SymbolicBytes; }

private:
  std::vector<Slot> Slots;
  std::vector<ExprRef> SymbolicBytes;
};

/// One byte-sized write in a persistent write log.
struct MemWrite {
  ExprRef addr;  // width 32
  ExprRef value; // width 8
  std::shared_ptr<const MemWrite> prev;
  std::size_t version = 0;
};

/// A copy-on-write memory snapshot. Copies are O(1) and share history.
class Memory {
public:
  Memory() = default;
  explicit Memory(std::shared_ptr<const MemoryImage> image)
      : Image(std::move(image)) {}

  std::size_t version() const { return Head ? Head->version : 0; }
  const MemoryImage &image() const { return *Image; }
  const std::shared_ptr<const MemoryImage> &imagePtr() const { return Image; }
  const std::shared_ptr<const MemWrite> &head() const { return Head; }

  /// Little-endian store of `width` bits.
  Memory store(const ExprRef &addr, const ExprRef &value) const;

  /// Writes whose address is not a constant.
  bool hasSymbolicWrites() const;

  /// Read that resolves to plain byte expressions when the address and every
  /// write address are constant; otherwise a MemRead over this snapshot.
  /// `secret` is the caller's may-taint for the MemRead case.
  ExprRef load(const ExprRef &addr, unsigned width, bool secret) const;

  /// Concrete read under a model; bytes outside every region read as 0.
  std::uint32_t evalRead(std::uint32_t addr, unsigned width,
                         const Model &m) const;

  /// Identity comparison: same image and same write log node.
  bool sameAs(const Memory &o) const {
    return Image == o.Image && Head == o.Head;
  }

private:
  std::shared_ptr<const MemoryImage> Image;
  std::shared_ptr<const MemWrite> Head;
};

//===----------------------------------------------------------------------===//
// Expr
//===----------------------------------------------------------------------===//

class Expr {
public:
  ExprKind kind() const { return Kind; }
  unsigned width() const { return Width; }
  Taint taint() const { return T; }

  std::uint32_t value() const { return Value; }          // Const
  const std::string &name() const { return Name; }       // Sym
  UnOpKind unop() const { return static_cast<UnOpKind>(Op); }
  BinOpKind binop() const { return static_cast<BinOpKind>(Op); }
  const std::vector<ExprRef> &kids() const { return Kids; }
  const Memory &memory() const { return Mem; }          // MemRead

  bool isConst() const { return Kind == ExprKind::Const; }

  Expr(ExprKind kind, unsigned width, Taint t) : Kind(kind), Width(width), T(t) {}

private:
  friend ExprRef mkConst(std::uint32_t, unsigned, bool);
  friend ExprRef mkSym(std::string, unsigned, bool);
  friend ExprRef mkUnOp(UnOpKind, const ExprRef &, unsigned);
  friend ExprRef mkBinOp(BinOpKind, const ExprRef &, const ExprRef &);
  friend ExprRef mkIte(const ExprRef &, const ExprRef &, const ExprRef &);
  friend ExprRef mkMemRead(const Memory &, const ExprRef &, unsigned, bool);

  ExprKind Kind;
  unsigned Width;
  Taint T;
  std::uint32_t Value = 0;
  std::string Name;
  int Op = 0;
  std::vector<ExprRef> Kids;
  Memory Mem;
};

std::uint32_t widthMask(unsigned width);

ExprRef mkConst(std::uint32_t value, unsigned width, bool secret = false);
ExprRef mkSym(std::string name, unsigned width, bool secret = false);
/// `toWidth` is required for ZExt/Trunc and ignored otherwise.
ExprRef mkUnOp(UnOpKind op, const ExprRef &e, unsigned toWidth = 0);
ExprRef mkBinOp(BinOpKind op, const ExprRef &a, const ExprRef &b);
ExprRef mkIte(const ExprRef &cond, const ExprRef &a, const ExprRef &b);
ExprRef mkMemRead(const Memory &mem, const ExprRef &addr, unsigned width,
                  bool secret);

ExprRef mkZExt(const ExprRef &e, unsigned toWidth);
ExprRef mkTrunc(const ExprRef &e, unsigned toWidth);

/// Applies a binary operator to concrete operands at `width` (operand width).
std::uint32_t applyBinOp(BinOpKind op, std::uint32_t a, std::uint32_t b,
                         unsigned width);
std::uint32_t applyUnOp(UnOpKind op, std::uint32_t a, unsigned fromWidth,
                        unsigned toWidth);

/// Reference evaluator. Throws ExprError on unassigned symbols.
std::uint32_t eval(const Expr &e, const Model &m);
inline std::uint32_t eval(const ExprRef &e, const Model &m) {
  return eval(*e, m);
}

bool structurallyEqual(const ExprRef &a, const ExprRef &b);

struct SymInfo {
  unsigned width = 0;
  bool secret = false;
};

/// Inputs an expression may observe, including memory reachable by MemRead.
void collectSymbols(const ExprRef &e, std::map<std::string, SymInfo> &out);

std::string printExpr(const ExprRef &e);
std::string_view binOpName(BinOpKind op);
std::string_view unOpName(UnOpKind op);

} // namespace predspec

#endif
