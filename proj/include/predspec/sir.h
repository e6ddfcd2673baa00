//===-- sir.h - The SIR register-machine language ---------------*- C++ -*-===//
//
// SIR is a small register-machine IR: one instruction per line, named
// mutable registers, byte-addressed regions and an internal return stack.
// See docs/sir.md for the grammar.
//
//===----------------------------------------------------------------------===//

#ifndef PREDSPEC_SIR_H
#define PREDSPEC_SIR_H

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace predspec {

using Pc = std::uint32_t;
using Address = std::uint32_t;

inline constexpr Address kDefaultBase = 0x1000;
inline constexpr std::uint32_t kDefaultLineSize = 64;

enum class Opcode {
  Const,
  Sym,
  Addrof,
  // binary
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
  // unary
  Not,
  Neg,
  Zext,
  Trunc,
  // memory and control
  Load,
  Store,
  Br,
  Jmp,
  Call,
  Icall,
  Ret,
  Halt,
};

std::string_view opcodeName(Opcode op);
std::optional<Opcode> opcodeFromName(std::string_view name);
bool isBinaryOp(Opcode op);
bool isUnaryOp(Opcode op);
bool isComparison(Opcode op);

struct RegOperand {
  std::string name;
  bool operator==(const RegOperand &) const = default;
};

struct ImmOperand {
  std::uint32_t value = 0;
  bool operator==(const ImmOperand &) const = default;
};

/// A label or region reference.
struct NameOperand {
  std::string name;
  bool operator==(const NameOperand &) const = default;
};

/// `[base + offset]` where base is a region or register and the offset is an
/// optional register or immediate.
struct MemOperand {
  std::optional<std::string> region;
  std::optional<std::string> baseReg;
  std::optional<std::string> offsetReg;
  std::uint32_t offsetImm = 0;
  bool operator==(const MemOperand &) const = default;
};

using Operand = std::variant<RegOperand, ImmOperand, NameOperand, MemOperand>;

struct Instruction {
  Opcode op = Opcode::Halt;
  std::vector<Operand> operands;
  /// 8 or 32. Binary ops take their width from the operands at run time.
  unsigned width = 32;
  /// Only for `sym`: enumerated bits and secrecy of the input.
  unsigned symBits = 0;
  bool symSecret = false;
  /// 1-based source line, for diagnostics. Not part of equality.
  unsigned line = 0;

  bool operator==(const Instruction &o) const {
    return op == o.op && operands == o.operands && width == o.width &&
           symBits == o.symBits && symSecret == o.symSecret;
  }
};

struct Region {
  std::string name;
  std::uint32_t size = 0;
  bool secret = false;
  std::vector<std::uint8_t> init;
  /// Nonzero for secret regions without an initializer: every byte is a
  /// fresh secret input of this many bits.
  unsigned symbolicBits = 0;
  /// Assigned by layoutRegions.
  std::optional<Address> base;

  bool isSymbolic() const { return symbolicBits != 0; }
  bool contains(std::uint64_t addr) const {
    return base && addr >= *base && addr < std::uint64_t(*base) + size;
  }
  bool operator==(const Region &) const = default;
};

struct Program {
  std::vector<Instruction> instructions;
  std::map<std::string, Pc> labels;
  std::vector<Region> regions;
  Pc entry = 0;
  std::optional<std::string> entryLabel;

  const Region *findRegion(std::string_view name) const;
  const Region *regionAt(std::uint64_t addr) const;
  bool laidOut() const;
  Pc labelPc(const std::string &name) const;

  bool operator==(const Program &) const = default;
};

class ParseError : public std::runtime_error {
public:
  ParseError(unsigned line, unsigned column, const std::string &msg);
  unsigned line() const { return Line; }
  unsigned column() const { return Column; }

private:
  unsigned Line;
  unsigned Column;
};

class LayoutError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

Program parseProgram(std::string_view text);

/// Assigns consecutive, line-aligned bases in declaration order.
Program layoutRegions(Program p, Address base = kDefaultBase,
                      std::uint32_t lineSize = kDefaultLineSize);

/// Canonical text form; parseProgram(printProgram(p)) == p (modulo bases).
std::string printProgram(const Program &p);
std::string printInstruction(const Program &p, const Instruction &inst);

} // namespace predspec

#endif
