//===-- sir.cpp - SIR parser, printer and region layout -------------------===//

#include "predspec/sir.h"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>

namespace predspec {

namespace {

struct OpInfo {
  Opcode op;
  std::string_view name;
};

constexpr std::array<OpInfo, 27> kOps = {{
    {Opcode::Const, "const"}, {Opcode::Sym, "sym"},
    {Opcode::Addrof, "addrof"}, {Opcode::Add, "add"},
    {Opcode::Sub, "sub"},     {Opcode::Mul, "mul"},
    {Opcode::And, "and"},     {Opcode::Or, "or"},
    {Opcode::Xor, "xor"},     {Opcode::Shl, "shl"},
    {Opcode::Lshr, "lshr"},   {Opcode::Lt, "lt"},
    {Opcode::Le, "le"},       {Opcode::Eq, "eq"},
    {Opcode::Ne, "ne"},       {Opcode::Not, "not"},
    {Opcode::Neg, "neg"},     {Opcode::Zext, "zext"},
    {Opcode::Trunc, "trunc"}, {Opcode::Load, "load"},
    {Opcode::Store, "store"}, {Opcode::Br, "br"},
    {Opcode::Jmp, "jmp"},     {Opcode::Call, "call"},
    {Opcode::Icall, "icall"}, {Opcode::Ret, "ret"},
    {Opcode::Halt, "halt"},
}};

bool isIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool isIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '$';
}

bool isIdentifier(std::string_view s) {
  if (s.empty() || !isIdentStart(s[0]))
    return false;
  return std::all_of(s.begin(), s.end(), isIdentChar);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::optional<std::uint64_t> parseUnsigned(std::string_view s) {
  if (s.empty())
    return std::nullopt;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || ptr != s.data() + s.size())
    return std::nullopt;
  return v;
}

/// Accepts `-N` as the 32-bit two's complement of N.
std::optional<std::uint32_t> parseImmediate(std::string_view s) {
  bool negative = false;
  if (!s.empty() && s[0] == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  auto v = parseUnsigned(s);
  if (!v || *v > 0xFFFFFFFFull)
    return std::nullopt;
  std::uint32_t r = static_cast<std::uint32_t>(*v);
  return negative ? static_cast<std::uint32_t>(0u - r) : r;
}

bool looksNumeric(std::string_view s) {
  return !s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) ||
                        (s[0] == '-' && s.size() > 1));
}

/// One comma-separated operand token with its 1-based column.
struct Token {
  std::string_view text;
  unsigned column;
};

class LineParser {
public:
  LineParser(Program &p, unsigned lineNo) : P(p), LineNo(lineNo) {}

  [[noreturn]] void fail(unsigned column, const std::string &msg) const {
    throw ParseError(LineNo, column, msg);
  }

  std::vector<Token> splitOperands(std::string_view text, unsigned column) {
    std::vector<Token> out;
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i < text.size()) {
        if (text[i] == '[')
          ++depth;
        else if (text[i] == ']')
          --depth;
        if (text[i] != ',' || depth != 0)
          continue;
      }
      std::string_view raw = text.substr(start, i - start);
      std::size_t lead = 0;
      while (lead < raw.size() &&
             std::isspace(static_cast<unsigned char>(raw[lead])))
        ++lead;
      std::string_view tok = trim(raw);
      if (tok.empty()) {
        if (i == text.size() && out.empty() && start == 0)
          break;
        fail(column + static_cast<unsigned>(start), "empty operand");
      }
      out.push_back({tok, column + static_cast<unsigned>(start + lead)});
      start = i + 1;
    }
    if (depth != 0)
      fail(column, "unbalanced brackets");
    return out;
  }

  std::string reg(const Token &t) {
    if (!isIdentifier(t.text))
      fail(t.column, fmt::format("expected register, got '{}'", t.text));
    return std::string(t.text);
  }

  Operand regOrImm(const Token &t) {
    if (looksNumeric(t.text)) {
      auto v = parseImmediate(t.text);
      if (!v)
        fail(t.column, fmt::format("bad immediate '{}'", t.text));
      return ImmOperand{*v};
    }
    return RegOperand{reg(t)};
  }

  NameOperand name(const Token &t) {
    if (!isIdentifier(t.text))
      fail(t.column, fmt::format("expected name, got '{}'", t.text));
    return NameOperand{std::string(t.text)};
  }

  /// Region/register classification happens after all regions are known.
  MemOperand mem(const Token &t) {
    std::string_view s = t.text;
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
      fail(t.column, fmt::format("expected memory operand, got '{}'", s));
    s = s.substr(1, s.size() - 2);
    MemOperand m;
    auto plus = s.find('+');
    std::vector<std::string_view> parts;
    if (plus == std::string_view::npos) {
      parts.push_back(trim(s));
    } else {
      parts.push_back(trim(s.substr(0, plus)));
      parts.push_back(trim(s.substr(plus + 1)));
    }
    bool haveImm = false;
    for (auto part : parts) {
      if (part.empty())
        fail(t.column, "empty memory operand term");
      if (looksNumeric(part)) {
        auto v = parseImmediate(part);
        if (!v || haveImm)
          fail(t.column, fmt::format("bad memory offset '{}'", part));
        m.offsetImm = *v;
        haveImm = true;
      } else if (isIdentifier(part)) {
        // Provisionally a register; reclassified once regions are known.
        if (!m.baseReg)
          m.baseReg = std::string(part);
        else
          m.offsetReg = std::string(part);
      } else {
        fail(t.column, fmt::format("bad memory term '{}'", part));
      }
    }
    return m;
  }

  Program &P;
  unsigned LineNo;
};

void expectArity(const LineParser &lp, unsigned column, std::string_view op,
                 std::size_t got, std::size_t want) {
  if (got != want)
    lp.fail(column, fmt::format("arity mismatch: '{}' takes {} operand(s), "
                                "got {}",
                                op, want, got));
}

struct PendingRef {
  std::size_t inst;
  std::size_t operand;
  unsigned line;
  unsigned column;
};

} // namespace

std::string_view opcodeName(Opcode op) {
  for (const auto &info : kOps)
    if (info.op == op)
      return info.name;
  return "?";
}

std::optional<Opcode> opcodeFromName(std::string_view name) {
  for (const auto &info : kOps)
    if (info.name == name)
      return info.op;
  return std::nullopt;
}

bool isBinaryOp(Opcode op) { return op >= Opcode::Add && op <= Opcode::Ne; }
bool isUnaryOp(Opcode op) { return op >= Opcode::Not && op <= Opcode::Trunc; }
bool isComparison(Opcode op) { return op >= Opcode::Lt && op <= Opcode::Ne; }

ParseError::ParseError(unsigned line, unsigned column, const std::string &msg)
    : std::runtime_error(fmt::format("{}:{}: {}", line, column, msg)),
      Line(line), Column(column) {}

const Region *Program::findRegion(std::string_view name) const {
  for (const auto &r : regions)
    if (r.name == name)
      return &r;
  return nullptr;
}

const Region *Program::regionAt(std::uint64_t addr) const {
  for (const auto &r : regions)
    if (r.contains(addr))
      return &r;
  return nullptr;
}

bool Program::laidOut() const {
  return std::all_of(regions.begin(), regions.end(),
                     [](const Region &r) { return r.base.has_value(); });
}

Pc Program::labelPc(const std::string &name) const {
  auto it = labels.find(name);
  if (it == labels.end())
    throw std::out_of_range("unknown label " + name);
  return it->second;
}

Program parseProgram(std::string_view text) {
  Program p;
  std::vector<std::pair<std::string, std::pair<unsigned, unsigned>>>
      pendingLabels; // labels waiting for their instruction
  std::vector<PendingRef> labelRefs;
  std::vector<std::pair<std::size_t, unsigned>> memRefs; // inst, line
  std::optional<std::pair<std::string, unsigned>> entryDecl;

  unsigned lineNo = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos)
      eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineNo;

    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);

    LineParser lp(p, lineNo);
    std::size_t cur = 0;
    auto skipSpace = [&] {
      while (cur < line.size() &&
             std::isspace(static_cast<unsigned char>(line[cur])))
        ++cur;
    };
    auto readWord = [&]() -> std::string_view {
      std::size_t s = cur;
      while (cur < line.size() &&
             !std::isspace(static_cast<unsigned char>(line[cur])) &&
             line[cur] != ':')
        ++cur;
      return line.substr(s, cur - s);
    };

    // Leading labels.
    for (;;) {
      skipSpace();
      std::size_t save = cur;
      std::string_view word = readWord();
      if (cur < line.size() && line[cur] == ':' && !word.empty()) {
        if (!isIdentifier(word))
          lp.fail(static_cast<unsigned>(save + 1),
                  fmt::format("bad label '{}'", word));
        std::string name(word);
        bool dup = p.labels.count(name) != 0;
        for (const auto &pl : pendingLabels)
          dup = dup || pl.first == name;
        if (dup)
          lp.fail(static_cast<unsigned>(save + 1),
                  fmt::format("duplicate label '{}'", name));
        pendingLabels.push_back(
            {name, {lineNo, static_cast<unsigned>(save + 1)}});
        ++cur;
        continue;
      }
      cur = save;
      break;
    }
    skipSpace();
    if (cur >= line.size())
      continue;

    unsigned mnemonicCol = static_cast<unsigned>(cur + 1);
    std::string_view mnemonic = readWord();
    if (cur < line.size() && line[cur] == ':')
      lp.fail(static_cast<unsigned>(cur + 1), "unexpected ':'");
    skipSpace();
    std::string_view rest = line.substr(cur);
    unsigned restCol = static_cast<unsigned>(cur + 1);

    if (mnemonic == "region") {
      if (!pendingLabels.empty())
        lp.fail(mnemonicCol, "label on a region directive");
      Region r;
      std::vector<std::string_view> words;
      std::string_view rs = rest;
      while (!(rs = trim(rs)).empty()) {
        auto sp = rs.find_first_of(" \t");
        words.push_back(rs.substr(0, sp));
        if (sp == std::string_view::npos)
          break;
        rs = rs.substr(sp);
      }
      if (words.size() < 2)
        lp.fail(restCol, "region needs a name and a size");
      if (!isIdentifier(words[0]))
        lp.fail(restCol, fmt::format("bad region name '{}'", words[0]));
      r.name = std::string(words[0]);
      auto size = parseUnsigned(words[1]);
      if (!size || *size == 0 || *size > 0xFFFFFFFFull)
        lp.fail(restCol, fmt::format("bad region size '{}'", words[1]));
      r.size = static_cast<std::uint32_t>(*size);
      bool haveBits = false;
      for (std::size_t i = 2; i < words.size(); ++i) {
        std::string_view w = words[i];
        if (w == "secret") {
          r.secret = true;
        } else if (w.substr(0, 5) == "init=") {
          std::string_view hex = w.substr(5);
          if (hex.size() % 2 != 0)
            lp.fail(restCol, "init hex must have an even number of digits");
          for (std::size_t k = 0; k < hex.size(); k += 2) {
            unsigned v = 0;
            auto [ptr, ec] =
                std::from_chars(hex.data() + k, hex.data() + k + 2, v, 16);
            if (ec != std::errc() || ptr != hex.data() + k + 2)
              lp.fail(restCol, fmt::format("bad init hex '{}'", hex));
            r.init.push_back(static_cast<std::uint8_t>(v));
          }
        } else if (w.substr(0, 5) == "bits=") {
          auto b = parseUnsigned(w.substr(5));
          if (!b || *b == 0 || *b > 8)
            lp.fail(restCol, "bits must be in 1..8");
          r.symbolicBits = static_cast<unsigned>(*b);
          haveBits = true;
        } else {
          lp.fail(restCol, fmt::format("unknown region attribute '{}'", w));
        }
      }
      if (r.init.size() > r.size)
        lp.fail(restCol, "init longer than region size");
      if (haveBits && (!r.secret || !r.init.empty()))
        lp.fail(restCol, "bits= requires a secret region without init");
      if (r.secret && r.init.empty() && !haveBits)
        r.symbolicBits = 8;
      if (p.findRegion(r.name))
        lp.fail(restCol, fmt::format("duplicate region '{}'", r.name));
      p.regions.push_back(std::move(r));
      continue;
    }
    if (mnemonic == "entry") {
      if (entryDecl)
        lp.fail(mnemonicCol, "duplicate entry directive");
      std::string_view target = trim(rest);
      if (!isIdentifier(target))
        lp.fail(restCol, "entry needs a label");
      entryDecl = {std::string(target), lineNo};
      continue;
    }

    // Instruction.
    std::string_view base = mnemonic;
    std::optional<unsigned> suffix;
    if (auto dot = mnemonic.find('.'); dot != std::string_view::npos) {
      base = mnemonic.substr(0, dot);
      auto w = parseUnsigned(mnemonic.substr(dot + 1));
      if (!w || (*w != 8 && *w != 32))
        lp.fail(mnemonicCol, fmt::format("bad width in '{}'", mnemonic));
      suffix = static_cast<unsigned>(*w);
    }
    auto op = opcodeFromName(base);
    if (!op)
      lp.fail(mnemonicCol, fmt::format("unknown opcode '{}'", base));

    Instruction inst;
    inst.op = *op;
    inst.line = lineNo;
    inst.width = suffix.value_or(32);
    auto toks = lp.splitOperands(rest, restCol);
    const std::size_t instIndex = p.instructions.size();
    auto addLabelRef = [&](std::size_t operandIndex, const Token &t) {
      labelRefs.push_back({instIndex, operandIndex, lineNo, t.column});
    };

    switch (*op) {
    case Opcode::Const: {
      expectArity(lp, mnemonicCol, base, toks.size(), 2);
      inst.operands.push_back(RegOperand{lp.reg(toks[0])});
      auto imm = lp.regOrImm(toks[1]);
      if (!std::holds_alternative<ImmOperand>(imm))
        lp.fail(toks[1].column, "const needs an immediate");
      if (inst.width == 8 && std::get<ImmOperand>(imm).value > 0xFF)
        lp.fail(toks[1].column, "immediate does not fit in 8 bits");
      inst.operands.push_back(imm);
      break;
    }
    case Opcode::Sym: {
      if (toks.size() != 3 && toks.size() != 4)
        expectArity(lp, mnemonicCol, base, toks.size(), 3);
      inst.operands.push_back(RegOperand{lp.reg(toks[0])});
      inst.operands.push_back(lp.name(toks[1]));
      auto bits = parseUnsigned(toks[2].text);
      if (!bits || *bits == 0 || *bits > inst.width)
        lp.fail(toks[2].column, "sym bits must be in 1..width");
      inst.symBits = static_cast<unsigned>(*bits);
      if (toks.size() == 4) {
        if (toks[3].text != "secret")
          lp.fail(toks[3].column, "expected 'secret'");
        inst.symSecret = true;
      }
      break;
    }
    case Opcode::Addrof:
      expectArity(lp, mnemonicCol, base, toks.size(), 2);
      inst.operands.push_back(RegOperand{lp.reg(toks[0])});
      inst.operands.push_back(lp.name(toks[1]));
      break;
    case Opcode::Not:
    case Opcode::Neg:
    case Opcode::Zext:
    case Opcode::Trunc:
      expectArity(lp, mnemonicCol, base, toks.size(), 2);
      inst.operands.push_back(RegOperand{lp.reg(toks[0])});
      inst.operands.push_back(RegOperand{lp.reg(toks[1])});
      if ((*op == Opcode::Not || *op == Opcode::Neg) && !suffix)
        inst.width = 0;
      if (*op == Opcode::Zext && inst.width != 32)
        lp.fail(mnemonicCol, "zext widens to 32 bits");
      if (*op == Opcode::Trunc && inst.width != 8)
        lp.fail(mnemonicCol, "trunc narrows to 8 bits");
      break;
    case Opcode::Load:
      expectArity(lp, mnemonicCol, base, toks.size(), 2);
      inst.operands.push_back(RegOperand{lp.reg(toks[0])});
      inst.operands.push_back(lp.mem(toks[1]));
      memRefs.push_back({instIndex, lineNo});
      break;
    case Opcode::Store:
      expectArity(lp, mnemonicCol, base, toks.size(), 2);
      inst.operands.push_back(lp.mem(toks[0]));
      inst.operands.push_back(lp.regOrImm(toks[1]));
      memRefs.push_back({instIndex, lineNo});
      break;
    case Opcode::Br:
      expectArity(lp, mnemonicCol, base, toks.size(), 3);
      inst.operands.push_back(RegOperand{lp.reg(toks[0])});
      inst.operands.push_back(lp.name(toks[1]));
      addLabelRef(1, toks[1]);
      inst.operands.push_back(lp.name(toks[2]));
      addLabelRef(2, toks[2]);
      break;
    case Opcode::Jmp:
    case Opcode::Call:
      expectArity(lp, mnemonicCol, base, toks.size(), 1);
      inst.operands.push_back(lp.name(toks[0]));
      addLabelRef(0, toks[0]);
      break;
    case Opcode::Icall:
      expectArity(lp, mnemonicCol, base, toks.size(), 1);
      inst.operands.push_back(RegOperand{lp.reg(toks[0])});
      break;
    case Opcode::Ret:
    case Opcode::Halt:
      expectArity(lp, mnemonicCol, base, toks.size(), 0);
      break;
    default: // binary
      expectArity(lp, mnemonicCol, base, toks.size(), 3);
      inst.operands.push_back(RegOperand{lp.reg(toks[0])});
      inst.operands.push_back(RegOperand{lp.reg(toks[1])});
      inst.operands.push_back(lp.regOrImm(toks[2]));
      if (!suffix)
        inst.width = 0;
      break;
    }

    for (auto &pl : pendingLabels)
      p.labels[pl.first] = static_cast<Pc>(instIndex);
    pendingLabels.clear();
    p.instructions.push_back(std::move(inst));
  }

  if (!pendingLabels.empty()) {
    const auto &pl = pendingLabels.front();
    throw ParseError(pl.second.first, pl.second.second,
                     fmt::format("label '{}' has no instruction", pl.first));
  }
  if (p.instructions.empty())
    throw ParseError(lineNo, 1, "program has no instructions");

  for (const auto &ref : labelRefs) {
    const auto &name =
        std::get<NameOperand>(p.instructions[ref.inst].operands[ref.operand])
            .name;
    if (!p.labels.count(name))
      throw ParseError(ref.line, ref.column,
                       fmt::format("unresolved label '{}'", name));
  }

  for (const auto &label : p.labels)
    if (p.findRegion(label.first))
      throw ParseError(p.instructions[label.second].line, 1,
                       fmt::format("'{}' is both a label and a region",
                                   label.first));

  for (auto &inst : p.instructions) {
    if (inst.op != Opcode::Addrof)
      continue;
    const auto &name = std::get<NameOperand>(inst.operands[1]).name;
    if (!p.labels.count(name) && !p.findRegion(name))
      throw ParseError(inst.line, 1,
                       fmt::format("unresolved name '{}'", name));
  }

  // Reclassify memory terms now that all regions are known.
  for (const auto &[idx, line] : memRefs) {
    auto &inst = p.instructions[idx];
    auto &m = std::get<MemOperand>(
        inst.operands[inst.op == Opcode::Load ? 1 : 0]);
    std::vector<std::string> terms;
    if (m.baseReg)
      terms.push_back(*m.baseReg);
    if (m.offsetReg)
      terms.push_back(*m.offsetReg);
    MemOperand fixed;
    fixed.offsetImm = m.offsetImm;
    for (auto &t : terms) {
      if (p.findRegion(t)) {
        if (fixed.region)
          throw ParseError(line, 1, "memory operand names two regions");
        fixed.region = t;
      } else if (!fixed.baseReg) {
        fixed.baseReg = t;
      } else {
        fixed.offsetReg = t;
      }
    }
    if (fixed.region && fixed.baseReg) {
      fixed.offsetReg = fixed.baseReg;
      fixed.baseReg.reset();
    }
    m = fixed;
  }

  if (entryDecl) {
    auto it = p.labels.find(entryDecl->first);
    if (it == p.labels.end())
      throw ParseError(entryDecl->second, 1,
                       fmt::format("unresolved label '{}'", entryDecl->first));
    p.entry = it->second;
    p.entryLabel = entryDecl->first;
  }
  return p;
}

Program layoutRegions(Program p, Address base, std::uint32_t lineSize) {
  if (lineSize == 0 || (lineSize & (lineSize - 1)) != 0)
    throw LayoutError("line size must be a power of two");
  if (base % lineSize != 0)
    throw LayoutError(
        fmt::format("base 0x{:x} is not aligned to {}", base, lineSize));
  std::uint64_t cur = base;
  for (auto &r : p.regions) {
    cur = (cur + lineSize - 1) / lineSize * lineSize;
    if (cur + r.size > (std::uint64_t(1) << 32))
      throw LayoutError(
          fmt::format("region '{}' overflows the 32-bit address space",
                      r.name));
    r.base = static_cast<Address>(cur);
    cur += r.size;
  }
  return p;
}

namespace {

std::string printOperand(const Operand &o) {
  return std::visit(
      [](const auto &v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, RegOperand>) {
          return v.name;
        } else if constexpr (std::is_same_v<T, ImmOperand>) {
          return std::to_string(v.value);
        } else if constexpr (std::is_same_v<T, NameOperand>) {
          return v.name;
        } else {
          std::vector<std::string> terms;
          if (v.region)
            terms.push_back(*v.region);
          if (v.baseReg)
            terms.push_back(*v.baseReg);
          if (v.offsetReg)
            terms.push_back(*v.offsetReg);
          if (v.offsetImm != 0 || terms.empty())
            terms.push_back(std::to_string(v.offsetImm));
          return fmt::format("[{}]", fmt::join(terms, " + "));
        }
      },
      o);
}

bool printsWidth(const Instruction &inst) {
  switch (inst.op) {
  case Opcode::Const:
  case Opcode::Sym:
  case Opcode::Zext:
  case Opcode::Trunc:
  case Opcode::Load:
  case Opcode::Store:
    return true;
  default:
    return (isBinaryOp(inst.op) || isUnaryOp(inst.op)) && inst.width != 0;
  }
}

} // namespace

std::string printInstruction(const Program &, const Instruction &inst) {
  std::string s(opcodeName(inst.op));
  if (printsWidth(inst))
    s += fmt::format(".{}", inst.width);
  std::vector<std::string> ops;
  for (const auto &o : inst.operands)
    ops.push_back(printOperand(o));
  if (inst.op == Opcode::Sym) {
    ops.push_back(std::to_string(inst.symBits));
    if (inst.symSecret)
      ops.push_back("secret");
  }
  if (!ops.empty())
    s += " " + fmt::format("{}", fmt::join(ops, ", "));
  return s;
}

std::string printProgram(const Program &p) {
  std::string out;
  for (const auto &r : p.regions) {
    out += fmt::format("region {} {}", r.name, r.size);
    if (r.secret)
      out += " secret";
    if (r.isSymbolic() && r.symbolicBits != 8)
      out += fmt::format(" bits={}", r.symbolicBits);
    if (!r.init.empty()) {
      out += " init=";
      for (auto b : r.init)
        out += fmt::format("{:02x}", b);
    }
    out += "\n";
  }
  if (p.entryLabel)
    out += fmt::format("entry {}\n", *p.entryLabel);
  std::multimap<Pc, std::string> byPc;
  for (const auto &[name, pc] : p.labels)
    byPc.emplace(pc, name);
  for (Pc pc = 0; pc < p.instructions.size(); ++pc) {
    auto [lo, hi] = byPc.equal_range(pc);
    for (auto it = lo; it != hi; ++it)
      out += it->second + ":\n";
    out += "  " + printInstruction(p, p.instructions[pc]) + "\n";
  }
  return out;
}

} // namespace predspec
