//===-- random_program.cpp - Random SIR programs ---------------------------===//

#include "random_program.h"

#include <fmt/format.h>

#include <vector>

namespace predspec::testing {

namespace {

unsigned pick(std::mt19937 &rng, unsigned lo, unsigned hi) {
  return std::uniform_int_distribution<unsigned>(lo, hi)(rng);
}

bool coin(std::mt19937 &rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

const char *const kRegs[] = {"a", "b", "c", "d"};

std::string reg(std::mt19937 &rng) { return kRegs[pick(rng, 0, 3)]; }

/// One straight-line instruction; never touches control flow.
std::string dataInstruction(std::mt19937 &rng, const GenOptions &o) {
  switch (pick(rng, 0, 11)) {
  case 0:
    return fmt::format("const.32 {}, {}", reg(rng), pick(rng, 0, 80));
  case 1:
    return fmt::format("sym.32 {}, x, 7", reg(rng));
  case 2: {
    static const char *const ops[] = {"add", "sub", "mul", "and",
                                      "or",  "xor", "shl", "lshr"};
    const char *op = ops[pick(rng, 0, 7)];
    if (coin(rng))
      return fmt::format("{} {}, {}, {}", op, reg(rng), reg(rng), reg(rng));
    return fmt::format("{} {}, {}, {}", op, reg(rng), reg(rng),
                       pick(rng, 0, 70));
  }
  case 3: {
    static const char *const ops[] = {"lt", "le", "eq", "ne"};
    return fmt::format("{} {}, {}, {}", ops[pick(rng, 0, 3)], reg(rng),
                       reg(rng), pick(rng, 0, 70));
  }
  case 4:
  case 5:
    return fmt::format("load.8 {}, [pub + {}]", reg(rng), reg(rng));
  case 6:
    return fmt::format("load.8 {}, [probe + {}]", reg(rng), reg(rng));
  case 7:
    if (o.allowStores)
      return fmt::format("store.8 [pub + {}], {}", reg(rng), reg(rng));
    return fmt::format("and {}, {}, 127", reg(rng), reg(rng));
  case 8:
    return fmt::format("and {}, {}, 127", reg(rng), reg(rng));
  case 9:
    return fmt::format("load.8 {}, [key + {}]", reg(rng), pick(rng, 0, 3));
  case 10:
    return fmt::format("zext.32 {}, {}", reg(rng), reg(rng));
  default:
    return fmt::format("mul {}, {}, 64", reg(rng), reg(rng));
  }
}

} // namespace

std::string randomProgramText(std::mt19937 &rng, const GenOptions &o) {
  std::string init;
  for (int i = 0; i < 16; ++i)
    init += fmt::format("{:02x}", pick(rng, 0, 3));

  std::vector<std::string> lines;
  lines.push_back("region pub 16 init=" + init);
  lines.push_back("region key 4 secret bits=1");
  lines.push_back("region probe 256");
  lines.push_back("entry main");
  lines.push_back("main:");
  for (const char *r : kRegs)
    lines.push_back(fmt::format("  const.32 {}, 0", r));
  lines.push_back("  const.32 t, 0");
  lines.push_back("  sym.32 a, x, 7");
  if (coin(rng))
    lines.push_back("  sym.32 b, y, 2");

  const unsigned body = pick(rng, o.minBody, o.maxBody);
  // Labels L0..L{body} sit before body slots; the last one precedes `halt`.
  for (unsigned i = 0; i < body; ++i) {
    lines.push_back(fmt::format("L{}:", i));
    const unsigned kind = pick(rng, 0, 9);
    if (kind <= 1) {
      const unsigned t = pick(rng, i + 1, body);
      const unsigned f = pick(rng, i + 1, body);
      const std::string lhs = coin(rng) ? "a" : reg(rng);
      lines.push_back(fmt::format("  lt t, {}, {}", lhs, pick(rng, 1, 70)));
      lines.push_back(fmt::format("  br t, L{}, L{}", t, f));
    } else if (kind == 2) {
      // Bounds check guarding two dependent loads.
      lines.push_back(fmt::format("  lt t, a, {}", pick(rng, 8, 20)));
      lines.push_back(fmt::format("  br t, G{}, L{}", i, i + 1));
      lines.push_back(fmt::format("G{}:", i));
      lines.push_back("  load.8 d, [pub + a]");
      lines.push_back("  zext.32 d, d");
      lines.push_back("  mul d, d, 64");
      lines.push_back("  load.8 d, [probe + d]");
    } else if (kind == 3 && coin(rng, 0.3)) {
      lines.push_back(fmt::format("  jmp L{}", pick(rng, i + 1, body)));
    } else if (kind == 4 && o.allowCalls && coin(rng, 0.4)) {
      lines.push_back("  call helper");
    } else if (kind == 5 && o.allowIndirect && coin(rng, 0.4)) {
      lines.push_back(fmt::format("  addrof f, {}", coin(rng) ? "helper" : "helper2"));
      lines.push_back("  icall f");
    } else {
      lines.push_back("  " + dataInstruction(rng, o));
    }
  }
  lines.push_back(fmt::format("L{}:", body));
  lines.push_back("  halt");

  for (const char *fn : {"helper", "helper2"}) {
    lines.push_back(fmt::format("{}:", fn));
    const unsigned n = pick(rng, 1, 4);
    for (unsigned i = 0; i < n; ++i)
      lines.push_back("  " + dataInstruction(rng, o));
    lines.push_back("  ret");
  }

  std::string text;
  for (const auto &l : lines)
    text += l + "\n";
  return text;
}

Program randomProgram(std::mt19937 &rng, const GenOptions &o) {
  return layoutRegions(parseProgram(randomProgramText(rng, o)));
}

PredictorConfig randomPredictor(std::mt19937 &rng) {
  PredictorConfig cfg;
  const unsigned kind = pick(rng, 0, 2);
  if (kind != 1)
    cfg.twoLevel = TwoLevelParams{pick(rng, 1, 4)};
  if (kind != 0) {
    cfg.btb = BtbParams{1u << pick(rng, 0, 2), pick(rng, 1, 2), pick(rng, 1, 4)};
    if (coin(rng))
      cfg.fallback = StaticFallback::Btfnt;
  }
  cfg.initCounter = static_cast<std::uint8_t>(pick(rng, 0, 3));
  cfg.window = pick(rng, 0, 12);
  return cfg;
}

PredictorConfig randomPhtPredictor(std::mt19937 &rng) {
  PredictorConfig cfg;
  cfg.twoLevel = TwoLevelParams{pick(rng, 1, 4)};
  cfg.initCounter = static_cast<std::uint8_t>(pick(rng, 0, 3));
  cfg.window = pick(rng, 1, 16);
  return cfg;
}

} // namespace predspec::testing
