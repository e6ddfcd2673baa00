//===-- test_sir.cpp - SIR parser and layout tests --------------------------===//

#include "doctest.h"
#include "support/fixtures.h"
#include "support/random_program.h"

#include "predspec/sir.h"

#include <random>

using namespace predspec;
using namespace predspec::testing;

TEST_CASE("minimal program") {
  Program p = parseProgram("e: halt\n");
  CHECK(p.instructions.size() == 1);
  CHECK(p.entry == 0);
  CHECK(p.instructions[0].op == Opcode::Halt);
}

TEST_CASE("v01 fixture has nine instructions") {
  Program p = loadFixture("v01.sir");
  // sym, const, lt, br, load, zext, mul, load, halt
  CHECK(p.instructions.size() == 9);
  CHECK(p.instructions[3].op == Opcode::Br);
  CHECK(p.instructions[4].op == Opcode::Load);
  CHECK(p.instructions[7].op == Opcode::Load);
}

TEST_CASE("unresolved label") {
  try {
    parseProgram("const.32 r1, 1\nbr r1, missing, next\nnext: halt\n");
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(std::string(e.what()).find("unresolved label") != std::string::npos);
    CHECK(std::string(e.what()).rfind("2:", 0) == 0);
  }
}

TEST_CASE("parse errors carry a position") {
  CHECK_THROWS_AS(parseProgram("bogus r1\n"), ParseError);
  CHECK_THROWS_AS(parseProgram("load.16 r1, [x]\n"), ParseError);
  CHECK_THROWS_AS(parseProgram("a: halt\na: halt\n"), ParseError);
  CHECK_THROWS_AS(parseProgram("region r 4\nregion r 4\nhalt\n"), ParseError);
  CHECK_THROWS_AS(parseProgram("entry nowhere\nhalt\n"), ParseError);
}

TEST_CASE("layout assigns line-aligned consecutive bases") {
  Program p = parseProgram("region A 16\nregion K 64 secret\nhalt\n");
  Program l = layoutRegions(p, 0x1000, 64);
  CHECK(*l.findRegion("A")->base == 0x1000);
  CHECK(*l.findRegion("K")->base == 0x1040);
  CHECK(l.laidOut());

  Program odd = layoutRegions(parseProgram("region A 65\nregion B 1\nhalt\n"));
  CHECK(*odd.findRegion("B")->base == 0x1080);
}

TEST_CASE("layout of an empty region list leaves the program unchanged") {
  Program p = parseProgram("e: halt\n");
  CHECK(layoutRegions(p, 0x1000, 64) == p);
}

TEST_CASE("layout overflow") {
  Program p = parseProgram(
      "region A 4294967295\nregion B 4294967295\nhalt\n");
  CHECK_THROWS_AS(layoutRegions(p, 0x1000, 64), LayoutError);
}

TEST_CASE("regions never overlap after layout") {
  std::mt19937 rng(11);
  for (int iter = 0; iter < 200; ++iter) {
    std::string text;
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int i = 0; i < n; ++i)
      text += "region r" + std::to_string(i) + " " +
              std::to_string(std::uniform_int_distribution<int>(1, 300)(rng)) +
              "\n";
    text += "halt\n";
    Program l = layoutRegions(parseProgram(text));
    for (std::size_t i = 0; i < l.regions.size(); ++i) {
      const Region &r = l.regions[i];
      CHECK(*r.base % 64 == 0);
      if (i + 1 < l.regions.size())
        CHECK(std::uint64_t(*r.base) + r.size <= *l.regions[i + 1].base);
    }
  }
}

TEST_CASE("secret regions") {
  Program p = layoutRegions(
      parseProgram("region key 4 secret bits=2\nregion k2 2 secret init=0102\n"
                   "halt\n"));
  CHECK(p.findRegion("key")->isSymbolic());
  CHECK(p.findRegion("key")->symbolicBits == 2);
  CHECK(!p.findRegion("k2")->isSymbolic());
  CHECK(p.findRegion("k2")->init == std::vector<std::uint8_t>{1, 2});
}

TEST_CASE("print then parse round-trips the shipped fixtures") {
  for (const char *name :
       {"v01.sir", "v02.sir", "v09_btb.sir", "spectre_v2.sir", "v11.sir",
        "v12.sir"}) {
    CAPTURE(name);
    Program p = parseProgram(readText(fixturePath(name)));
    Program q = parseProgram(printProgram(p));
    CHECK(q == p);
  }
}

TEST_CASE("print then parse round-trips random programs") {
  std::mt19937 rng(5);
  for (int i = 0; i < 300; ++i) {
    Program p = parseProgram(randomProgramText(rng));
    CHECK(parseProgram(printProgram(p)) == p);
  }
}

TEST_CASE("opcode names") {
  for (const char *n : {"br", "load", "store", "icall", "call", "ret", "halt",
                        "jmp", "add", "lt", "sym", "const", "addrof"}) {
    auto op = opcodeFromName(n);
    REQUIRE(op);
    CHECK(opcodeName(*op) == n);
  }
  CHECK(!opcodeFromName("nop"));
}
