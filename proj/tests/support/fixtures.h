//===-- fixtures.h - Access to shipped fixtures and patterns ----*- C++ -*-===//

#ifndef PREDSPEC_TESTS_FIXTURES_H
#define PREDSPEC_TESTS_FIXTURES_H

#include "predspec/engine.h"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace predspec::testing {

inline std::string readText(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixturePath(const std::string &name) {
  return std::string(PREDSPEC_FIXTURE_DIR) + "/" + name;
}

inline std::string patternPath(const std::string &name) {
  return std::string(PREDSPEC_PATTERN_DIR) + "/" + name;
}

inline Program loadFixture(const std::string &name) {
  return layoutRegions(parseProgram(readText(fixturePath(name))));
}

inline MonitorSpec loadShippedPattern(const std::string &name) {
  return loadPattern(readText(patternPath(name)));
}

} // namespace predspec::testing

#endif
