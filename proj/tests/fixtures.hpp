#pragma once

#include <fstream>
#include <stdexcept>

#include <json.hpp>

// Frozen reference values produced by tests/oracles/derive_fixtures.py.
inline const nlohmann::json& oracles() {
  static const nlohmann::json doc = [] {
    std::ifstream in(HM_FIXTURES);
    if (!in) throw std::runtime_error("missing fixture file " HM_FIXTURES);
    return nlohmann::json::parse(in);
  }();
  return doc;
}
