#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "honeymesh/types.hpp"

namespace honeymesh::harness {

enum class RecordKind : std::uint8_t {
  RunStart,
  AttackScenario,
  LegitSent,
  LegitServed,
  LegitDropped,
  AttackSource,
  Defense,
  Crash,
  RebootStart,
  RebootDone,
  VmState,
  VmCompromised,
  Failover,
  PoolExhausted,
  VmRestored,
  VmLog,
  FwDrops,
  RunEnd,
};

std::string_view to_string(RecordKind k);
std::optional<RecordKind> parse_record_kind(std::string_view s);

/// One line of the run trace. Which slots a kind uses, and the JSON field
/// names they are written under, is fixed per kind (see trace.cpp and the
/// README).
struct TraceRecord {
  SimTime t = 0;
  RecordKind kind = RecordKind::RunStart;
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 0;
  std::string s1;
  std::string s2;
  std::string s3;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// One JSON object, no trailing newline.
std::string serialize(const TraceRecord& r);
/// Throws ParseError (with line) on malformed or unknown content.
TraceRecord parse_record(std::string_view line, int line_no = 0);

std::string serialize_trace(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> parse_trace(std::string_view text);

}  // namespace honeymesh::harness
