#include "honeymesh/harness/trace.hpp"

#include <array>

#include <json.hpp>

#include "honeymesh/errors.hpp"

namespace honeymesh::harness {

namespace {

struct Schema {
  std::string_view name;
  std::array<std::string_view, 4> ints;     // a, b, c, d
  std::array<std::string_view, 3> strings;  // s1, s2, s3
};

constexpr std::array<Schema, 18> kSchemas = {{
    {"run_start", {"duration_ms", "scenarios", "", ""}, {"seed", "", ""}},
    {"attack_scenario", {"index", "start_ms", "end_ms", ""}, {"attack", "", ""}},
    {"legit_sent", {"request", "client", "", ""}, {"", "", ""}},
    {"legit_served", {"request", "latency_ms", "", ""}, {"", "", ""}},
    {"legit_dropped", {"request", "", "", ""}, {"reason", "", ""}},
    {"attack_source", {"scenario", "address", "", ""}, {"", "", ""}},
    {"defense", {"source", "", "", ""}, {"event", "origin", "detail"}},
    {"crash", {"node", "", "", ""}, {"cause", "server", ""}},
    {"reboot_start", {"node", "until", "", ""}, {"", "server", ""}},
    {"reboot_done", {"node", "", "", ""}, {"", "server", ""}},
    {"vm_state", {"vm", "profile", "", ""}, {"state", "name", ""}},
    {"vm_compromised", {"vm", "source", "", ""}, {"cause", "name", ""}},
    {"failover", {"vm", "activated", "", ""}, {"service", "name", ""}},
    {"pool_exhausted", {"profile", "", "", ""}, {"service", "", ""}},
    {"vm_restored", {"vm", "", "", ""}, {"", "name", ""}},
    {"vm_log", {"vm", "at", "src", "size"}, {"packet", "action", "protocol"}},
    {"fw_drops", {"node", "drops", "", ""}, {"", "firewall", ""}},
    {"run_end", {"link_drops", "noroute_drops", "farm_delivered", ""}, {"", "", ""}},
}};

const Schema& schema(RecordKind k) { return kSchemas.at(static_cast<std::size_t>(k)); }

template <typename Record>
auto* int_slot(Record& r, std::size_t i) {
  switch (i) {
    case 0:
      return &r.a;
    case 1:
      return &r.b;
    case 2:
      return &r.c;
    default:
      return &r.d;
  }
}

template <typename Record>
auto* str_slot(Record& r, std::size_t i) {
  switch (i) {
    case 0:
      return &r.s1;
    case 1:
      return &r.s2;
    default:
      return &r.s3;
  }
}

}  // namespace

std::string_view to_string(RecordKind k) { return schema(k).name; }

std::optional<RecordKind> parse_record_kind(std::string_view s) {
  for (std::size_t i = 0; i < kSchemas.size(); ++i) {
    if (kSchemas[i].name == s) return static_cast<RecordKind>(i);
  }
  return std::nullopt;
}

std::string serialize(const TraceRecord& r) {
  const auto& sc = schema(r.kind);
  std::string out = "{\"t\":" + std::to_string(r.t) + ",\"kind\":\"" + std::string(sc.name) + "\"";
  for (std::size_t i = 0; i < sc.ints.size(); ++i) {
    if (sc.ints[i].empty()) continue;
    out += ",\"" + std::string(sc.ints[i]) + "\":" + std::to_string(*int_slot(r, i));
  }
  for (std::size_t i = 0; i < sc.strings.size(); ++i) {
    if (sc.strings[i].empty()) continue;
    out += ",\"" + std::string(sc.strings[i]) + "\":" + nlohmann::json(*str_slot(r, i)).dump();
  }
  out += "}";
  return out;
}

TraceRecord parse_record(std::string_view line, int line_no) {
  auto fail = [line_no](const std::string& what) -> ParseError {
    return ParseError("trace line " + std::to_string(line_no) + ": " + what, line_no);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw fail(e.what());
  }
  if (!j.is_object()) throw fail("expected object");
  if (!j.contains("t") || !j["t"].is_number_integer()) throw fail("missing integer 't'");
  if (!j.contains("kind") || !j["kind"].is_string()) throw fail("missing string 'kind'");
  auto kind = parse_record_kind(j["kind"].get<std::string>());
  if (!kind) throw fail("unknown record kind '" + j["kind"].get<std::string>() + "'");
  TraceRecord r;
  r.t = j["t"].get<std::int64_t>();
  r.kind = *kind;
  const auto& sc = schema(*kind);
  std::size_t used = 2;
  for (std::size_t i = 0; i < sc.ints.size(); ++i) {
    if (sc.ints[i].empty()) continue;
    const std::string key(sc.ints[i]);
    if (!j.contains(key) || !j[key].is_number_integer()) throw fail("missing integer '" + key + "'");
    *int_slot(r, i) = j[key].get<std::int64_t>();
    ++used;
  }
  for (std::size_t i = 0; i < sc.strings.size(); ++i) {
    if (sc.strings[i].empty()) continue;
    const std::string key(sc.strings[i]);
    if (!j.contains(key) || !j[key].is_string()) throw fail("missing string '" + key + "'");
    *str_slot(r, i) = j[key].get<std::string>();
    ++used;
  }
  if (j.size() != used) throw fail("unexpected fields for kind '" + std::string(sc.name) + "'");
  return r;
}

std::string serialize_trace(const std::vector<TraceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize(r);
    out += '\n';
  }
  return out;
}

std::vector<TraceRecord> parse_trace(std::string_view text) {
  std::vector<TraceRecord> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = text.substr(pos, end - pos);
    if (!line.empty()) out.push_back(parse_record(line, line_no));
    pos = end + 1;
  }
  return out;
}

}  // namespace honeymesh::harness
