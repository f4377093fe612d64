#include "honeymesh/harness/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "honeymesh/errors.hpp"
#include "honeymesh/harness/config.hpp"
#include "honeymesh/harness/simulation.hpp"

namespace honeymesh::harness {

using nlohmann::json;

namespace {

// Scalar sections whose defaults are swept even when the file omits them.
json with_defaults(json doc) {
  const control::DefensePolicy policy;
  const detection::DetectionConfig det;
  if (doc.is_object()) {
    auto& d = doc["defense"];
    if (d.is_null()) d = json::object();
    if (d.is_object() && !d.contains("engagement_window_ms")) d["engagement_window_ms"] = policy.engagement_window_ms;
    auto& c = doc["detection"];
    if (c.is_null()) c = json::object();
    if (c.is_object()) {
      if (!c.contains("warmup_n")) c["warmup_n"] = det.warmup_n;
      if (!c.contains("suspicion_threshold")) c["suspicion_threshold"] = det.suspicion_threshold;
      if (!c.contains("challenge_timeout_ms")) c["challenge_timeout_ms"] = det.challenge_timeout_ms;
      if (!c.contains("z_cap")) c["z_cap"] = det.z_cap;
      if (!c.contains("idle_evict_ms")) c["idle_evict_ms"] = det.idle_evict_ms;
      if (!c.contains("hold_cap")) c["hold_cap"] = det.hold_cap;
    }
  }
  return doc;
}

json::json_pointer pointer(const std::string& dotted) {
  std::string p;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) p += "/" + part;
  return json::json_pointer(p);
}

const json* lookup(const json& doc, const std::string& dotted) {
  try {
    const auto ptr = pointer(dotted);
    if (!doc.contains(ptr)) return nullptr;
    return &doc.at(ptr);
  } catch (const json::exception&) {
    return nullptr;
  }
}

void find_leaves(const json& j, const std::string& prefix, const std::string& name, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto path = prefix.empty() ? it.key() : prefix + "." + it.key();
      if (it.key() == name && it->is_number()) out.push_back(path);
      find_leaves(*it, path, name, out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) find_leaves(j[i], prefix + "." + std::to_string(i), name, out);
  }
}

std::string fmt_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string resolve_axis(const json& doc, const std::string& axis) {
  const json full = with_defaults(doc);
  if (axis.empty()) throw UnknownAxis("empty axis");
  if (const auto* v = lookup(full, axis); v && v->is_number()) return axis;
  if (axis.find('.') == std::string::npos) {
    std::vector<std::string> hits;
    find_leaves(full, "", axis, hits);
    if (hits.size() == 1) return hits.front();
    if (hits.size() > 1) throw UnknownAxis("axis '" + axis + "' is ambiguous; use a dotted path");
  }
  throw UnknownAxis("axis '" + axis + "' does not name a numeric config field");
}

json with_axis_value(const json& doc, const std::string& path, double value) {
  json full = with_defaults(doc);
  const auto ptr = pointer(resolve_axis(doc, path));
  auto& field = full.at(ptr);
  if (field.is_number_integer()) {
    if (value != std::floor(value) || !std::isfinite(value)) {
      throw ValidationError("axis '" + path + "' is an integer field; got " + fmt_value(value));
    }
    if (field.is_number_unsigned()) {
      if (value < 0) throw ValidationError("axis '" + path + "' must be non-negative");
      field = static_cast<std::uint64_t>(value);
    } else {
      field = static_cast<std::int64_t>(value);
    }
  } else {
    field = value;
  }
  return full;
}

SweepResult sweep(const json& doc, const std::string& axis, const std::vector<double>& values) {
  SweepResult out;
  out.axis = resolve_axis(doc, axis);
  for (double v : values) {
    const auto cfg = config_from_json(with_axis_value(doc, out.axis, v));
    out.rows.push_back({v, run_scenario(cfg).report});
  }
  return out;
}

std::string sweep_table(const SweepResult& r) {
  std::string out = "axis,value," + csv_header() + "\n";
  for (const auto& row : r.rows) out += r.axis + "," + fmt_value(row.value) + "," + csv_row(row.report) + "\n";
  return out;
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      throw ValidationError("sweep value '" + item + "' is not a number");
    }
    if (used != item.size()) throw ValidationError("sweep value '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("sweep needs at least one value");
  return out;
}

}  // namespace honeymesh::harness
