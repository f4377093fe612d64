#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "honeymesh/harness/metrics.hpp"

namespace honeymesh::harness {

struct SweepRow {
  double value = 0.0;
  MetricsReport report;
};

struct SweepResult {
  std::string axis;  // resolved dotted path
  std::vector<SweepRow> rows;
};

/// Resolves an axis name against a config document. Accepts a dotted path
/// ("defense.engagement_window_ms", "attacks.0.rate_pkts_per_ms") or a bare
/// field name that names exactly one numeric field. Throws UnknownAxis.
std::string resolve_axis(const nlohmann::json& doc, const std::string& axis);

/// Copy of `doc` with the numeric field at `path` set to `value`. Integer
/// fields only take integral values. Throws UnknownAxis / ValidationError.
nlohmann::json with_axis_value(const nlohmann::json& doc, const std::string& path, double value);

/// One run per value, all with the document's seed.
SweepResult sweep(const nlohmann::json& doc, const std::string& axis, const std::vector<double>& values);

/// Comparison table: "axis,value," followed by the report columns.
std::string sweep_table(const SweepResult& r);

/// "0,10000,2.5" -> {0, 10000, 2.5}. Throws ValidationError.
std::vector<double> parse_value_list(const std::string& text);

}  // namespace honeymesh::harness
