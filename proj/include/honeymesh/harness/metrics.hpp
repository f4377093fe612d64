#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "honeymesh/harness/trace.hpp"

namespace honeymesh::harness {

struct ScenarioTiming {
  std::int64_t index = 0;
  std::string attack;
  SimTime start_ms = 0;
  std::optional<SimTime> time_to_first_confirm_ms;
  std::optional<SimTime> time_to_first_block_ms;

  friend bool operator==(const ScenarioTiming&, const ScenarioTiming&) = default;
};

struct MetricsReport {
  std::uint64_t seed = 0;
  SimTime duration_ms = 0;
  std::uint64_t legit_sent = 0;
  std::uint64_t legit_served = 0;
  std::uint64_t legit_dropped = 0;
  std::uint64_t legit_in_flight = 0;
  double legit_success_rate = 1.0;
  double latency_mean_ms = 0.0;
  double latency_p95_ms = 0.0;
  double latency_p99_ms = 0.0;
  std::vector<ScenarioTiming> scenarios;
  std::vector<std::uint32_t> false_positive_sources;
  std::vector<std::uint32_t> false_negative_sources;
  std::uint64_t production_crashes = 0;
  std::vector<std::string> crash_causes;
  std::uint64_t honeypot_compromises = 0;
  std::uint64_t failovers = 0;
  std::uint64_t pool_exhaustions = 0;
  SimTime coverage_gap_ms = 0;
  std::uint64_t firewall_drops = 0;
  std::uint64_t link_drops = 0;
  std::uint64_t noroute_drops = 0;
  std::vector<std::uint64_t> series_sent;
  std::vector<std::uint64_t> series_served;
  std::vector<double> series_success_rate;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Builds a MetricsReport from trace records alone. The simulation feeds it
/// live; `report --trace` feeds it from a file, so both agree exactly.
class MetricsAccumulator {
 public:
  void consume(const TraceRecord& r);
  MetricsReport finish() const;

 private:
  std::uint64_t seed_ = 0;
  SimTime duration_ = 0;
  std::uint64_t sent_ = 0;
  std::uint64_t served_ = 0;
  std::uint64_t dropped_ = 0;
  std::vector<std::int64_t> latencies_;
  std::unordered_map<std::int64_t, std::size_t> request_bucket_;
  std::vector<std::uint64_t> series_sent_;
  std::vector<std::uint64_t> series_served_;
  std::vector<ScenarioTiming> scenarios_;
  std::map<std::int64_t, std::set<std::uint32_t>> scenario_sources_;
  std::map<std::uint32_t, SimTime> first_confirm_;
  std::map<std::uint32_t, SimTime> first_block_;
  std::uint64_t crashes_ = 0;
  std::vector<std::string> crash_causes_;
  std::uint64_t compromises_ = 0;
  std::uint64_t failovers_ = 0;
  std::uint64_t exhaustions_ = 0;
  std::map<std::int64_t, std::int64_t> vm_profile_;
  std::map<std::int64_t, bool> vm_operational_;
  std::map<std::int64_t, std::optional<SimTime>> gap_since_;  // per profile
  SimTime gap_total_ = 0;
  SimTime end_t_ = 0;
  std::uint64_t fw_drops_ = 0;
  std::uint64_t link_drops_ = 0;
  std::uint64_t noroute_drops_ = 0;
};

MetricsReport report_from_trace(const std::vector<TraceRecord>& records);

/// Nearest-rank percentile of an ascending sample; 0 when empty.
double nearest_rank(const std::vector<std::int64_t>& sorted, double pct);

nlohmann::ordered_json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::ordered_json& j);
std::string report_json_text(const MetricsReport& r);

const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string csv_row(const MetricsReport& r);
MetricsReport report_from_csv_row(const std::string& row);

}  // namespace honeymesh::harness
