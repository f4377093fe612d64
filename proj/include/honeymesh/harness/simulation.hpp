#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "honeymesh/control.hpp"
#include "honeymesh/core/engine.hpp"
#include "honeymesh/core/topology.hpp"
#include "honeymesh/detection.hpp"
#include "honeymesh/harness/config.hpp"
#include "honeymesh/harness/metrics.hpp"
#include "honeymesh/harness/trace.hpp"
#include "honeymesh/honeyfarm.hpp"
#include "honeymesh/traffic.hpp"
#include "honeymesh/victim.hpp"

namespace honeymesh::harness {

using BaselineSet = std::map<farm::Service, detection::BaselineModel>;

/// Legit-only warmup run with attacks and defenses off. Collects the request
/// packets each service receives and trains one baseline per service on the
/// first warmup_n of them. Throws InsufficientSample when a service never
/// collects enough.
BaselineSet train_baselines(const ScenarioConfig& cfg);

struct RunResult {
  MetricsReport report;
  std::vector<TraceRecord> trace;
};

/// One complete run: warmup (when a defense is on), then the main phase.
RunResult run_scenario(const ScenarioConfig& cfg);

/// Writes trace.jsonl, report.json and report.csv into `dir` (created if
/// needed). Throws IoError.
void write_run(const RunResult& run, const std::string& dir);

/// Event-driven execution of one configured scenario. Exposed for tests that
/// need to look at component state after a run.
class Simulation {
 public:
  enum class Phase : std::uint8_t { Warmup, Main };

  Simulation(const ScenarioConfig& cfg, Phase phase, const BaselineSet* baselines = nullptr);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Runs the main phase to duration_ms and finalizes the trace.
  RunResult run();
  /// Warmup phase: runs until every listed service has `n` observations or
  /// `limit_ms` passes. Returns the observations per service.
  std::map<farm::Service, std::vector<detection::Observation>> collect(const std::set<farm::Service>& services,
                                                                       std::size_t n, SimTime limit_ms);

  void record_event_order(bool on);
  const std::vector<std::pair<SimTime, std::uint64_t>>& event_order() const;

  const core::Network& network() const;
  const victim::ProductionServer& server(NodeId node) const;
  const farm::HoneyFarm* honey_farm() const;
  std::uint64_t farm_sunk() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace honeymesh::harness
