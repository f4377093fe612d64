#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "honeymesh/control.hpp"
#include "honeymesh/core/topology.hpp"
#include "honeymesh/detection.hpp"
#include "honeymesh/honeyfarm.hpp"
#include "honeymesh/victim.hpp"

namespace honeymesh::harness {

struct NodeConfig {
  std::string id;
  core::NodeKind kind = core::NodeKind::ClientHost;
  Address address;
  core::FirewallRole role = core::FirewallRole::External;
  std::string hosted_on;
};

struct LinkConfig {
  std::string a;
  std::string b;
  SimTime latency_ms = 1;
  std::int64_t bandwidth_pkts_per_ms = 10;
};

struct ServerSpec {
  std::string node;
  farm::Service service = farm::Service::Web;
  victim::ServerConfig config;
};

struct LegitSpec {
  std::vector<std::string> clients;
  std::string target;
  double request_rate_per_client = 0.001;
  double request_size_mean = 500.0;
  double request_size_stddev = 100.0;
  double answer_challenges = 1.0;
};

struct AttackSpec {
  AttackType attack = AttackType::SynFlood;
  std::vector<std::string> agents;
  std::vector<Address> spoof_pool;
  Address target;
  double rate_pkts_per_ms = 1.0;
  SimTime start_ms = 0;
  SimTime end_ms = 1;
  double p_bot_l1 = 0.0;
};

struct ProfileSpec {
  farm::HoneyVmProfile profile;
  std::vector<std::string> vms;
};

struct FarmSpec {
  std::string host;
  SimTime restore_delay_ms = 30000;
  std::vector<ProfileSpec> profiles;
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  SimTime duration_ms = 60000;
  std::string output_dir = "out";
  std::vector<NodeConfig> nodes;
  std::vector<LinkConfig> links;
  std::size_t link_queue_cap = core::Network::kDefaultLinkQueueCap;
  std::vector<ServerSpec> servers;
  std::vector<LegitSpec> legit;
  std::vector<AttackSpec> attacks;
  std::optional<FarmSpec> farm;
  control::DefensePolicy defense;
  detection::DetectionConfig detection;

  /// Builds and checks the topology. Throws ValidationError.
  core::Topology build_topology() const;
};

/// Strict JSON text -> document. Throws ParseError carrying the line.
nlohmann::json parse_json_text(std::string_view text);

/// Schema-checked conversion: unknown keys and wrong types raise ParseError
/// naming the field; dangling references and bad values raise
/// ValidationError.
ScenarioConfig config_from_json(const nlohmann::json& doc);

ScenarioConfig parse_config(std::string_view text);
/// Throws IoError when the file cannot be read.
ScenarioConfig load_config(const std::string& path);
std::string read_file(const std::string& path);

}  // namespace honeymesh::harness
