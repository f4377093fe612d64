#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "honeymesh/types.hpp"

namespace honeymesh::core {

enum class NodeKind : std::uint8_t {
  ClientHost,
  AttackAgent,
  Handler,
  Router,
  Firewall,
  ProductionServer,
  HoneyFarmHost,
  HoneyVm,
};

enum class FirewallRole : std::uint8_t { External, Internal };

std::string_view to_string(NodeKind k);
std::optional<NodeKind> parse_node_kind(std::string_view s);

struct NodeInfo {
  NodeId id = kNoNode;
  std::string name;
  NodeKind kind = NodeKind::ClientHost;
  Address address;
  FirewallRole fw_role = FirewallRole::External;
  NodeId hosted_on = kNoNode;  // HoneyVm -> its HoneyFarmHost
};

struct LinkSpec {
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  SimTime latency_ms = 1;
  std::int64_t bandwidth_pkts_per_ms = 1;
};

/// Static network structure: nodes, links and the shortest-path forwarding
/// tables derived from them. Immutable once finalized.
class Topology {
 public:
  NodeId add_node(std::string name, NodeKind kind, Address address,
                  FirewallRole role = FirewallRole::External, NodeId hosted_on = kNoNode);
  void add_link(NodeId a, NodeId b, SimTime latency_ms, std::int64_t bandwidth_pkts_per_ms);

  /// Computes forwarding tables and zones. Throws ValidationError on
  /// dangling hosting references.
  void finalize();
  bool finalized() const noexcept { return finalized_; }

  /// Checks the DMZ layering: every external host reaches production servers
  /// and the honey farm only through an external firewall, and every
  /// production server hangs off a router.
  void validate_layering() const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const NodeInfo& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<NodeInfo>& nodes() const noexcept { return nodes_; }
  const std::vector<LinkSpec>& links() const noexcept { return links_; }

  std::optional<NodeId> find_by_address(Address a) const;
  std::optional<NodeId> find_by_name(const std::string& name) const;
  std::vector<NodeId> nodes_of_kind(NodeKind k) const;

  /// Neighbors sorted by id.
  const std::vector<NodeId>& neighbors(NodeId id) const { return adjacency_.at(id); }
  std::optional<std::size_t> link_index(NodeId from, NodeId to) const;

  /// Next hop from `from` toward node `to`, following links. HoneyVm nodes are
  /// reached through their host.
  std::optional<NodeId> next_hop(NodeId from, NodeId to) const;

  /// Outside the external firewall (or not part of the topology at all).
  bool is_external(Address a) const;
  bool is_outside_node(NodeId id) const { return outside_.at(id); }

  /// True if a packet arriving at firewall `fw` from `from` is inbound traffic
  /// that the firewall must filter.
  bool is_inbound_side(NodeId fw, NodeId from) const;

 private:
  // Resolves HoneyVm -> host for forwarding purposes.
  NodeId forwarding_endpoint(NodeId id) const;

  std::vector<NodeInfo> nodes_;
  std::vector<LinkSpec> links_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::map<std::pair<NodeId, NodeId>, std::size_t> link_lookup_;
  std::unordered_map<std::uint32_t, NodeId> by_address_;
  std::map<std::string, NodeId> by_name_;
  std::vector<std::vector<NodeId>> next_hop_;  // [from][to]
  std::vector<bool> outside_;
  std::map<std::pair<NodeId, NodeId>, bool> inbound_side_;  // (fw, neighbor)
  bool finalized_ = false;
};

struct RoutingTable {
  std::map<Address, NodeId> default_routes;
  std::vector<std::pair<Address, NodeId>> redirects;  // (claimed source, farm)

  std::optional<NodeId> redirect_for(Address source) const;
};

struct FirewallRuleSet {
  std::set<Address> blocked_sources;
};

enum class FilterResult : std::uint8_t { Allow, Drop };

struct RouteDecision {
  NodeId next_hop = kNoNode;
  bool redirected = false;
  NodeId farm = kNoNode;
};

/// Mutable network state for one run: routing tables with redirects, firewall
/// rule sets, per-direction link FIFOs and counters.
class Network {
 public:
  static constexpr std::size_t kDefaultLinkQueueCap = 1000;

  explicit Network(Topology topo, std::size_t link_queue_cap = kDefaultLinkQueueCap);

  const Topology& topology() const noexcept { return topo_; }

  /// Next hop for a packet at a router. Redirects on the claimed source take
  /// precedence for traffic heading into the protected zone. Throws NoRoute.
  NodeId route(NodeId router, const Packet& pkt) const;
  RouteDecision route_decision(NodeId router, const Packet& pkt) const;

  /// Next hop for a packet at any forwarding node (honours redirect_to).
  /// Throws NoRoute.
  NodeId forward(NodeId node, const Packet& pkt) const;

  FilterResult firewall_filter(NodeId fw, const Packet& pkt);
  /// firewall_filter for inbound traffic that also records when each claimed
  /// source was last admitted.
  FilterResult admit_inbound(NodeId fw, const Packet& pkt, SimTime now);

  /// Throws InvalidTarget when `farm` is not a HoneyFarmHost.
  void install_redirect(NodeId router, Address source, NodeId farm);
  void block_source(NodeId fw, Address source);

  const RoutingTable& routing(NodeId router) const;
  const FirewallRuleSet& rules(NodeId fw) const;

  /// Enqueues a packet on the (from -> to) link. Returns the arrival time at
  /// `to`, or nullopt when the link FIFO is full and the packet is dropped.
  std::optional<SimTime> transmit(NodeId from, NodeId to, SimTime now);

  std::uint64_t firewall_drops(NodeId fw) const;
  std::uint64_t firewall_drops_total() const;
  std::optional<SimTime> last_admitted(NodeId fw, Address source) const;
  std::uint64_t link_drops() const noexcept { return link_drops_; }
  std::size_t link_backlog(NodeId from, NodeId to, SimTime now);

 private:
  struct LinkQueue {
    SimTime latency = 1;
    std::int64_t bandwidth = 1;
    SimTime slot_time = 0;
    std::int64_t slot_used = 0;
    std::deque<SimTime> departures;
  };

  void require_kind(NodeId id, core::NodeKind kind, const char* what) const;

  Topology topo_;
  std::size_t link_queue_cap_;
  std::vector<LinkQueue> link_queues_;  // 2 per link: [2i] a->b, [2i+1] b->a
  std::map<NodeId, RoutingTable> routing_;
  std::map<NodeId, FirewallRuleSet> firewalls_;
  std::map<NodeId, std::uint64_t> fw_drops_;
  std::map<NodeId, std::unordered_map<std::uint32_t, SimTime>> admitted_;
  std::uint64_t link_drops_ = 0;
};

}  // namespace honeymesh::core
