#include "honeymesh/core/topology.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "honeymesh/errors.hpp"

namespace honeymesh::core {

namespace {

constexpr std::array<std::string_view, 8> kNodeKindNames = {
    "ClientHost", "AttackAgent", "Handler", "Router", "Firewall", "ProductionServer", "HoneyFarmHost", "HoneyVm",
};

bool forwards_traffic(NodeKind k) { return k == NodeKind::Router || k == NodeKind::Firewall; }

bool is_host_kind(NodeKind k) {
  return k == NodeKind::ClientHost || k == NodeKind::AttackAgent || k == NodeKind::Handler;
}

}  // namespace

std::string_view to_string(NodeKind k) { return kNodeKindNames.at(static_cast<std::size_t>(k)); }

std::optional<NodeKind> parse_node_kind(std::string_view s) {
  for (std::size_t i = 0; i < kNodeKindNames.size(); ++i) {
    if (kNodeKindNames[i] == s) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

NodeId Topology::add_node(std::string name, NodeKind kind, Address address, FirewallRole role, NodeId hosted_on) {
  if (finalized_) throw ValidationError("topology already finalized");
  if (by_name_.count(name)) throw ValidationError("duplicate node name '" + name + "'");
  if (by_address_.count(address.value)) {
    throw ValidationError("duplicate address " + std::to_string(address.value) + " on node '" + name + "'");
  }
  const auto id = static_cast<NodeId>(nodes_.size());
  by_name_.emplace(name, id);
  by_address_.emplace(address.value, id);
  nodes_.push_back(NodeInfo{id, std::move(name), kind, address, role, hosted_on});
  adjacency_.emplace_back();
  return id;
}

void Topology::add_link(NodeId a, NodeId b, SimTime latency_ms, std::int64_t bandwidth_pkts_per_ms) {
  if (finalized_) throw ValidationError("topology already finalized");
  if (a >= nodes_.size() || b >= nodes_.size()) throw ValidationError("link references unknown node");
  if (a == b) throw ValidationError("self-link on node '" + nodes_[a].name + "'");
  if (latency_ms < 1) throw ValidationError("link latency must be >= 1 ms");
  if (bandwidth_pkts_per_ms < 1) throw ValidationError("link bandwidth must be >= 1 pkt/ms");
  if (nodes_[a].kind == NodeKind::HoneyVm || nodes_[b].kind == NodeKind::HoneyVm) {
    throw ValidationError("honey VMs are reached through their host, not by links");
  }
  const auto key = std::minmax(a, b);
  if (link_lookup_.count({key.first, key.second})) {
    throw ValidationError("duplicate link " + nodes_[a].name + " <-> " + nodes_[b].name);
  }
  link_lookup_.emplace(std::pair{key.first, key.second}, links_.size());
  links_.push_back(LinkSpec{a, b, latency_ms, bandwidth_pkts_per_ms});
  auto insert_sorted = [](std::vector<NodeId>& v, NodeId x) { v.insert(std::upper_bound(v.begin(), v.end(), x), x); };
  insert_sorted(adjacency_[a], b);
  insert_sorted(adjacency_[b], a);
}

void Topology::finalize() {
  const std::size_t n = nodes_.size();
  for (const auto& node : nodes_) {
    if (node.kind == NodeKind::HoneyVm) {
      if (node.hosted_on >= n || nodes_[node.hosted_on].kind != NodeKind::HoneyFarmHost) {
        throw ValidationError("honey VM '" + node.name + "' is not hosted on a HoneyFarmHost");
      }
    }
  }

  next_hop_.assign(n, std::vector<NodeId>(n, kNoNode));
  std::vector<NodeId> first_hop(n);
  std::vector<bool> seen(n);
  std::deque<NodeId> frontier;
  for (NodeId s = 0; s < n; ++s) {
    std::fill(seen.begin(), seen.end(), false);
    std::fill(first_hop.begin(), first_hop.end(), kNoNode);
    seen[s] = true;
    frontier.clear();
    frontier.push_back(s);
    while (!frontier.empty()) {
      const NodeId u = frontier.front();
      frontier.pop_front();
      if (u != s && !forwards_traffic(nodes_[u].kind)) continue;
      for (NodeId v : adjacency_[u]) {
        if (seen[v]) continue;
        seen[v] = true;
        first_hop[v] = (u == s) ? v : first_hop[u];
        next_hop_[s][v] = first_hop[v];
        frontier.push_back(v);
      }
    }
  }

  // Outside zone: hosts attached to an external firewall and everything they
  // reach without crossing a firewall.
  outside_.assign(n, false);
  frontier.clear();
  for (const auto& node : nodes_) {
    if (node.kind != NodeKind::Firewall || node.fw_role != FirewallRole::External) continue;
    for (NodeId v : adjacency_[node.id]) {
      if (is_host_kind(nodes_[v].kind) && !outside_[v]) {
        outside_[v] = true;
        frontier.push_back(v);
      }
    }
  }
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId v : adjacency_[u]) {
      if (outside_[v] || nodes_[v].kind == NodeKind::Firewall) continue;
      outside_[v] = true;
      frontier.push_back(v);
    }
  }

  inbound_side_.clear();
  for (const auto& fw : nodes_) {
    if (fw.kind != NodeKind::Firewall) continue;
    for (NodeId nb : adjacency_[fw.id]) {
      bool inbound = false;
      if (fw.fw_role == FirewallRole::External) {
        inbound = outside_[nb];
      } else {
        // Internal firewall: the side from which an external firewall is
        // reachable without passing back through this one.
        std::vector<bool> visited(n, false);
        visited[fw.id] = true;
        visited[nb] = true;
        std::deque<NodeId> q{nb};
        while (!q.empty() && !inbound) {
          const NodeId u = q.front();
          q.pop_front();
          if (nodes_[u].kind == NodeKind::Firewall && nodes_[u].fw_role == FirewallRole::External) inbound = true;
          for (NodeId v : adjacency_[u]) {
            if (!visited[v]) {
              visited[v] = true;
              q.push_back(v);
            }
          }
        }
      }
      inbound_side_[{fw.id, nb}] = inbound;
    }
  }
  finalized_ = true;
}

void Topology::validate_layering() const {
  if (!finalized_) throw ValidationError("topology not finalized");
  bool has_external_fw = false;
  for (const auto& node : nodes_) {
    if (node.kind == NodeKind::Firewall && node.fw_role == FirewallRole::External) has_external_fw = true;
  }
  if (!has_external_fw) throw ValidationError("topology has no external firewall");

  for (const auto& node : nodes_) {
    if (!outside_[node.id]) continue;
    switch (node.kind) {
      case NodeKind::ProductionServer:
      case NodeKind::HoneyFarmHost:
      case NodeKind::Router:
        throw ValidationError("node '" + node.name + "' is reachable from outside without crossing an external firewall");
      default:
        break;
    }
  }
  for (const auto& node : nodes_) {
    if (is_host_kind(node.kind) && !outside_[node.id] && node.kind != NodeKind::ClientHost) {
      throw ValidationError("node '" + node.name + "' must sit outside the external firewall");
    }
  }
  const auto servers = nodes_of_kind(NodeKind::ProductionServer);
  for (NodeId s : servers) {
    const auto& adj = adjacency_[s];
    if (std::none_of(adj.begin(), adj.end(), [&](NodeId v) { return nodes_[v].kind == NodeKind::Router; })) {
      throw ValidationError("production server '" + nodes_[s].name + "' is not attached to a router");
    }
  }
  const auto farms = nodes_of_kind(NodeKind::HoneyFarmHost);
  for (const auto& node : nodes_) {
    if (!outside_[node.id] || !is_host_kind(node.kind)) continue;
    for (NodeId s : servers) {
      if (!next_hop(node.id, s)) {
        throw ValidationError("production server '" + nodes_[s].name + "' unreachable from '" + node.name + "'");
      }
    }
    for (NodeId f : farms) {
      if (!next_hop(node.id, f)) {
        throw ValidationError("honey farm '" + nodes_[f].name + "' unreachable from '" + node.name + "'");
      }
    }
  }
}

std::optional<NodeId> Topology::find_by_address(Address a) const {
  auto it = by_address_.find(a.value);
  if (it == by_address_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> Topology::find_by_name(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> Topology::nodes_of_kind(NodeKind k) const {
  std::vector<NodeId> out;
  for (const auto& node : nodes_) {
    if (node.kind == k) out.push_back(node.id);
  }
  return out;
}

std::optional<std::size_t> Topology::link_index(NodeId from, NodeId to) const {
  const auto key = std::minmax(from, to);
  auto it = link_lookup_.find({key.first, key.second});
  if (it == link_lookup_.end()) return std::nullopt;
  return it->second;
}

NodeId Topology::forwarding_endpoint(NodeId id) const {
  const auto& node = nodes_.at(id);
  return node.kind == NodeKind::HoneyVm ? node.hosted_on : id;
}

std::optional<NodeId> Topology::next_hop(NodeId from, NodeId to) const {
  from = forwarding_endpoint(from);
  to = forwarding_endpoint(to);
  if (from == to) return std::nullopt;
  const NodeId hop = next_hop_.at(from).at(to);
  if (hop == kNoNode) return std::nullopt;
  return hop;
}

bool Topology::is_external(Address a) const {
  auto id = find_by_address(a);
  if (!id) return true;
  return outside_.at(*id);
}

bool Topology::is_inbound_side(NodeId fw, NodeId from) const {
  auto it = inbound_side_.find({fw, from});
  return it != inbound_side_.end() && it->second;
}

std::optional<NodeId> RoutingTable::redirect_for(Address source) const {
  for (const auto& [src, farm] : redirects) {
    if (src == source) return farm;
  }
  return std::nullopt;
}

Network::Network(Topology topo, std::size_t link_queue_cap) : topo_(std::move(topo)), link_queue_cap_(link_queue_cap) {
  if (!topo_.finalized()) topo_.finalize();
  for (const auto& link : topo_.links()) {
    LinkQueue q;
    q.latency = link.latency_ms;
    q.bandwidth = link.bandwidth_pkts_per_ms;
    link_queues_.push_back(q);
    link_queues_.push_back(q);
  }
  for (const auto& node : topo_.nodes()) {
    if (node.kind == NodeKind::Router) {
      RoutingTable table;
      for (const auto& dst : topo_.nodes()) {
        if (auto hop = topo_.next_hop(node.id, dst.id)) table.default_routes.emplace(dst.address, *hop);
      }
      routing_.emplace(node.id, std::move(table));
    } else if (node.kind == NodeKind::Firewall) {
      firewalls_.emplace(node.id, FirewallRuleSet{});
      fw_drops_.emplace(node.id, 0);
    }
  }
}

void Network::require_kind(NodeId id, NodeKind kind, const char* what) const {
  if (id >= topo_.size() || topo_.node(id).kind != kind) {
    throw InvalidTarget(std::string(what) + ": node " + std::to_string(id) + " is not a " +
                        std::string(to_string(kind)));
  }
}

RouteDecision Network::route_decision(NodeId router, const Packet& pkt) const {
  require_kind(router, NodeKind::Router, "route");
  const auto& table = routing_.at(router);
  if (pkt.redirect_to != kNoNode) {
    auto hop = topo_.next_hop(router, pkt.redirect_to);
    if (!hop) throw NoRoute("no path to redirect target");
    return {*hop, true, pkt.redirect_to};
  }
  if (!topo_.is_external(pkt.hdr.dst)) {
    if (auto farm = table.redirect_for(pkt.hdr.src)) {
      auto hop = topo_.next_hop(router, *farm);
      if (!hop) throw NoRoute("no path to honey farm");
      return {*hop, true, *farm};
    }
  }
  auto it = table.default_routes.find(pkt.hdr.dst);
  if (it == table.default_routes.end()) {
    throw NoRoute("router '" + topo_.node(router).name + "' has no route to " + std::to_string(pkt.hdr.dst.value));
  }
  return {it->second, false, kNoNode};
}

NodeId Network::route(NodeId router, const Packet& pkt) const { return route_decision(router, pkt).next_hop; }

NodeId Network::forward(NodeId node, const Packet& pkt) const {
  if (topo_.node(node).kind == NodeKind::Router) return route(node, pkt);
  std::optional<NodeId> target;
  if (pkt.redirect_to != kNoNode) {
    target = pkt.redirect_to;
  } else {
    target = topo_.find_by_address(pkt.hdr.dst);
  }
  if (!target) throw NoRoute("no route to " + std::to_string(pkt.hdr.dst.value));
  auto hop = topo_.next_hop(node, *target);
  if (!hop) throw NoRoute("no path from '" + topo_.node(node).name + "' to '" + topo_.node(*target).name + "'");
  return *hop;
}

FilterResult Network::firewall_filter(NodeId fw, const Packet& pkt) {
  require_kind(fw, NodeKind::Firewall, "firewall_filter");
  const auto& rules = firewalls_.at(fw);
  if (rules.blocked_sources.count(pkt.hdr.src)) {
    ++fw_drops_[fw];
    return FilterResult::Drop;
  }
  return FilterResult::Allow;
}

FilterResult Network::admit_inbound(NodeId fw, const Packet& pkt, SimTime now) {
  const auto result = firewall_filter(fw, pkt);
  if (result == FilterResult::Allow) admitted_[fw][pkt.hdr.src.value] = now;
  return result;
}

void Network::install_redirect(NodeId router, Address source, NodeId farm) {
  require_kind(router, NodeKind::Router, "install_redirect");
  require_kind(farm, NodeKind::HoneyFarmHost, "install_redirect");
  auto& redirects = routing_.at(router).redirects;
  for (auto& entry : redirects) {
    if (entry.first == source) {
      entry.second = farm;
      return;
    }
  }
  redirects.emplace_back(source, farm);
}

void Network::block_source(NodeId fw, Address source) {
  require_kind(fw, NodeKind::Firewall, "block_source");
  firewalls_.at(fw).blocked_sources.insert(source);
}

const RoutingTable& Network::routing(NodeId router) const {
  require_kind(router, NodeKind::Router, "routing");
  return routing_.at(router);
}

const FirewallRuleSet& Network::rules(NodeId fw) const {
  require_kind(fw, NodeKind::Firewall, "rules");
  return firewalls_.at(fw);
}

std::optional<SimTime> Network::transmit(NodeId from, NodeId to, SimTime now) {
  auto idx = topo_.link_index(from, to);
  if (!idx) throw NoRoute("no link between '" + topo_.node(from).name + "' and '" + topo_.node(to).name + "'");
  const auto& spec = topo_.links()[*idx];
  auto& q = link_queues_[2 * *idx + (from == spec.a ? 0 : 1)];
  while (!q.departures.empty() && q.departures.front() <= now) q.departures.pop_front();
  if (q.departures.size() >= link_queue_cap_) {
    ++link_drops_;
    return std::nullopt;
  }
  if (now > q.slot_time) {
    q.slot_time = now;
    q.slot_used = 0;
  }
  if (q.slot_used >= q.bandwidth) {
    ++q.slot_time;
    q.slot_used = 0;
  }
  ++q.slot_used;
  const SimTime departure = q.slot_time;
  if (departure > now) q.departures.push_back(departure);
  return departure + q.latency;
}

std::size_t Network::link_backlog(NodeId from, NodeId to, SimTime now) {
  auto idx = topo_.link_index(from, to);
  if (!idx) return 0;
  const auto& spec = topo_.links()[*idx];
  auto& q = link_queues_[2 * *idx + (from == spec.a ? 0 : 1)];
  while (!q.departures.empty() && q.departures.front() <= now) q.departures.pop_front();
  return q.departures.size();
}

std::uint64_t Network::firewall_drops(NodeId fw) const {
  auto it = fw_drops_.find(fw);
  return it == fw_drops_.end() ? 0 : it->second;
}

std::uint64_t Network::firewall_drops_total() const {
  std::uint64_t total = 0;
  for (const auto& [fw, n] : fw_drops_) total += n;
  return total;
}

std::optional<SimTime> Network::last_admitted(NodeId fw, Address source) const {
  auto it = admitted_.find(fw);
  if (it == admitted_.end()) return std::nullopt;
  auto jt = it->second.find(source.value);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

}  // namespace honeymesh::core
