#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "honeymesh/core/topology.hpp"
#include "honeymesh/defense_event.hpp"
#include "honeymesh/detection.hpp"
#include "honeymesh/honeyfarm.hpp"

namespace honeymesh::control {

struct DefensePolicy {
  bool farm_enabled = true;
  bool honeyd_enabled = true;
  SimTime engagement_window_ms = 10000;

  bool any() const { return farm_enabled || honeyd_enabled; }
  /// Throws ValidationError.
  void validate() const;
};

struct ScheduledBlock {
  SimTime at = 0;
  Address source;
};

struct Actions {
  std::vector<DefenseEvent> events;
  std::vector<ScheduledBlock> blocks;
  std::optional<farm::FailoverResult> failover;

  void clear();
};

/// Turns verdicts and traps into routing and firewall changes: a confirmed
/// source is redirected to the farm on every router at once and blocked at
/// the external firewalls once the engagement window has passed.
class Controller {
 public:
  /// `farm_host` may be kNoNode, in which case confirmed sources are only
  /// blocked.
  Controller(core::Network& net, DefensePolicy policy, NodeId farm_host);

  void on_verdict(Address source, detection::Verdict verdict, const std::string& origin, SimTime now, Actions& out);
  /// Fires the block scheduled by a confirmation. No-op when already blocked.
  void on_block_due(Address source, SimTime now, Actions& out, farm::HoneyFarm* farm = nullptr);
  /// A honey VM trap: fail over, then block immediately.
  void on_trap(farm::HoneyFarm& farm, std::size_t vm, Address source, AttackType cause, SimTime now, Actions& out);
  /// First redirected packet from a source reached the farm.
  void on_engagement(Address source, const std::string& vm_name, SimTime now, Actions& out);

  bool confirmed(Address a) const { return confirmed_.count(a) > 0; }
  bool blocked(Address a) const { return blocked_.count(a) > 0; }
  const DefensePolicy& policy() const noexcept { return policy_; }

 private:
  void block_now(Address source, SimTime now, Actions& out, farm::HoneyFarm* farm);

  core::Network& net_;
  DefensePolicy policy_;
  NodeId farm_host_;
  std::vector<NodeId> routers_;
  std::vector<NodeId> external_firewalls_;
  std::set<Address> confirmed_;
  std::set<Address> blocked_;
};

}  // namespace honeymesh::control
