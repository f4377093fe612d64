#include "honeymesh/control.hpp"

#include "honeymesh/errors.hpp"

namespace honeymesh::control {

namespace {
const std::string kOrigin = "control";
}

void DefensePolicy::validate() const {
  if (engagement_window_ms < 0) throw ValidationError("engagement_window_ms must be >= 0");
}

void Actions::clear() {
  events.clear();
  blocks.clear();
  failover.reset();
}

Controller::Controller(core::Network& net, DefensePolicy policy, NodeId farm_host)
    : net_(net), policy_(policy), farm_host_(farm_host) {
  policy_.validate();
  const auto& topo = net_.topology();
  routers_ = topo.nodes_of_kind(core::NodeKind::Router);
  for (NodeId fw : topo.nodes_of_kind(core::NodeKind::Firewall)) {
    if (topo.node(fw).fw_role == core::FirewallRole::External) external_firewalls_.push_back(fw);
  }
}

void Controller::on_verdict(Address source, detection::Verdict verdict, const std::string&, SimTime now,
                            Actions& out) {
  if (verdict != detection::Verdict::Confirmed) return;
  if (!confirmed_.insert(source).second) return;
  if (farm_host_ != kNoNode) {
    const auto& topo = net_.topology();
    for (NodeId r : routers_) {
      net_.install_redirect(r, source, farm_host_);
      out.events.push_back({now, DefenseEventKind::RedirectInstalled, source, kOrigin, topo.node(r).name});
    }
  }
  if (!blocked(source)) out.blocks.push_back({now + policy_.engagement_window_ms, source});
}

void Controller::on_block_due(Address source, SimTime now, Actions& out, farm::HoneyFarm* farm) {
  if (blocked(source)) return;
  block_now(source, now, out, farm);
}

void Controller::on_trap(farm::HoneyFarm& farm, std::size_t vm, Address source, AttackType cause, SimTime now,
                         Actions& out) {
  const auto& state = farm.vm(vm);
  out.events.push_back({now, DefenseEventKind::TrapTriggered, source, state.name, std::string(to_string(cause))});
  const auto result = farm.failover(vm, now);
  out.failover = result;
  out.events.push_back({now, DefenseEventKind::FailoverDone, source, kOrigin,
                        result.activated ? farm.vm(*result.activated).name : std::string("exhausted")});
  if (!blocked(source)) block_now(source, now, out, &farm);
}

void Controller::on_engagement(Address source, const std::string& vm_name, SimTime now, Actions& out) {
  out.events.push_back({now, DefenseEventKind::EngagementStarted, source, vm_name, {}});
}

void Controller::block_now(Address source, SimTime now, Actions& out, farm::HoneyFarm* farm) {
  blocked_.insert(source);
  const auto& topo = net_.topology();
  for (NodeId fw : external_firewalls_) {
    net_.block_source(fw, source);
    out.events.push_back({now, DefenseEventKind::BlockInstalled, source, kOrigin, topo.node(fw).name});
  }
  if (farm) farm->on_block(source);
}

}  // namespace honeymesh::control
