#include <doctest.h>

#include "honeymesh/control.hpp"
#include "honeymesh/errors.hpp"

using namespace honeymesh;
using namespace honeymesh::core;
using namespace honeymesh::control;

namespace {

// Two DMZ routers behind one external firewall.
struct Dmz {
  NodeId client, fw, r1, r2, web, farm, vm0, vm1;
  Topology topo;

  Dmz() {
    client = topo.add_node("client", NodeKind::ClientHost, Address{100});
    fw = topo.add_node("fw", NodeKind::Firewall, Address{1}, FirewallRole::External);
    r1 = topo.add_node("r1", NodeKind::Router, Address{2});
    r2 = topo.add_node("r2", NodeKind::Router, Address{3});
    web = topo.add_node("web", NodeKind::ProductionServer, Address{10});
    farm = topo.add_node("farm", NodeKind::HoneyFarmHost, Address{20});
    vm0 = topo.add_node("vm0", NodeKind::HoneyVm, Address{21}, FirewallRole::External, farm);
    vm1 = topo.add_node("vm1", NodeKind::HoneyVm, Address{22}, FirewallRole::External, farm);
    topo.add_link(client, fw, 1, 10);
    topo.add_link(fw, r1, 1, 10);
    topo.add_link(r1, r2, 1, 10);
    topo.add_link(r2, web, 1, 10);
    topo.add_link(r1, farm, 1, 10);
    topo.finalize();
  }
};

farm::HoneyFarm make_farm(std::size_t vms) {
  farm::HoneyVmProfile p;
  p.exposed_vulns = {AttackType::Teardrop};
  std::vector<farm::VmSpec> specs;
  for (std::size_t i = 0; i < vms; ++i) {
    specs.push_back({static_cast<NodeId>(6 + i), "vm" + std::to_string(i), Address{21 + static_cast<std::uint32_t>(i)}, 0});
  }
  return farm::HoneyFarm({p}, specs, 1000);
}

void compromise(farm::HoneyFarm& f, std::size_t vm, Address src) {
  PacketHeader h;
  h.protocol = Protocol::UDP;
  h.kind = PacketKind::Fragment;
  h.src = src;
  h.dst = Address{10};
  h.frag = Fragment{0, 64};
  h.size_bytes = 84;
  f.engage(vm, h, 0);
  h.frag = Fragment{32, 64};
  REQUIRE(f.engage(vm, h, 0).trapped.has_value());
}

std::size_t count(const Actions& a, DefenseEventKind k) {
  std::size_t n = 0;
  for (const auto& e : a.events) n += e.kind == k;
  return n;
}

}  // namespace

TEST_CASE("a confirmation redirects on every router now and blocks after the window") {
  Dmz dmz;
  Network net(dmz.topo);
  Controller c(net, DefensePolicy{}, dmz.farm);
  Actions out;
  c.on_verdict(Address{90001}, detection::Verdict::Confirmed, "honeyd:web", 500, out);
  CHECK(count(out, DefenseEventKind::RedirectInstalled) == 2);
  for (const auto& e : out.events) CHECK(e.time == 500);
  CHECK(net.routing(dmz.r1).redirect_for(Address{90001}) == dmz.farm);
  CHECK(net.routing(dmz.r2).redirect_for(Address{90001}) == dmz.farm);
  REQUIRE(out.blocks.size() == 1);
  CHECK(out.blocks[0].at == 10500);
  CHECK(out.blocks[0].source == Address{90001});
  CHECK(net.rules(dmz.fw).blocked_sources.empty());

  out.clear();
  c.on_block_due(Address{90001}, 10500, out);
  CHECK(count(out, DefenseEventKind::BlockInstalled) == 1);
  CHECK(net.rules(dmz.fw).blocked_sources.count(Address{90001}) == 1);
}

TEST_CASE("a zero window blocks at the confirmation time") {
  Dmz dmz;
  Network net(dmz.topo);
  DefensePolicy p;
  p.engagement_window_ms = 0;
  Controller c(net, p, dmz.farm);
  Actions out;
  c.on_verdict(Address{90001}, detection::Verdict::Confirmed, "honeyd:web", 500, out);
  REQUIRE(out.blocks.size() == 1);
  CHECK(out.blocks[0].at == 500);
}

TEST_CASE("non-confirmed verdicts leave the network alone") {
  Dmz dmz;
  Network net(dmz.topo);
  Controller c(net, DefensePolicy{}, dmz.farm);
  Actions out;
  c.on_verdict(Address{90001}, detection::Verdict::Benign, "honeyd:web", 500, out);
  c.on_verdict(Address{90001}, detection::Verdict::Suspicious, "honeyd:web", 500, out);
  CHECK(out.events.empty());
  CHECK(out.blocks.empty());
  CHECK(net.routing(dmz.r1).redirects.empty());
}

TEST_CASE("a repeated confirmation is a no-op") {
  Dmz dmz;
  Network net(dmz.topo);
  Controller c(net, DefensePolicy{}, dmz.farm);
  Actions out;
  c.on_verdict(Address{90001}, detection::Verdict::Confirmed, "honeyd:web", 500, out);
  const auto redirects = net.routing(dmz.r1).redirects;
  out.clear();
  c.on_verdict(Address{90001}, detection::Verdict::Confirmed, "vm:vm0", 600, out);
  CHECK(out.events.empty());
  CHECK(out.blocks.empty());
  CHECK(net.routing(dmz.r1).redirects == redirects);
}

TEST_CASE("a trap fails over and blocks at the same instant") {
  Dmz dmz;
  Network net(dmz.topo);
  Controller c(net, DefensePolicy{}, dmz.farm);
  auto f = make_farm(2);
  compromise(f, 0, Address{90001});
  Actions out;
  c.on_trap(f, 0, Address{90001}, AttackType::Teardrop, 777, out);
  CHECK(count(out, DefenseEventKind::TrapTriggered) == 1);
  CHECK(count(out, DefenseEventKind::FailoverDone) == 1);
  CHECK(count(out, DefenseEventKind::BlockInstalled) == 1);
  for (const auto& e : out.events) CHECK(e.time == 777);
  REQUIRE(out.failover.has_value());
  CHECK(out.failover->activated == 1u);
  CHECK(c.blocked(Address{90001}));
}

TEST_CASE("an exhausted pool still blocks") {
  Dmz dmz;
  Network net(dmz.topo);
  Controller c(net, DefensePolicy{}, dmz.farm);
  auto f = make_farm(1);
  compromise(f, 0, Address{90001});
  Actions out;
  c.on_trap(f, 0, Address{90001}, AttackType::Teardrop, 5, out);
  REQUIRE(out.failover.has_value());
  CHECK(out.failover->exhausted());
  CHECK(count(out, DefenseEventKind::BlockInstalled) == 1);
}

TEST_CASE("a trap by an already blocked source adds no block") {
  Dmz dmz;
  Network net(dmz.topo);
  Controller c(net, DefensePolicy{}, dmz.farm);
  auto f = make_farm(3);
  Actions out;
  c.on_verdict(Address{90001}, detection::Verdict::Confirmed, "honeyd:web", 0, out);
  c.on_block_due(Address{90001}, 10000, out);
  compromise(f, 0, Address{90001});
  out.clear();
  c.on_trap(f, 0, Address{90001}, AttackType::Teardrop, 10001, out);
  CHECK(count(out, DefenseEventKind::BlockInstalled) == 0);
  out.clear();
  c.on_block_due(Address{90001}, 10002, out);
  CHECK(out.events.empty());
  CHECK(net.rules(dmz.fw).blocked_sources.size() == 1);
}

TEST_CASE("without a farm host a confirmation only schedules the block") {
  Dmz dmz;
  Network net(dmz.topo);
  Controller c(net, DefensePolicy{}, kNoNode);
  Actions out;
  c.on_verdict(Address{90001}, detection::Verdict::Confirmed, "honeyd:web", 0, out);
  CHECK(out.events.empty());
  CHECK(out.blocks.size() == 1);
}

TEST_CASE("a negative window is rejected") {
  Dmz dmz;
  Network net(dmz.topo);
  DefensePolicy p;
  p.engagement_window_ms = -1;
  CHECK_THROWS_AS(Controller(net, p, dmz.farm), ValidationError);
}
