#include <doctest.h>

#include "honeymesh/errors.hpp"
#include "honeymesh/honeyfarm.hpp"

using namespace honeymesh;
using namespace honeymesh::farm;

namespace {

HoneyFarm web_farm(std::size_t vms, std::set<AttackType> exposed = {AttackType::Teardrop, AttackType::Land},
                   SimTime restore = 500) {
  HoneyVmProfile p;
  p.mimics = Service::Web;
  p.exposed_vulns = std::move(exposed);
  std::vector<VmSpec> specs;
  for (std::size_t i = 0; i < vms; ++i) {
    specs.push_back({static_cast<NodeId>(10 + i), "hv-web-" + std::to_string(i), Address{21 + static_cast<std::uint32_t>(i)}, 0});
  }
  return HoneyFarm({p}, specs, restore);
}

PacketHeader data(std::uint32_t src, std::uint32_t dst = 10) {
  PacketHeader h;
  h.protocol = Protocol::TCP;
  h.kind = PacketKind::Data;
  h.src = Address{src};
  h.dst = Address{dst};
  h.size_bytes = 500;
  h.request_id = 3;
  return h;
}

PacketHeader fragment(std::uint32_t src, std::int64_t offset, std::int64_t length) {
  PacketHeader h;
  h.protocol = Protocol::UDP;
  h.kind = PacketKind::Fragment;
  h.src = Address{src};
  h.dst = Address{10};
  h.frag = Fragment{offset, length};
  h.size_bytes = length + 20;
  return h;
}

void trap(HoneyFarm& f, std::size_t vm, std::uint32_t src, SimTime now) {
  f.engage(vm, fragment(src, 0, 64), now);
  const auto r = f.engage(vm, fragment(src, 32, 64), now);
  REQUIRE(r.trapped == AttackType::Teardrop);
}

}  // namespace

TEST_CASE("the lowest VM of each profile starts active") {
  auto f = web_farm(3);
  CHECK(f.vm(0).lifecycle == Lifecycle::Active);
  CHECK(f.vm(1).lifecycle == Lifecycle::Standby);
  CHECK(f.vm(2).lifecycle == Lifecycle::Standby);
  CHECK(f.active_vm(0) == 0u);
  CHECK(f.profile_for(Service::Web) == 0u);
  CHECK_FALSE(f.profile_for(Service::Dns).has_value());
}

TEST_CASE("a redirected request gets a mimic reply and engages the VM") {
  auto f = web_farm(2);
  const auto r = f.engage(0, data(90001), 100);
  REQUIRE(r.reply.has_value());
  CHECK(r.reply->src == Address{10});
  CHECK(r.reply->dst == Address{90001});
  CHECK(r.reply->request_id == 3);
  CHECK(r.first_engagement);
  CHECK_FALSE(r.trapped.has_value());
  CHECK(f.vm(0).lifecycle == Lifecycle::Engaged);
  REQUIRE(f.vm(0).attack_log.size() == 1);
  CHECK(f.vm(0).attack_log[0].action == "mimic");
  CHECK_FALSE(f.engage(0, data(90001), 101).first_engagement);
}

TEST_CASE("a flood against an engaged VM is logged and contained") {
  auto f = web_farm(2);
  std::size_t toward_production = 0;
  for (int i = 0; i < 100; ++i) {
    const auto r = f.engage(0, data(90001), i);
    // Replies only ever go back to the claimed source.
    if (r.reply && r.reply->dst != Address{90001}) ++toward_production;
  }
  CHECK(f.vm(0).attack_log.size() == 100);
  CHECK(toward_production == 0);
}

TEST_CASE("overlapping fragments spring an exposed Teardrop trap") {
  auto f = web_farm(2);
  trap(f, 0, 90001, 10);
  CHECK(f.vm(0).lifecycle == Lifecycle::Compromised);
  CHECK_THROWS_AS(f.engage(0, data(90001), 11), NotOperational);
}

TEST_CASE("an unexposed vulnerability is only logged") {
  auto f = web_farm(2);
  PacketHeader pod;
  pod.protocol = Protocol::ICMP;
  pod.kind = PacketKind::EchoRequest;
  pod.src = Address{90001};
  pod.dst = Address{10};
  pod.size_bytes = 70000;
  CHECK_FALSE(f.trap_trigger(0, pod).has_value());
  const auto r = f.engage(0, pod, 5);
  CHECK_FALSE(r.trapped.has_value());
  CHECK(f.vm(0).lifecycle == Lifecycle::Engaged);
  CHECK(f.vm(0).attack_log.size() == 1);
}

TEST_CASE("a Land packet aimed at the VM traps it") {
  auto f = web_farm(2);
  PacketHeader land;
  land.protocol = Protocol::TCP;
  land.kind = PacketKind::Syn;
  land.src = Address{21};
  land.dst = Address{21};
  land.size_bytes = 60;
  CHECK(f.trap_trigger(0, land) == AttackType::Land);
}

TEST_CASE("failover activates the lowest standby at the same instant") {
  auto f = web_farm(3);
  trap(f, 0, 90001, 10);
  f.take_changes();
  const auto res = f.failover(0, 10);
  CHECK(res.activated == 1u);
  CHECK(f.vm(0).lifecycle == Lifecycle::Restoring);
  CHECK(f.vm(1).lifecycle == Lifecycle::Active);
  CHECK(f.vm(2).lifecycle == Lifecycle::Standby);
  const auto changes = f.take_changes();
  REQUIRE(changes.size() == 2);
  CHECK(changes[0].vm == 0);
  CHECK(changes[0].to == Lifecycle::Restoring);
  CHECK(changes[1].vm == 1);
  CHECK(changes[1].to == Lifecycle::Active);
}

TEST_CASE("an empty pool reports exhaustion") {
  auto f = web_farm(1);
  trap(f, 0, 90001, 10);
  const auto res = f.failover(0, 10);
  CHECK(res.exhausted());
  CHECK_FALSE(f.active_vm(0).has_value());
}

TEST_CASE("restore is inclusive at its deadline") {
  auto f = web_farm(2, {AttackType::Teardrop}, 490);
  trap(f, 0, 90001, 10);
  f.failover(0, 10);
  CHECK(f.next_restore() == 500);
  std::vector<std::pair<std::size_t, std::vector<LogEntry>>> archived;
  CHECK(f.restore_tick(499, archived).empty());
  CHECK(f.vm(0).lifecycle == Lifecycle::Restoring);
  CHECK(f.restore_tick(500, archived) == std::vector<std::size_t>{0});
  CHECK(f.vm(0).lifecycle == Lifecycle::Standby);
  REQUIRE(archived.size() == 1);
  CHECK(archived[0].second.size() == 2);
  CHECK(f.vm(0).attack_log.empty());
}

TEST_CASE("two VMs due together are restored in id order") {
  auto f = web_farm(3, {AttackType::Teardrop}, 100);
  trap(f, 0, 90001, 0);
  f.failover(0, 0);
  trap(f, 1, 90002, 0);
  f.failover(1, 0);
  std::vector<std::pair<std::size_t, std::vector<LogEntry>>> archived;
  CHECK(f.restore_tick(100, archived) == std::vector<std::size_t>{0, 1});
  CHECK(f.vm(2).lifecycle == Lifecycle::Active);
}

TEST_CASE("an exhausted profile comes back once a VM is restored") {
  auto f = web_farm(1, {AttackType::Teardrop}, 100);
  trap(f, 0, 90001, 0);
  f.failover(0, 0);
  std::vector<std::pair<std::size_t, std::vector<LogEntry>>> archived;
  f.restore_tick(100, archived);
  CHECK(f.active_vm(0) == 0u);
}

TEST_CASE("blocking the engaged source frees the VM") {
  auto f = web_farm(2);
  f.engage(0, data(90001), 0);
  f.on_block(Address{90002});
  CHECK(f.vm(0).lifecycle == Lifecycle::Engaged);
  f.on_block(Address{90001});
  CHECK(f.vm(0).lifecycle == Lifecycle::Active);
}

TEST_CASE("lifecycle transitions") {
  CHECK(legal_transition(Lifecycle::Standby, Lifecycle::Active));
  CHECK(legal_transition(Lifecycle::Active, Lifecycle::Compromised));
  CHECK(legal_transition(Lifecycle::Compromised, Lifecycle::Restoring));
  CHECK(legal_transition(Lifecycle::Restoring, Lifecycle::Standby));
  CHECK_FALSE(legal_transition(Lifecycle::Compromised, Lifecycle::Active));
  CHECK_FALSE(legal_transition(Lifecycle::Restoring, Lifecycle::Active));
  CHECK_FALSE(legal_transition(Lifecycle::Standby, Lifecycle::Engaged));
}

TEST_CASE("profiles are validated") {
  HoneyVmProfile p;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.exposed_vulns = {AttackType::SynFlood};
  CHECK_THROWS_AS(p.validate(), ValidationError);
}
