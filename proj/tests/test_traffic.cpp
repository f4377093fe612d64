#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "honeymesh/errors.hpp"
#include "honeymesh/traffic.hpp"

using namespace honeymesh;
using namespace honeymesh::traffic;

namespace {

LegitProfile one_client(double rate) {
  LegitProfile p;
  p.clients = {{0, Address{1000}}};
  p.request_rate_per_client = rate;
  p.target = Address{10};
  return p;
}

AttackScenario scenario(AttackType t, std::size_t agents = 4) {
  AttackScenario s;
  s.attack = t;
  for (std::size_t i = 0; i < agents; ++i) s.agents.push_back({static_cast<NodeId>(i), Address{5000 + static_cast<std::uint32_t>(i)}});
  s.target = Address{10};
  s.rate_pkts_per_ms = 0.5;
  s.start_ms = 1000;
  s.end_ms = 3000;
  if (requires_spoof_pool(t)) {
    for (std::uint32_t a = 90000; a < 90010; ++a) s.spoof_pool.push_back(Address{a});
  }
  return s;
}

std::vector<Emission> drain(AttackGenerator& g) {
  std::vector<Emission> out;
  while (!g.done()) out.push_back(g.next());
  return out;
}

}  // namespace

TEST_CASE("legit arrivals follow the configured Poisson rate") {
  const auto& fx = oracles()["poisson"];
  const double rate = fx["rate_per_ms"];
  const SimTime horizon = fx["horizon_ms"];
  const double expected = fx["expected"];
  const double tol = fx["tolerance"];

  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    LegitGenerator g(one_client(rate), seed);
    std::size_t n = 0;
    while (g.peek_time() < horizon) {
      g.next();
      ++n;
    }
    // Each seed stays well inside five standard deviations of the mean.
    CHECK(std::abs(static_cast<double>(n) - expected) < 5.0 * std::sqrt(expected));
    total += static_cast<double>(n);
  }
  const double mean = total / 20.0;
  CHECK(std::abs(mean - expected) <= tol * expected);
}

TEST_CASE("legit packets carry their real source") {
  LegitProfile p = one_client(0.01);
  p.clients.push_back({1, Address{1001}});
  LegitGenerator g(p, 3);
  for (int i = 0; i < 200; ++i) {
    const auto e = g.next();
    CHECK(e.packet.hdr.src == e.packet.truth.src_actual);
    CHECK(ground_truth(e.packet) == Truth::Benign);
    CHECK(e.packet.truth.legit_request);
  }
}

TEST_CASE("two clients give the same interleaving for the same seed") {
  LegitProfile p = one_client(0.01);
  p.clients.push_back({1, Address{1001}});
  LegitGenerator a(p, 11);
  LegitGenerator b(p, 11);
  std::set<std::size_t> emitters;
  SimTime last = 0;
  for (int i = 0; i < 500; ++i) {
    const auto x = a.next();
    const auto y = b.next();
    CHECK(x.at == y.at);
    CHECK(x.emitter == y.emitter);
    CHECK(x.packet.hdr.size_bytes == y.packet.hdr.size_bytes);
    CHECK(x.at >= last);
    last = x.at;
    emitters.insert(x.emitter);
  }
  CHECK(emitters.size() == 2);
}

TEST_CASE("Land packets claim the target as source") {
  AttackGenerator g(scenario(AttackType::Land), 5);
  const auto out = drain(g);
  REQUIRE_FALSE(out.empty());
  for (const auto& e : out) {
    CHECK(e.packet.hdr.src == Address{10});
    CHECK(e.packet.hdr.dst == Address{10});
  }
}

TEST_CASE("Ping of Death packets exceed the largest datagram") {
  AttackGenerator g(scenario(AttackType::PingOfDeath), 5);
  for (const auto& e : drain(g)) {
    CHECK(e.packet.hdr.size_bytes >= 65536);
    CHECK(e.packet.hdr.protocol == Protocol::ICMP);
  }
}

TEST_CASE("Teardrop sends overlapping fragment pairs per agent") {
  AttackGenerator g(scenario(AttackType::Teardrop), 5);
  std::map<std::size_t, std::vector<Fragment>> per_agent;
  for (const auto& e : drain(g)) {
    REQUIRE(e.packet.hdr.frag.has_value());
    CHECK(e.packet.hdr.kind == PacketKind::Fragment);
    per_agent[e.emitter].push_back(*e.packet.hdr.frag);
  }
  for (const auto& [agent, frags] : per_agent) {
    for (std::size_t i = 0; i + 1 < frags.size(); i += 2) {
      CHECK(frags[i + 1].offset < frags[i].offset + frags[i].length);
    }
  }
}

TEST_CASE("Nuke sends malformed ICMP from forged sources") {
  AttackGenerator g(scenario(AttackType::Nuke), 5);
  for (const auto& e : drain(g)) {
    CHECK(is_malformed_icmp(e.packet.hdr));
    CHECK(e.packet.hdr.src != e.packet.truth.src_actual);
    CHECK(e.packet.hdr.src.value >= 90000);
  }
}

TEST_CASE("every attack packet is malicious and stays in its window") {
  for (auto t : kAllAttackTypes) {
    CAPTURE(to_string(t));
    AttackGenerator g(scenario(t), 9, 2);
    const auto out = drain(g);
    CHECK(out.size() == 1000);  // 0.5 pkt/ms over 2000 ms
    for (const auto& e : out) {
      CHECK(ground_truth(e.packet) == Truth::Malicious);
      CHECK(e.packet.truth.scenario == 2);
      CHECK(e.at >= 1000);
      CHECK(e.at < 3000);
    }
  }
}

TEST_CASE("spoofed floods draw sources from the pool") {
  AttackGenerator g(scenario(AttackType::SynFlood), 5);
  for (const auto& e : drain(g)) {
    CHECK(e.packet.hdr.src.value >= 90000);
    CHECK(e.packet.hdr.src.value < 90010);
    CHECK(e.packet.hdr.request_id != 0);
  }
}

TEST_CASE("attack scenarios are validated") {
  auto s = scenario(AttackType::SynFlood);
  s.spoof_pool.clear();
  CHECK_THROWS_AS(AttackGenerator(s, 1), InvalidScenario);
  s = scenario(AttackType::PingFlood);
  s.end_ms = s.start_ms;
  CHECK_THROWS_AS(AttackGenerator(s, 1), InvalidScenario);
  s = scenario(AttackType::PingFlood);
  s.agents.clear();
  CHECK_THROWS_AS(AttackGenerator(s, 1), InvalidScenario);
}

TEST_CASE("bots never pass a level-2 challenge") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(bot_answers(2, 1.0, rng));
  CHECK(bot_answers(1, 1.0, rng));
  CHECK_FALSE(bot_answers(1, 0.0, rng));
}
