#include <doctest.h>

#include <vector>

#include "fixtures.hpp"
#include "honeymesh/detection.hpp"
#include "honeymesh/errors.hpp"

using namespace honeymesh;
using namespace honeymesh::detection;

namespace {

PacketHeader request(std::uint32_t src, std::int64_t size = 500, Protocol proto = Protocol::TCP) {
  PacketHeader h;
  h.protocol = proto;
  h.kind = PacketKind::Data;
  h.src = Address{src};
  h.dst = Address{10};
  h.size_bytes = size;
  return h;
}

std::vector<Observation> constant_rate(std::size_t n, SimTime gap, std::int64_t size, Protocol proto = Protocol::TCP) {
  std::vector<Observation> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<SimTime>(i) * gap, request(1000, size, proto)});
  return out;
}

BaselineModel hand_model() {
  BaselineModel m;
  m.per_source_rate = {0.01, 0.002};
  m.pkt_size = {500.0, 100.0};
  m.arrival_rate = {0.1, 0.01};
  m.protocol_mix = {0.0, 1.0, 0.0};
  return m;
}

FlowStats flow_with(int packets) {
  FlowStats f;
  for (int i = 0; i < packets; ++i) f.add(request(7), i);
  return f;
}

// Per-source rate 0.001 +- 0.001: four packets inside one second score 0.5.
BaselineModel quiet_model() {
  BaselineModel m = hand_model();
  m.per_source_rate = {0.001, 0.001};
  return m;
}

std::size_t count(const Detector::Outputs& out, DefenseEventKind k) {
  std::size_t n = 0;
  for (const auto& e : out.events) n += e.kind == k;
  return n;
}

}  // namespace

TEST_CASE("baseline of a constant-rate sample matches the fixture") {
  const auto& fx = oracles()["baseline_constant_rate"];
  const auto sample = constant_rate(fx["n"], fx["gap_ms"], fx["size"]);
  const auto m = train_baseline(sample, fx["n"]);
  CHECK(m.arrival_rate.mean == doctest::Approx(fx["arrival_mean"].get<double>()).epsilon(1e-12));
  CHECK(m.arrival_rate.stddev == doctest::Approx(fx["arrival_stddev"].get<double>()).epsilon(1e-9));
  CHECK(m.pkt_size.mean == doctest::Approx(fx["size_mean"].get<double>()));
  CHECK(m.pkt_size.stddev == doctest::Approx(fx["size_stddev"].get<double>()).epsilon(1e-9));
  CHECK(m.per_source_rate.mean == doctest::Approx(fx["per_source_mean"].get<double>()).epsilon(1e-12));
  CHECK(m.per_source_rate.stddev == doctest::Approx(fx["per_source_stddev"].get<double>()).epsilon(1e-12));
  CHECK(m.trained_on == 2000);
}

TEST_CASE("all-ICMP sample gives a pure ICMP mix") {
  const auto m = train_baseline(constant_rate(2000, 10, 64, Protocol::ICMP), 2000);
  CHECK(m.protocol_mix[0] == 1.0);
  CHECK(m.protocol_mix[1] == 0.0);
  CHECK(m.protocol_mix[2] == 0.0);
}

TEST_CASE("a short sample is rejected") {
  CHECK_THROWS_AS(train_baseline(constant_rate(1999, 10, 500), 2000), InsufficientSample);
}

TEST_CASE("training uses only the first warmup_n observations") {
  auto sample = constant_rate(2000, 10, 500);
  auto longer = sample;
  for (int i = 0; i < 50; ++i) longer.push_back({30000 + i, request(9, 1400, Protocol::UDP)});
  const auto a = train_baseline(sample, 2000);
  const auto b = train_baseline(longer, 2000);
  CHECK(a.pkt_size.mean == b.pkt_size.mean);
  CHECK(a.protocol_mix == b.protocol_mix);
}

TEST_CASE("anomaly score matches the hand-computed examples") {
  const auto& fx = oracles()["anomaly"];
  const double cap = fx["z_cap"];
  const auto m = hand_model();
  CHECK(anomaly_score(m, flow_with(10), cap) == doctest::Approx(0.0));
  CHECK(anomaly_score(m, flow_with(22), cap) == doctest::Approx(fx["rate_plus_6_sigma"].get<double>()));
  CHECK(anomaly_score(m, flow_with(16), cap) == doctest::Approx(fx["rate_plus_3_sigma"].get<double>()));
  CHECK(anomaly_score(m, flow_with(200), cap) == 1.0);
}

TEST_CASE("suspicion threshold is inclusive") {
  CHECK_FALSE(decide_suspicion(0.0, 0.5));
  CHECK(decide_suspicion(0.5, 0.5));
  CHECK(decide_suspicion(1.0, 0.0));
  CHECK(decide_suspicion(1.0, 1.0));
}

TEST_CASE("flow window slides over one second") {
  FlowStats f;
  f.add(request(7), 0);
  f.add(request(7), 500);
  CHECK(f.rate == doctest::Approx(0.002));
  f.expire(1000);
  CHECK(f.window.size() == 1);
  f.expire(1500);
  CHECK(f.window.empty());
  CHECK(f.rate == 0.0);
}

TEST_CASE("response evaluation") {
  Challenge c{1, 1, Address{7}, 0, 2000, 42};
  PacketHeader good;
  good.nonce = 42;
  PacketHeader bad;
  bad.nonce = 43;
  CHECK(evaluate_response(c, good, 2000) == ResponseOutcome::Pass);
  CHECK(evaluate_response(c, good, 2001) == ResponseOutcome::Fail);
  CHECK(evaluate_response(c, std::nullopt, 2001) == ResponseOutcome::Timeout);
  CHECK(evaluate_response(c, bad, 100) == ResponseOutcome::Fail);
}

TEST_CASE("ladder transitions") {
  SuspicionRecord r;
  r.level = ChallengeLevel::L1Pending;
  CHECK(next_action(r, ResponseOutcome::Pass) == NextAction::Clear);
  CHECK(next_action(r, ResponseOutcome::Timeout) == NextAction::Escalate);
  CHECK(next_action(r, ResponseOutcome::Fail) == NextAction::Escalate);
  r.level = ChallengeLevel::L2Pending;
  CHECK(next_action(r, ResponseOutcome::Pass) == NextAction::Clear);
  CHECK(next_action(r, ResponseOutcome::Timeout) == NextAction::Confirm);
  CHECK(next_action(r, ResponseOutcome::Fail) == NextAction::Confirm);
}

TEST_CASE("a silent source is confirmed two timeouts after its first challenge") {
  const auto& fx = oracles()["ladder"];
  DetectionConfig cfg;
  cfg.challenge_timeout_ms = fx["challenge_timeout_ms"];
  Detector d("honeyd:web", Address{10}, quiet_model(), cfg, 1);
  Detector::Outputs out;

  SimTime first_challenge = -1;
  for (SimTime t = 0; t < 10 && first_challenge < 0; ++t) {
    out.clear();
    const auto v = d.observe(request(90001), t, out);
    if (v == Verdict::Suspicious) {
      CHECK(count(out, DefenseEventKind::SuspicionRaised) == 1);
      CHECK(count(out, DefenseEventKind::ChallengeIssued) == 1);
      REQUIRE(out.packets.size() == 1);
      CHECK(out.packets[0].dst == Address{90001});
      CHECK(out.packets[0].kind == PacketKind::Challenge);
      first_challenge = t;
    }
  }
  REQUIRE(first_challenge >= 0);
  CHECK(d.record(Address{90001})->level == ChallengeLevel::L1Pending);
  REQUIRE(out.timers.size() == 1);
  auto timer = out.timers[0];
  CHECK(timer.at == first_challenge + cfg.challenge_timeout_ms);

  out.clear();
  d.on_window_close(timer.challenge_id, timer.at, out);
  CHECK(count(out, DefenseEventKind::Escalated) == 1);
  CHECK(d.record(Address{90001})->level == ChallengeLevel::L2Pending);
  REQUIRE(out.timers.size() == 1);
  timer = out.timers[0];

  out.clear();
  d.on_window_close(timer.challenge_id, timer.at, out);
  CHECK(count(out, DefenseEventKind::Confirmed) == 1);
  CHECK(out.confirmed == std::vector<Address>{Address{90001}});
  CHECK(timer.at - first_challenge == fx["spoof_confirm_after_first_challenge_ms"].get<SimTime>());
  CHECK(d.verdict(Address{90001}) == Verdict::Confirmed);

  out.clear();
  CHECK(d.observe(request(90001), timer.at + 1, out) == Verdict::Confirmed);
  CHECK(out.events.empty());
}

TEST_CASE("a correct answer clears the source and resets its flow") {
  Detector d("honeyd:web", Address{10}, quiet_model(), DetectionConfig{}, 1);
  Detector::Outputs out;
  for (SimTime t = 0; t < 4; ++t) d.observe(request(1000), t, out);
  REQUIRE(d.verdict(Address{1000}) == Verdict::Suspicious);
  REQUIRE(out.packets.size() == 1);
  const auto answer = challenge_response(out.packets[0], Address{1000}, true);
  out.clear();
  d.on_response(answer, 50, out);
  CHECK(count(out, DefenseEventKind::Cleared) == 1);
  CHECK(out.cleared == std::vector<Address>{Address{1000}});
  CHECK(d.verdict(Address{1000}) == Verdict::Benign);
  CHECK(d.flow(Address{1000})->window.empty());
}

TEST_CASE("a wrong answer escalates to level 2") {
  Detector d("honeyd:web", Address{10}, quiet_model(), DetectionConfig{}, 1);
  Detector::Outputs out;
  for (SimTime t = 0; t < 4; ++t) d.observe(request(1000), t, out);
  const auto answer = challenge_response(out.packets[0], Address{1000}, false);
  out.clear();
  d.on_response(answer, 50, out);
  CHECK(count(out, DefenseEventKind::Escalated) == 1);
  CHECK(d.record(Address{1000})->level == ChallengeLevel::L2Pending);
  REQUIRE(out.packets.size() == 1);
  CHECK(out.packets[0].challenge_level == 2);
}

TEST_CASE("one outstanding challenge per source") {
  Detector d("vm:web-0", Address{21}, quiet_model(), DetectionConfig{}, 1);
  Detector::Outputs out;
  const auto c = d.issue_challenge(Address{7}, 1, 100, out);
  CHECK(c.issued_to == Address{7});
  CHECK(c.deadline == 2100);
  CHECK(d.record(Address{7})->level == ChallengeLevel::L1Pending);
  CHECK_THROWS_AS(d.issue_challenge(Address{7}, 1, 200, out), ChallengeOutstanding);
}

TEST_CASE("a guarded address is suspicious on its first packet") {
  Detector d("honeyd:web", Address{10}, hand_model(), DetectionConfig{}, 1, {Address{10}});
  Detector::Outputs out;
  CHECK(d.observe(request(10, 500), 0, out) == Verdict::Suspicious);
  CHECK(count(out, DefenseEventKind::SuspicionRaised) == 1);
}

TEST_CASE("ordinary traffic raises nothing") {
  auto m = hand_model();
  m.per_source_rate.stddev = 0.005;  // the first second ramps up from 0.001
  Detector d("honeyd:web", Address{10}, m, DetectionConfig{}, 1);
  Detector::Outputs out;
  for (SimTime t = 0; t < 10000; t += 100) CHECK(d.observe(request(1000), t, out) == Verdict::Benign);
  CHECK(out.events.empty());
}

TEST_CASE("engagement queries leave the verdict alone") {
  Detector d("vm:web-0", Address{21}, quiet_model(), DetectionConfig{}, 1);
  Detector::Outputs out;
  d.engage(Address{7}, 0, out);
  d.engage(Address{7}, 10, out);
  CHECK(out.packets.size() == 1);
  CHECK(out.events.size() == 1);
  CHECK(out.events[0].detail == "engage");
  CHECK(d.verdict(Address{7}) == Verdict::Benign);
  const auto timer = out.timers[0];
  out.clear();
  d.on_window_close(timer.challenge_id, timer.at, out);
  CHECK(out.events.empty());
}

TEST_CASE("rehost changes the challenge issuer") {
  Detector d("vm:web-0", Address{21}, quiet_model(), DetectionConfig{}, 1);
  d.rehost("vm:web-1", Address{22});
  Detector::Outputs out;
  d.issue_challenge(Address{7}, 1, 0, out);
  CHECK(out.packets[0].src == Address{22});
  CHECK(out.events[0].origin == "vm:web-1");
}
