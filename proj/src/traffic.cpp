#include "honeymesh/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "honeymesh/errors.hpp"

namespace honeymesh::traffic {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

}  // namespace

bool requires_spoof_pool(AttackType t) {
  switch (t) {
    case AttackType::Smurf:
    case AttackType::SynFlood:
    case AttackType::UdpFlood:
    case AttackType::Nuke:
      return true;
    default:
      return false;
  }
}

void AttackScenario::validate() const {
  const std::string name(to_string(attack));
  if (agents.empty()) throw InvalidScenario(name + " scenario has no agents");
  if (!(start_ms < end_ms)) throw InvalidScenario(name + " scenario needs start_ms < end_ms");
  if (start_ms < 0) throw InvalidScenario(name + " scenario starts before t=0");
  if (!(rate_pkts_per_ms > 0.0) || !std::isfinite(rate_pkts_per_ms)) {
    throw InvalidScenario(name + " scenario needs a positive rate");
  }
  if (requires_spoof_pool(attack) && spoof_pool.empty()) {
    throw InvalidScenario(name + " scenario requires a non-empty spoof_pool");
  }
  if (!(p_bot_l1 >= 0.0 && p_bot_l1 <= 1.0)) throw InvalidScenario("p_bot_l1 must be in [0,1]");
}

void LegitProfile::validate() const {
  if (clients.empty()) throw InvalidScenario("legit profile has no clients");
  if (!(request_rate_per_client > 0.0) || !std::isfinite(request_rate_per_client)) {
    throw InvalidScenario("legit request rate must be positive");
  }
  if (!(request_size_mean > 0.0) || !(request_size_stddev >= 0.0)) {
    throw InvalidScenario("legit request size distribution must have mean > 0 and stddev >= 0");
  }
  if (!(answer_challenges >= 0.0 && answer_challenges <= 1.0)) {
    throw InvalidScenario("answer_challenges must be in [0,1]");
  }
}

LegitGenerator::LegitGenerator(const LegitProfile& profile, std::uint64_t seed, SimTime start)
    : profile_(profile),
      gap_(profile.request_rate_per_client),
      size_(profile.request_size_mean, profile.request_size_stddev) {
  profile_.validate();
  streams_.reserve(profile_.clients.size());
  for (std::size_t i = 0; i < profile_.clients.size(); ++i) {
    ClientStream s{make_rng(seed, i, 0x1e6), static_cast<double>(start)};
    advance(s);
    streams_.push_back(std::move(s));
  }
}

void LegitGenerator::advance(ClientStream& c) { c.next_at += gap_(c.rng); }

SimTime LegitGenerator::peek_time() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : streams_) best = std::min(best, std::floor(s.next_at));
  return static_cast<SimTime>(best);
}

Emission LegitGenerator::next() {
  std::size_t pick = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    const double t = std::floor(streams_[i].next_at);
    if (t < best) {
      best = t;
      pick = i;
    }
  }
  auto& stream = streams_[pick];
  const auto at = static_cast<SimTime>(best);
  const auto& client = profile_.clients[pick];

  Packet pkt;
  pkt.hdr.protocol = Protocol::TCP;
  pkt.hdr.kind = PacketKind::Data;
  pkt.hdr.src = client.address;
  pkt.hdr.dst = profile_.target;
  pkt.hdr.size_bytes = std::max<std::int64_t>(kSynBytes, std::llround(size_(stream.rng)));
  pkt.hdr.request_id = next_request_++;
  pkt.hdr.sent_at = at;
  pkt.truth.src_actual = client.address;
  pkt.truth.legit_request = true;
  pkt.truth.origin = client.node;

  advance(stream);
  return Emission{at, pick, pkt};
}

AttackGenerator::AttackGenerator(const AttackScenario& scenario, std::uint64_t seed, std::int32_t scenario_index)
    : scenario_(scenario),
      index_(scenario_index),
      rng_(make_rng(seed, static_cast<std::uint64_t>(scenario_index), 0xa77)),
      interval_(static_cast<double>(scenario.agents.size()) / scenario.rate_pkts_per_ms),
      counts_(scenario.agents.size(), 0),
      pending_overlap_(scenario.agents.size()) {
  scenario_.validate();
}

SimTime AttackGenerator::emission_time(std::size_t agent, std::int64_t k) const {
  const double n = static_cast<double>(scenario_.agents.size());
  const double offset = (static_cast<double>(agent) / n + static_cast<double>(k)) * interval_;
  return scenario_.start_ms + static_cast<SimTime>(std::floor(offset));
}

SimTime AttackGenerator::peek_time() const {
  SimTime best = kNever;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const SimTime t = emission_time(i, counts_[i]);
    if (t < scenario_.end_ms) best = std::min(best, t);
  }
  return best;
}

Emission AttackGenerator::next() {
  std::size_t pick = counts_.size();
  SimTime best = kNever;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const SimTime t = emission_time(i, counts_[i]);
    if (t < scenario_.end_ms && t < best) {
      best = t;
      pick = i;
    }
  }
  if (pick == counts_.size()) throw InvalidScenario("attack generator exhausted");
  ++counts_[pick];
  Packet pkt = shape(pick);
  pkt.hdr.sent_at = best;
  return Emission{best, pick, pkt};
}

Packet AttackGenerator::shape(std::size_t agent) {
  const auto& who = scenario_.agents[agent];
  Packet pkt;
  pkt.truth.src_actual = who.address;
  pkt.truth.attack_tag = scenario_.attack;
  pkt.truth.scenario = index_;
  pkt.truth.origin = who.node;
  pkt.hdr.dst = scenario_.target;
  pkt.hdr.src = who.address;

  auto forged = [&] {
    const auto i = uniform_int(rng_, 0, static_cast<std::int64_t>(scenario_.spoof_pool.size()) - 1);
    return scenario_.spoof_pool[static_cast<std::size_t>(i)];
  };

  switch (scenario_.attack) {
    case AttackType::Smurf:
      pkt.hdr.protocol = Protocol::ICMP;
      pkt.hdr.kind = PacketKind::EchoRequest;
      pkt.hdr.size_bytes = kEchoBytes;
      pkt.hdr.src = forged();
      break;
    case AttackType::SynFlood:
      pkt.hdr.protocol = Protocol::TCP;
      pkt.hdr.kind = PacketKind::Syn;
      pkt.hdr.size_bytes = kSynBytes;
      pkt.hdr.src = forged();
      pkt.hdr.request_id = next_conn_++;
      break;
    case AttackType::UdpFlood:
      pkt.hdr.protocol = Protocol::UDP;
      pkt.hdr.kind = PacketKind::Data;
      pkt.hdr.size_bytes = kUdpFloodBytes;
      pkt.hdr.src = forged();
      break;
    case AttackType::Teardrop: {
      pkt.hdr.protocol = Protocol::UDP;
      pkt.hdr.kind = PacketKind::Fragment;
      auto& second = pending_overlap_[agent];
      if (second) {
        pkt.hdr.frag = *second;
        second.reset();
      } else {
        const std::int64_t first_len = 8 * uniform_int(rng_, 8, 64);
        pkt.hdr.frag = Fragment{0, first_len};
        // Second fragment starts inside the first one.
        const std::int64_t overlap_offset = 8 * uniform_int(rng_, 1, first_len / 8 - 1);
        second = Fragment{overlap_offset, 8 * uniform_int(rng_, 8, 64)};
      }
      pkt.hdr.size_bytes = pkt.hdr.frag->length + 20;
      break;
    }
    case AttackType::PingOfDeath:
      pkt.hdr.protocol = Protocol::ICMP;
      pkt.hdr.kind = PacketKind::EchoRequest;
      pkt.hdr.size_bytes = kMaxIpDatagram + 1 + uniform_int(rng_, 0, 4096);
      break;
    case AttackType::Land:
      pkt.hdr.protocol = Protocol::TCP;
      pkt.hdr.kind = PacketKind::Syn;
      pkt.hdr.size_bytes = kSynBytes;
      pkt.hdr.src = scenario_.target;
      pkt.hdr.request_id = next_conn_++;
      break;
    case AttackType::PingFlood:
      pkt.hdr.protocol = Protocol::ICMP;
      pkt.hdr.kind = PacketKind::EchoRequest;
      pkt.hdr.size_bytes = kEchoBytes;
      break;
    case AttackType::Nuke:
      pkt.hdr.protocol = Protocol::ICMP;
      pkt.hdr.kind = PacketKind::DestUnreachable;
      pkt.hdr.size_bytes = uniform_int(rng_, 8, kMinDestUnreachableBytes - 1);
      pkt.hdr.src = forged();
      break;
  }
  return pkt;
}

Truth ground_truth(const Packet& pkt) { return pkt.truth.attack_tag ? Truth::Malicious : Truth::Benign; }

bool is_malformed_icmp(const PacketHeader& hdr) {
  if (hdr.protocol != Protocol::ICMP) return false;
  switch (hdr.kind) {
    case PacketKind::EchoRequest:
    case PacketKind::EchoReply:
      return hdr.size_bytes < 8;
    case PacketKind::DestUnreachable:
      return hdr.size_bytes < kMinDestUnreachableBytes;
    case PacketKind::Challenge:
    case PacketKind::ChallengeResponse:
      return false;
    default:
      return true;  // TCP/UDP message kinds carried as ICMP
  }
}

bool bot_answers(std::uint8_t level, double p_bot_l1, std::mt19937_64& rng) {
  if (level != 1) return false;
  return std::bernoulli_distribution(p_bot_l1)(rng);
}

}  // namespace honeymesh::traffic
