#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "honeymesh/types.hpp"

namespace honeymesh::traffic {

inline constexpr std::int64_t kSynBytes = 60;
inline constexpr std::int64_t kEchoBytes = 64;
inline constexpr std::int64_t kUdpFloodBytes = 512;
inline constexpr std::int64_t kMaxIpDatagram = 65535;
/// Smallest well-formed ICMP destination-unreachable message: 8-byte ICMP
/// header plus the 28-byte quoted IP header and payload prefix.
inline constexpr std::int64_t kMinDestUnreachableBytes = 36;

struct Endpoint {
  NodeId node = kNoNode;
  Address address;
};

struct AttackScenario {
  AttackType attack = AttackType::SynFlood;
  std::vector<Endpoint> agents;
  std::vector<Address> spoof_pool;
  Address target;
  double rate_pkts_per_ms = 1.0;  // aggregate over all agents
  SimTime start_ms = 0;
  SimTime end_ms = 1;
  double p_bot_l1 = 0.0;  // chance a non-spoofing agent answers a level-1 challenge

  AttackClass attack_class() const { return honeymesh::attack_class(attack); }
  /// Throws InvalidScenario.
  void validate() const;
};

bool requires_spoof_pool(AttackType t);

struct LegitProfile {
  std::vector<Endpoint> clients;
  double request_rate_per_client = 0.001;  // requests per ms
  double request_size_mean = 500.0;
  double request_size_stddev = 100.0;
  Address target;
  double answer_challenges = 1.0;

  /// Throws InvalidScenario.
  void validate() const;
};

struct Emission {
  SimTime at = 0;
  std::size_t emitter = 0;  // client or agent index
  Packet packet;
};

/// Poisson request arrivals for every client of a profile, merged in
/// (time, client index) order. Each emission is one request (a TCP Data
/// packet carrying the request size); src claimed == src actual.
class LegitGenerator {
 public:
  LegitGenerator(const LegitProfile& profile, std::uint64_t seed, SimTime start = 0);

  SimTime peek_time() const;
  Emission next();

 private:
  struct ClientStream {
    std::mt19937_64 rng;
    double next_at = 0.0;
  };

  void advance(ClientStream& c);

  LegitProfile profile_;
  std::vector<ClientStream> streams_;
  std::exponential_distribution<double> gap_;
  std::normal_distribution<double> size_;
  std::uint64_t next_request_ = 1;
};

/// Deterministic-interval attack traffic: each agent fires every
/// agents/rate ms, staggered evenly, inside [start_ms, end_ms).
class AttackGenerator {
 public:
  /// Throws InvalidScenario.
  AttackGenerator(const AttackScenario& scenario, std::uint64_t seed, std::int32_t scenario_index = 0);

  bool done() const { return peek_time() == kNever; }
  SimTime peek_time() const;
  Emission next();

  static constexpr SimTime kNever = INT64_MAX;

 private:
  Packet shape(std::size_t agent);
  SimTime emission_time(std::size_t agent, std::int64_t k) const;

  AttackScenario scenario_;
  std::int32_t index_;
  std::mt19937_64 rng_;
  double interval_;
  std::vector<std::int64_t> counts_;
  std::vector<std::optional<Fragment>> pending_overlap_;  // Teardrop second fragment
  std::uint64_t next_conn_ = 1;                           // connection ids for Syn packets
};

enum class Truth : std::uint8_t { Benign, Malicious };

/// Ground-truth oracle. Used by metrics only.
Truth ground_truth(const Packet& pkt);

/// Malformed ICMP as produced by Nuke: an ICMP protocol packet whose kind is
/// not an ICMP message, or whose size is too small for its kind.
bool is_malformed_icmp(const PacketHeader& hdr);

/// Whether a non-spoofing agent answers a challenge of the given level.
/// Level-2 challenges are never answered correctly.
bool bot_answers(std::uint8_t level, double p_bot_l1, std::mt19937_64& rng);

}  // namespace honeymesh::traffic
