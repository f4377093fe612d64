#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>

namespace honeymesh {

/// Simulated time in integer milliseconds.
using SimTime = std::int64_t;

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xFFFFFFFFu;

/// Opaque identifier from a flat address space. Spoofable: a packet's claimed
/// source is just another Address.
struct Address {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(const Address&, const Address&) = default;
};

struct AddressHash {
  std::size_t operator()(Address a) const noexcept { return std::hash<std::uint32_t>{}(a.value); }
};

enum class Protocol : std::uint8_t { ICMP, TCP, UDP };

enum class PacketKind : std::uint8_t {
  EchoRequest,
  EchoReply,
  Syn,
  SynAck,
  Data,
  Fragment,
  DestUnreachable,
  Challenge,
  ChallengeResponse,
};

enum class AttackType : std::uint8_t {
  Smurf,
  SynFlood,
  UdpFlood,
  Teardrop,
  PingOfDeath,
  Land,
  PingFlood,
  Nuke,
};

inline constexpr AttackType kAllAttackTypes[] = {
    AttackType::Smurf,    AttackType::SynFlood,  AttackType::UdpFlood,  AttackType::Teardrop,
    AttackType::PingOfDeath, AttackType::Land,   AttackType::PingFlood, AttackType::Nuke,
};

enum class AttackClass : std::uint8_t { Flood, Crash };

constexpr AttackClass attack_class(AttackType t) {
  switch (t) {
    case AttackType::Teardrop:
    case AttackType::PingOfDeath:
    case AttackType::Land:
    case AttackType::Nuke:
      return AttackClass::Crash;
    default:
      return AttackClass::Flood;
  }
}

constexpr bool is_crash_attack(AttackType t) { return attack_class(t) == AttackClass::Crash; }

struct Fragment {
  std::int64_t offset = 0;
  std::int64_t length = 1;
  friend bool operator==(const Fragment&, const Fragment&) = default;
};

/// Everything a receiver can observe about a packet. Detection and defense
/// code only ever sees this part.
struct PacketHeader {
  std::uint64_t id = 0;
  Protocol protocol = Protocol::TCP;
  PacketKind kind = PacketKind::Data;
  Address src;  // claimed source
  Address dst;
  std::int64_t size_bytes = 1;
  std::optional<Fragment> frag;  // present iff kind == Fragment
  std::uint64_t nonce = 0;       // Challenge / ChallengeResponse only
  std::uint8_t challenge_level = 0;
  std::uint64_t request_id = 0;  // connection identifier, 0 when none
  SimTime sent_at = 0;
};

/// Ground truth carried alongside a packet. Read only by the traffic oracle
/// and by metrics instrumentation.
struct GroundTruth {
  Address src_actual;
  std::optional<AttackType> attack_tag;
  std::int32_t scenario = -1;  // attack scenario index, -1 when legit
  bool legit_request = false;  // belongs to a tracked legit request
  NodeId origin = kNoNode;     // node that actually emitted the packet
};

struct Packet {
  PacketHeader hdr;
  GroundTruth truth;
  NodeId redirect_to = kNoNode;  // forwarding annotation set by a redirecting router
};

std::string_view to_string(Protocol p);
std::string_view to_string(PacketKind k);
std::string_view to_string(AttackType t);
std::string_view to_string(AttackClass c);

std::optional<AttackType> parse_attack_type(std::string_view s);

}  // namespace honeymesh
