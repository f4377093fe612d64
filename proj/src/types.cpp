#include "honeymesh/types.hpp"

#include <array>

namespace honeymesh {

namespace {
constexpr std::array<std::string_view, 3> kProtocolNames = {"ICMP", "TCP", "UDP"};
constexpr std::array<std::string_view, 9> kKindNames = {
    "EchoRequest", "EchoReply", "Syn", "SynAck", "Data", "Fragment", "DestUnreachable", "Challenge", "ChallengeResponse",
};
constexpr std::array<std::string_view, 8> kAttackNames = {
    "Smurf", "SynFlood", "UdpFlood", "Teardrop", "PingOfDeath", "Land", "PingFlood", "Nuke",
};
}  // namespace

std::string_view to_string(Protocol p) { return kProtocolNames.at(static_cast<std::size_t>(p)); }
std::string_view to_string(PacketKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }
std::string_view to_string(AttackType t) { return kAttackNames.at(static_cast<std::size_t>(t)); }
std::string_view to_string(AttackClass c) { return c == AttackClass::Flood ? "Flood" : "Crash"; }

std::optional<AttackType> parse_attack_type(std::string_view s) {
  for (std::size_t i = 0; i < kAttackNames.size(); ++i) {
    if (kAttackNames[i] == s) return static_cast<AttackType>(i);
  }
  return std::nullopt;
}

}  // namespace honeymesh
