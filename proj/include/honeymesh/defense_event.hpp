#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "honeymesh/types.hpp"

namespace honeymesh {

enum class DefenseEventKind : std::uint8_t {
  SuspicionRaised,
  ChallengeIssued,
  Escalated,
  Cleared,
  Confirmed,
  RedirectInstalled,
  EngagementStarted,
  TrapTriggered,
  FailoverDone,
  BlockInstalled,
};

std::string_view to_string(DefenseEventKind k);
std::optional<DefenseEventKind> parse_defense_event_kind(std::string_view s);

/// One step of the defense pipeline, as written to the run trace.
/// `origin` names the detector or component ("honeyd:web", "vm:web-0",
/// "control"); `detail` is kind-specific (challenge level, router name, ...).
struct DefenseEvent {
  SimTime time = 0;
  DefenseEventKind kind = DefenseEventKind::SuspicionRaised;
  Address source;
  std::string origin;
  std::string detail;

  friend bool operator==(const DefenseEvent&, const DefenseEvent&) = default;
};

}  // namespace honeymesh
