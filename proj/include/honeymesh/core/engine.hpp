#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "honeymesh/types.hpp"

namespace honeymesh::core {

struct PacketArrival {
  NodeId node = kNoNode;
  NodeId from = kNoNode;
  Packet packet;
};

/// Owner-tagged timer. `owner` selects the subsystem, `tag` the timer type
/// within it and `arg` whatever key the owner needs.
struct TimerFire {
  std::uint32_t owner = 0;
  std::uint32_t tag = 0;
  std::int64_t arg = 0;
  std::int64_t arg2 = 0;
};

struct ServiceCompletion {
  NodeId node = kNoNode;
  std::uint64_t request = 0;
};

using EventPayload = std::variant<PacketArrival, TimerFire, ServiceCompletion>;

struct Event {
  SimTime at = 0;
  std::uint64_t seq = 0;
  EventPayload payload;
};

class SimClock {
 public:
  SimTime now() const noexcept { return now_; }

 private:
  friend class EventLoop;
  void advance(SimTime t) noexcept {
    if (t > now_) now_ = t;
  }
  SimTime now_ = 0;
};

/// Single-threaded discrete-event loop. Events are processed in (at, seq)
/// order; seq is assigned at scheduling time.
class EventLoop {
 public:
  using Handler = std::function<void(const Event&)>;

  const SimClock& clock() const noexcept { return clock_; }
  SimTime now() const noexcept { return clock_.now(); }

  /// Throws SchedulingInPast when at < now.
  std::uint64_t schedule(SimTime at, EventPayload payload);

  /// Processes every event with at <= t_end, then sets now to t_end.
  std::size_t run_until(SimTime t_end, const Handler& handler);

  std::size_t pending() const noexcept { return queue_.size(); }
  std::uint64_t processed_total() const noexcept { return processed_; }

  /// When enabled, (at, seq) of each processed event is appended to order_trace().
  void record_order(bool on) { record_order_ = on; }
  const std::vector<std::pair<SimTime, std::uint64_t>>& order_trace() const { return order_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  SimClock clock_;
  std::vector<Event> queue_;  // binary heap ordered by Later
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  bool record_order_ = false;
  std::vector<std::pair<SimTime, std::uint64_t>> order_;
};

}  // namespace honeymesh::core
