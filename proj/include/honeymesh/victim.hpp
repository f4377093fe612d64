#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "honeymesh/detection.hpp"
#include "honeymesh/types.hpp"

namespace honeymesh::victim {

struct ServerConfig {
  double service_rate_pkts_per_ms = 0.1;
  std::size_t queue_cap = 200;
  std::size_t syn_backlog_cap = 64;
  SimTime syn_halfopen_timeout_ms = 3000;
  std::int64_t reassembly_max_bytes = 65535;
  std::set<AttackType> vulnerable_to;
  SimTime reboot_time_ms = 60000;

  /// Throws ValidationError.
  void validate() const;
  /// Whole milliseconds needed to serve one request.
  SimTime service_time_ms() const;
};

/// Per-source fragment accumulators, bounded so a fragment flood cannot grow
/// them without limit.
class FragmentBuffers {
 public:
  static constexpr std::size_t kPerSourceCap = 64;

  bool overlaps(Address src, const Fragment& f) const;
  void add(Address src, const Fragment& f);
  void clear() { buffers_.clear(); }
  std::size_t sources() const noexcept { return buffers_.size(); }

 private:
  std::unordered_map<Address, std::deque<Fragment>, AddressHash> buffers_;
};

/// Structural crash triggers, checked in a fixed order (Land, PingOfDeath,
/// Nuke, Teardrop). Returns the first trigger that fires and is listed in
/// `exposed`. Shared by production servers and honey VM traps.
std::optional<AttackType> crash_trigger(const PacketHeader& hdr, const std::set<AttackType>& exposed,
                                        std::int64_t reassembly_max_bytes, const FragmentBuffers& frags);

enum class Mode : std::uint8_t { Healthy, Crashed, Rebooting };

std::string_view to_string(Mode m);

struct QueuedRequest {
  PacketHeader hdr;
  SimTime arrived = 0;
};

struct ServerState {
  Mode mode = Mode::Healthy;
  std::optional<AttackType> crash_cause;
  SimTime crashed_at = 0;
  SimTime reboot_until = 0;
  std::deque<QueuedRequest> queue;
  std::optional<QueuedRequest> in_service;
  std::map<std::pair<Address, std::uint64_t>, SimTime> syn_backlog;  // (src, connection) -> expiry
  FragmentBuffers frag_buffers;
  std::uint64_t delivered_count = 0;
  std::uint64_t served_count = 0;
  std::uint64_t dropped_count = 0;
  std::uint64_t service_epoch = 0;

  std::uint64_t in_flight() const { return queue.size() + (in_service ? 1 : 0); }
};

std::optional<AttackType> vulnerability_check(const PacketHeader& hdr, const ServerConfig& cfg, const ServerState& st);

/// What one server step asks of the event loop.
struct ServerOutput {
  struct Served {
    PacketHeader request;
    SimTime latency_ms = 0;
    std::optional<PacketHeader> reply;
  };

  std::vector<Served> served;
  std::vector<PacketHeader> dropped;
  std::optional<AttackType> crashed;
  std::optional<SimTime> service_done_at;  // schedule complete_service(service_epoch) here
  std::uint64_t service_epoch = 0;
  std::optional<SimTime> halfopen_expiry;  // schedule expire_halfopen here

  void clear();
};

/// A production server with a finite FIFO, a SYN backlog and the configured
/// crash vulnerabilities.
class ProductionServer {
 public:
  ProductionServer(Address address, ServerConfig cfg);

  Address address() const noexcept { return address_; }
  const ServerConfig& config() const noexcept { return cfg_; }
  const ServerState& state() const noexcept { return st_; }

  /// One packet delivered to the server.
  void handle(const PacketHeader& hdr, SimTime now, ServerOutput& out);
  /// Service completion for `epoch`; stale epochs (pre-crash) are ignored.
  void complete_service(std::uint64_t epoch, SimTime now, ServerOutput& out);
  /// Reclaims half-open entries whose timeout is <= now.
  std::size_t expire_halfopen(SimTime now);
  /// Crashed -> Rebooting(until = now + reboot_time). Returns the until time.
  SimTime begin_reboot(SimTime now);
  /// Rebooting -> Healthy with empty queue, backlog and fragment buffers.
  void finish_reboot(SimTime now);

 private:
  void crash(AttackType cause, SimTime now, ServerOutput& out);
  void start_next(SimTime now, ServerOutput& out);
  void drop(const PacketHeader& hdr, ServerOutput& out);
  std::optional<PacketHeader> reply_for(const PacketHeader& req, SimTime now) const;

  Address address_;
  ServerConfig cfg_;
  ServerState st_;
};

enum class GateDecision : std::uint8_t { Forward, ChallengeIssued, Dropped };

std::string_view to_string(GateDecision d);

/// Gateway daemon running inside a production server. Packets from a source
/// under verification are held until the ladder settles: released to the
/// server on Clear, discarded on Confirm.
class HoneyDaemon {
 public:
  /// Disabled daemon: everything is forwarded.
  HoneyDaemon() = default;
  HoneyDaemon(detection::Detector detector, std::size_t hold_cap);

  bool enabled() const noexcept { return detector_.has_value(); }

  GateDecision gate(const PacketHeader& hdr, SimTime now, detection::Detector::Outputs& out);
  void on_response(const PacketHeader& resp, SimTime now, detection::Detector::Outputs& out);
  void on_window_close(std::uint64_t challenge_id, SimTime now, detection::Detector::Outputs& out);

  /// Held packets released by a Clear since the last call.
  std::vector<PacketHeader> take_released();
  /// Held packets discarded by a Confirm since the last call.
  std::vector<PacketHeader> take_discarded();

  std::size_t held() const noexcept;
  const detection::Detector* detector() const { return detector_ ? &*detector_ : nullptr; }

 private:
  void settle(const detection::Detector::Outputs& out, std::size_t cleared_from, std::size_t confirmed_from);

  std::optional<detection::Detector> detector_;
  std::size_t hold_cap_ = 64;
  std::map<Address, std::vector<PacketHeader>> holds_;
  std::vector<PacketHeader> released_;
  std::vector<PacketHeader> discarded_;
};

}  // namespace honeymesh::victim
