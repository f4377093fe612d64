#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "honeymesh/types.hpp"
#include "honeymesh/victim.hpp"

namespace honeymesh::farm {

enum class Service : std::uint8_t { Web, File, Mail, Dns };
enum class Interaction : std::uint8_t { Low, High };

std::string_view to_string(Service s);
std::optional<Service> parse_service(std::string_view s);
std::string_view to_string(Interaction i);
std::optional<Interaction> parse_interaction(std::string_view s);

struct HoneyVmProfile {
  Service mimics = Service::Web;
  Interaction interaction = Interaction::High;
  std::set<AttackType> exposed_vulns;
  SimTime engage_reply_latency_ms = 5;

  /// Throws ValidationError.
  void validate() const;
  /// Whether the mimic answers this kind of request.
  bool answers(const PacketHeader& hdr) const;
};

enum class Lifecycle : std::uint8_t { Standby, Active, Engaged, Compromised, Restoring };

std::string_view to_string(Lifecycle l);
bool legal_transition(Lifecycle from, Lifecycle to);

struct LogEntry {
  SimTime at = 0;
  Address src;
  Address dst;
  PacketKind kind = PacketKind::Data;
  Protocol protocol = Protocol::TCP;
  std::int64_t size_bytes = 0;
  std::string action;
};

struct HoneyVmState {
  std::size_t id = 0;  // index in the farm, also the standby order
  NodeId node = kNoNode;
  std::string name;
  Address address;
  std::size_t profile = 0;
  Lifecycle lifecycle = Lifecycle::Standby;
  Address engaged_with;
  SimTime compromised_at = 0;
  SimTime restoring_until = 0;
  std::vector<LogEntry> attack_log;
  victim::FragmentBuffers frags;

  bool operational() const { return lifecycle == Lifecycle::Active || lifecycle == Lifecycle::Engaged; }
};

struct VmSpec {
  NodeId node = kNoNode;
  std::string name;
  Address address;
  std::size_t profile = 0;
};

struct EngageResult {
  std::optional<PacketHeader> reply;  // send at now + engage_reply_latency_ms
  std::optional<AttackType> trapped;
  bool first_engagement = false;      // first packet seen from this source
};

struct FailoverResult {
  std::optional<std::size_t> activated;
  bool exhausted() const { return !activated.has_value(); }
};

/// Observed lifecycle change, reported so the run trace can follow the pool.
struct StateChange {
  std::size_t vm = 0;
  Lifecycle to = Lifecycle::Standby;
};

/// Honey VMs on one physical host, grouped by the service they mimic. Per
/// profile, the lowest-id VM starts Active and the rest are its backup pool.
class HoneyFarm {
 public:
  HoneyFarm(std::vector<HoneyVmProfile> profiles, std::vector<VmSpec> vms, SimTime restore_delay_ms = 30000);

  /// The Active or Engaged VM for a profile, if the pool is not exhausted.
  std::optional<std::size_t> active_vm(std::size_t profile) const;
  std::optional<std::size_t> profile_for(Service s) const;

  /// A redirected packet reaching VM `vm`. Logs it, checks the trap and
  /// builds the mimic reply (suppressed when trapped). Throws NotOperational.
  EngageResult engage(std::size_t vm, const PacketHeader& pkt, SimTime now);

  /// Pure trap check against the VM's exposed vulnerabilities.
  std::optional<AttackType> trap_trigger(std::size_t vm, const PacketHeader& pkt) const;

  /// Requires `failed` Compromised. Moves it to Restoring and activates the
  /// lowest-id Standby of the same profile at the same instant.
  FailoverResult failover(std::size_t failed, SimTime now);

  /// Restoring VMs due at or before `now` return to Standby, lowest id first.
  /// Their logs are handed back through `archived` and cleared. A profile left
  /// without an operational VM activates its lowest Standby.
  std::vector<std::size_t> restore_tick(SimTime now, std::vector<std::pair<std::size_t, std::vector<LogEntry>>>& archived);

  /// Engaged(source) VMs go back to Active.
  void on_block(Address source);

  /// Appends a log entry for a packet that reached a VM outside engagement.
  void log(std::size_t vm, const PacketHeader& pkt, SimTime now, std::string action);

  std::optional<SimTime> next_restore() const;
  std::vector<StateChange> take_changes();

  const std::vector<HoneyVmState>& vms() const noexcept { return vms_; }
  const HoneyVmState& vm(std::size_t i) const { return vms_.at(i); }
  const std::vector<HoneyVmProfile>& profiles() const noexcept { return profiles_; }
  std::optional<std::size_t> find_by_address(Address a) const;
  SimTime restore_delay_ms() const noexcept { return restore_delay_ms_; }
  std::uint64_t delivered() const noexcept { return delivered_; }

 private:
  void transition(HoneyVmState& vm, Lifecycle to);

  std::vector<HoneyVmProfile> profiles_;
  std::vector<HoneyVmState> vms_;
  SimTime restore_delay_ms_;
  std::set<Address> seen_sources_;
  std::vector<StateChange> changes_;
  std::uint64_t delivered_ = 0;
};

}  // namespace honeymesh::farm
