#include "honeymesh/honeyfarm.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "honeymesh/errors.hpp"
#include "honeymesh/traffic.hpp"

namespace honeymesh::farm {

namespace {
constexpr std::array<std::string_view, 4> kServiceNames = {"Web", "File", "Mail", "Dns"};
constexpr std::array<std::string_view, 2> kInteractionNames = {"Low", "High"};
constexpr std::array<std::string_view, 5> kLifecycleNames = {"Standby", "Active", "Engaged", "Compromised",
                                                             "Restoring"};
}  // namespace

std::string_view to_string(Service s) { return kServiceNames.at(static_cast<std::size_t>(s)); }
std::string_view to_string(Interaction i) { return kInteractionNames.at(static_cast<std::size_t>(i)); }
std::string_view to_string(Lifecycle l) { return kLifecycleNames.at(static_cast<std::size_t>(l)); }

std::optional<Service> parse_service(std::string_view s) {
  for (std::size_t i = 0; i < kServiceNames.size(); ++i) {
    if (kServiceNames[i] == s) return static_cast<Service>(i);
  }
  return std::nullopt;
}

std::optional<Interaction> parse_interaction(std::string_view s) {
  for (std::size_t i = 0; i < kInteractionNames.size(); ++i) {
    if (kInteractionNames[i] == s) return static_cast<Interaction>(i);
  }
  return std::nullopt;
}

bool legal_transition(Lifecycle from, Lifecycle to) {
  using L = Lifecycle;
  switch (from) {
    case L::Standby:
      return to == L::Active;
    case L::Active:
      return to == L::Engaged || to == L::Compromised;
    case L::Engaged:
      return to == L::Engaged || to == L::Active || to == L::Compromised;
    case L::Compromised:
      return to == L::Restoring;
    case L::Restoring:
      return to == L::Standby;
  }
  return false;
}

void HoneyVmProfile::validate() const {
  if (exposed_vulns.empty()) throw ValidationError("honey VM profile needs at least one exposed vulnerability");
  for (auto t : exposed_vulns) {
    if (!is_crash_attack(t)) {
      throw ValidationError("exposed_vulns lists non-crash attack " + std::string(honeymesh::to_string(t)));
    }
  }
  if (engage_reply_latency_ms < 0) throw ValidationError("engage_reply_latency_ms must be >= 0");
}

bool HoneyVmProfile::answers(const PacketHeader& hdr) const {
  switch (hdr.kind) {
    case PacketKind::Syn:
    case PacketKind::EchoRequest:
      return true;
    case PacketKind::Data:
      return interaction == Interaction::High;
    default:
      return false;
  }
}

HoneyFarm::HoneyFarm(std::vector<HoneyVmProfile> profiles, std::vector<VmSpec> vms, SimTime restore_delay_ms)
    : profiles_(std::move(profiles)), restore_delay_ms_(restore_delay_ms) {
  if (restore_delay_ms_ < 0) throw ValidationError("restore_delay_ms must be >= 0");
  for (const auto& p : profiles_) p.validate();
  for (std::size_t i = 0; i < profiles_.size(); ++i) {
    for (std::size_t j = i + 1; j < profiles_.size(); ++j) {
      if (profiles_[i].mimics == profiles_[j].mimics) {
        throw ValidationError("two honey VM profiles mimic " + std::string(to_string(profiles_[i].mimics)));
      }
    }
  }
  for (std::size_t i = 0; i < vms.size(); ++i) {
    if (vms[i].profile >= profiles_.size()) throw ValidationError("honey VM '" + vms[i].name + "' has no profile");
    HoneyVmState st;
    st.id = i;
    st.node = vms[i].node;
    st.name = std::move(vms[i].name);
    st.address = vms[i].address;
    st.profile = vms[i].profile;
    vms_.push_back(std::move(st));
  }
  for (std::size_t p = 0; p < profiles_.size(); ++p) {
    auto first = std::find_if(vms_.begin(), vms_.end(), [p](const HoneyVmState& v) { return v.profile == p; });
    if (first == vms_.end()) {
      throw ValidationError("profile " + std::string(to_string(profiles_[p].mimics)) + " has no VMs");
    }
    first->lifecycle = Lifecycle::Active;
  }
}

void HoneyFarm::transition(HoneyVmState& vm, Lifecycle to) {
  if (!legal_transition(vm.lifecycle, to)) {
    throw std::logic_error("illegal honey VM transition " + std::string(to_string(vm.lifecycle)) + " -> " +
                           std::string(to_string(to)));
  }
  const bool changed = vm.lifecycle != to;
  vm.lifecycle = to;
  if (changed) changes_.push_back({vm.id, to});
}

std::optional<std::size_t> HoneyFarm::active_vm(std::size_t profile) const {
  for (const auto& v : vms_) {
    if (v.profile == profile && v.operational()) return v.id;
  }
  return std::nullopt;
}

std::optional<std::size_t> HoneyFarm::profile_for(Service s) const {
  for (std::size_t i = 0; i < profiles_.size(); ++i) {
    if (profiles_[i].mimics == s) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> HoneyFarm::find_by_address(Address a) const {
  for (const auto& v : vms_) {
    if (v.address == a) return v.id;
  }
  return std::nullopt;
}

std::optional<AttackType> HoneyFarm::trap_trigger(std::size_t vm, const PacketHeader& pkt) const {
  const auto& v = vms_.at(vm);
  return victim::crash_trigger(pkt, profiles_[v.profile].exposed_vulns, traffic::kMaxIpDatagram, v.frags);
}

EngageResult HoneyFarm::engage(std::size_t vm_id, const PacketHeader& pkt, SimTime now) {
  auto& vm = vms_.at(vm_id);
  if (!vm.operational()) {
    throw NotOperational("honey VM '" + vm.name + "' is " + std::string(to_string(vm.lifecycle)));
  }
  ++delivered_;
  EngageResult res;
  res.first_engagement = seen_sources_.insert(pkt.src).second;
  vm.engaged_with = pkt.src;
  transition(vm, Lifecycle::Engaged);

  res.trapped = trap_trigger(vm_id, pkt);
  if (pkt.frag) vm.frags.add(pkt.src, *pkt.frag);
  const auto& profile = profiles_[vm.profile];
  if (res.trapped) {
    vm.attack_log.push_back({now, pkt.src, pkt.dst, pkt.kind, pkt.protocol, pkt.size_bytes,
                             "trapped:" + std::string(honeymesh::to_string(*res.trapped))});
    vm.compromised_at = now;
    transition(vm, Lifecycle::Compromised);
    return res;
  }

  const bool replies = profile.answers(pkt);
  vm.attack_log.push_back(
      {now, pkt.src, pkt.dst, pkt.kind, pkt.protocol, pkt.size_bytes, replies ? "mimic" : "logged"});
  if (!replies) return res;

  PacketHeader r;
  r.src = pkt.dst;  // answers as the production server it stands in for
  r.dst = pkt.src;
  r.request_id = pkt.request_id;
  r.sent_at = now + profile.engage_reply_latency_ms;
  switch (pkt.kind) {
    case PacketKind::Syn:
      r.protocol = Protocol::TCP;
      r.kind = PacketKind::SynAck;
      r.size_bytes = traffic::kSynBytes;
      break;
    case PacketKind::EchoRequest:
      r.protocol = Protocol::ICMP;
      r.kind = PacketKind::EchoReply;
      r.size_bytes = pkt.size_bytes;
      break;
    default:
      if (pkt.protocol == Protocol::UDP) {
        r.protocol = Protocol::ICMP;
        r.kind = PacketKind::DestUnreachable;
        r.size_bytes = 56;
      } else {
        r.protocol = Protocol::TCP;
        r.kind = PacketKind::Data;
        r.size_bytes = 512;
      }
      break;
  }
  res.reply = r;
  return res;
}

void HoneyFarm::log(std::size_t vm, const PacketHeader& pkt, SimTime now, std::string action) {
  auto& v = vms_.at(vm);
  ++delivered_;
  v.attack_log.push_back({now, pkt.src, pkt.dst, pkt.kind, pkt.protocol, pkt.size_bytes, std::move(action)});
}

FailoverResult HoneyFarm::failover(std::size_t failed, SimTime now) {
  auto& vm = vms_.at(failed);
  if (vm.lifecycle != Lifecycle::Compromised) throw std::logic_error("failover of a VM that is not compromised");
  vm.restoring_until = now + restore_delay_ms_;
  transition(vm, Lifecycle::Restoring);
  FailoverResult res;
  for (auto& cand : vms_) {
    if (cand.profile == vm.profile && cand.lifecycle == Lifecycle::Standby) {
      transition(cand, Lifecycle::Active);
      res.activated = cand.id;
      break;
    }
  }
  return res;
}

std::vector<std::size_t> HoneyFarm::restore_tick(SimTime now,
                                                 std::vector<std::pair<std::size_t, std::vector<LogEntry>>>& archived) {
  std::vector<std::size_t> restored;
  for (auto& vm : vms_) {
    if (vm.lifecycle != Lifecycle::Restoring || vm.restoring_until > now) continue;
    transition(vm, Lifecycle::Standby);
    archived.emplace_back(vm.id, std::exchange(vm.attack_log, {}));
    vm.frags.clear();
    vm.engaged_with = Address{};
    restored.push_back(vm.id);
  }
  for (std::size_t p = 0; p < profiles_.size(); ++p) {
    if (active_vm(p)) continue;
    for (auto& vm : vms_) {
      if (vm.profile == p && vm.lifecycle == Lifecycle::Standby) {
        transition(vm, Lifecycle::Active);
        break;
      }
    }
  }
  return restored;
}

void HoneyFarm::on_block(Address source) {
  for (auto& vm : vms_) {
    if (vm.lifecycle == Lifecycle::Engaged && vm.engaged_with == source) transition(vm, Lifecycle::Active);
  }
}

std::optional<SimTime> HoneyFarm::next_restore() const {
  std::optional<SimTime> best;
  for (const auto& vm : vms_) {
    if (vm.lifecycle == Lifecycle::Restoring && (!best || vm.restoring_until < *best)) best = vm.restoring_until;
  }
  return best;
}

std::vector<StateChange> HoneyFarm::take_changes() { return std::exchange(changes_, {}); }

}  // namespace honeymesh::farm
