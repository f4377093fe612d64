#include "honeymesh/victim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "honeymesh/errors.hpp"
#include "honeymesh/traffic.hpp"

namespace honeymesh::victim {

namespace {

constexpr std::int64_t kDataReplyBytes = 512;
constexpr std::int64_t kPortUnreachableBytes = 56;

bool overlap(const Fragment& a, const Fragment& b) {
  return a.offset < b.offset + b.length && b.offset < a.offset + a.length;
}

}  // namespace

void ServerConfig::validate() const {
  if (!(service_rate_pkts_per_ms > 0.0) || !std::isfinite(service_rate_pkts_per_ms)) {
    throw ValidationError("service_rate_pkts_per_ms must be positive");
  }
  if (queue_cap == 0 || syn_backlog_cap == 0) throw ValidationError("server caps must be positive");
  if (syn_halfopen_timeout_ms <= 0 || reboot_time_ms <= 0 || reassembly_max_bytes <= 0) {
    throw ValidationError("server timeouts and reassembly limit must be positive");
  }
  for (auto t : vulnerable_to) {
    if (!is_crash_attack(t)) {
      throw ValidationError("vulnerable_to lists non-crash attack " + std::string(honeymesh::to_string(t)));
    }
  }
}

SimTime ServerConfig::service_time_ms() const {
  return std::max<SimTime>(1, std::llround(1.0 / service_rate_pkts_per_ms));
}

bool FragmentBuffers::overlaps(Address src, const Fragment& f) const {
  auto it = buffers_.find(src);
  if (it == buffers_.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [&](const Fragment& g) { return overlap(f, g); });
}

void FragmentBuffers::add(Address src, const Fragment& f) {
  auto& buf = buffers_[src];
  if (buf.size() == kPerSourceCap) buf.pop_front();
  buf.push_back(f);
}

std::optional<AttackType> crash_trigger(const PacketHeader& hdr, const std::set<AttackType>& exposed,
                                        std::int64_t reassembly_max_bytes, const FragmentBuffers& frags) {
  auto armed = [&](AttackType t) { return exposed.count(t) > 0; };
  if (armed(AttackType::Land) && hdr.src == hdr.dst) return AttackType::Land;
  if (armed(AttackType::PingOfDeath)) {
    const bool oversized = hdr.size_bytes > reassembly_max_bytes ||
                           (hdr.frag && hdr.frag->offset + hdr.frag->length > reassembly_max_bytes);
    if (oversized) return AttackType::PingOfDeath;
  }
  if (armed(AttackType::Nuke) && traffic::is_malformed_icmp(hdr)) return AttackType::Nuke;
  if (armed(AttackType::Teardrop) && hdr.frag && frags.overlaps(hdr.src, *hdr.frag)) return AttackType::Teardrop;
  return std::nullopt;
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Healthy:
      return "Healthy";
    case Mode::Crashed:
      return "Crashed";
    case Mode::Rebooting:
      return "Rebooting";
  }
  return "?";
}

std::optional<AttackType> vulnerability_check(const PacketHeader& hdr, const ServerConfig& cfg, const ServerState& st) {
  return crash_trigger(hdr, cfg.vulnerable_to, cfg.reassembly_max_bytes, st.frag_buffers);
}

void ServerOutput::clear() {
  served.clear();
  dropped.clear();
  crashed.reset();
  service_done_at.reset();
  service_epoch = 0;
  halfopen_expiry.reset();
}

ProductionServer::ProductionServer(Address address, ServerConfig cfg) : address_(address), cfg_(std::move(cfg)) {
  cfg_.validate();
}

void ProductionServer::drop(const PacketHeader& hdr, ServerOutput& out) {
  ++st_.dropped_count;
  out.dropped.push_back(hdr);
}

void ProductionServer::handle(const PacketHeader& hdr, SimTime now, ServerOutput& out) {
  ++st_.delivered_count;
  if (st_.mode != Mode::Healthy) {
    drop(hdr, out);
    return;
  }
  if (auto cause = vulnerability_check(hdr, cfg_, st_)) {
    drop(hdr, out);
    crash(*cause, now, out);
    return;
  }

  switch (hdr.kind) {
    case PacketKind::Syn: {
      const auto key = std::pair{hdr.src, hdr.request_id};
      if (!st_.syn_backlog.count(key) && st_.syn_backlog.size() >= cfg_.syn_backlog_cap) {
        drop(hdr, out);
        return;
      }
      const SimTime expiry = now + cfg_.syn_halfopen_timeout_ms;
      st_.syn_backlog[key] = expiry;
      out.halfopen_expiry = expiry;
      ++st_.served_count;
      out.served.push_back({hdr, 0, reply_for(hdr, now)});
      return;
    }
    case PacketKind::Data:
    case PacketKind::EchoRequest:
    case PacketKind::Fragment:
      if (hdr.protocol == Protocol::TCP && hdr.kind == PacketKind::Data) {
        st_.syn_backlog.erase({hdr.src, hdr.request_id});
      }
      if (hdr.frag) st_.frag_buffers.add(hdr.src, *hdr.frag);
      if (st_.queue.size() >= cfg_.queue_cap) {
        drop(hdr, out);
        return;
      }
      st_.queue.push_back({hdr, now});
      start_next(now, out);
      return;
    default:
      drop(hdr, out);  // not a request
      return;
  }
}

void ProductionServer::start_next(SimTime now, ServerOutput& out) {
  if (st_.in_service || st_.queue.empty()) return;
  st_.in_service = st_.queue.front();
  st_.queue.pop_front();
  ++st_.service_epoch;
  out.service_done_at = now + cfg_.service_time_ms();
  out.service_epoch = st_.service_epoch;
}

void ProductionServer::complete_service(std::uint64_t epoch, SimTime now, ServerOutput& out) {
  if (epoch != st_.service_epoch || !st_.in_service) return;
  const QueuedRequest req = *st_.in_service;
  st_.in_service.reset();
  ++st_.served_count;
  out.served.push_back({req.hdr, now - req.arrived, reply_for(req.hdr, now)});
  start_next(now, out);
}

std::optional<PacketHeader> ProductionServer::reply_for(const PacketHeader& req, SimTime now) const {
  if (req.src == address_) return std::nullopt;  // loopback
  PacketHeader r;
  r.src = address_;
  r.dst = req.src;
  r.request_id = req.request_id;
  r.sent_at = now;
  switch (req.kind) {
    case PacketKind::Syn:
      r.protocol = Protocol::TCP;
      r.kind = PacketKind::SynAck;
      r.size_bytes = traffic::kSynBytes;
      return r;
    case PacketKind::EchoRequest:
      r.protocol = Protocol::ICMP;
      r.kind = PacketKind::EchoReply;
      r.size_bytes = req.size_bytes;
      return r;
    case PacketKind::Data:
      if (req.protocol == Protocol::UDP) {
        r.protocol = Protocol::ICMP;
        r.kind = PacketKind::DestUnreachable;
        r.size_bytes = kPortUnreachableBytes;
      } else {
        r.protocol = Protocol::TCP;
        r.kind = PacketKind::Data;
        r.size_bytes = kDataReplyBytes;
      }
      return r;
    default:
      return std::nullopt;
  }
}

void ProductionServer::crash(AttackType cause, SimTime now, ServerOutput& out) {
  st_.mode = Mode::Crashed;
  st_.crash_cause = cause;
  st_.crashed_at = now;
  if (st_.in_service) {
    drop(st_.in_service->hdr, out);
    st_.in_service.reset();
  }
  for (const auto& q : st_.queue) drop(q.hdr, out);
  st_.queue.clear();
  st_.syn_backlog.clear();
  st_.frag_buffers.clear();
  ++st_.service_epoch;
  out.crashed = cause;
}

std::size_t ProductionServer::expire_halfopen(SimTime now) {
  return std::erase_if(st_.syn_backlog, [now](const auto& kv) { return kv.second <= now; });
}

SimTime ProductionServer::begin_reboot(SimTime now) {
  if (st_.mode != Mode::Crashed) throw std::logic_error("begin_reboot on a server that has not crashed");
  st_.mode = Mode::Rebooting;
  st_.reboot_until = now + cfg_.reboot_time_ms;
  return st_.reboot_until;
}

void ProductionServer::finish_reboot(SimTime) {
  if (st_.mode != Mode::Rebooting) throw std::logic_error("finish_reboot on a server that is not rebooting");
  st_.mode = Mode::Healthy;
  st_.crash_cause.reset();
  st_.queue.clear();
  st_.syn_backlog.clear();
  st_.frag_buffers.clear();
}

std::string_view to_string(GateDecision d) {
  switch (d) {
    case GateDecision::Forward:
      return "Forward";
    case GateDecision::ChallengeIssued:
      return "ChallengeIssued";
    case GateDecision::Dropped:
      return "Dropped";
  }
  return "?";
}

HoneyDaemon::HoneyDaemon(detection::Detector detector, std::size_t hold_cap)
    : detector_(std::move(detector)), hold_cap_(hold_cap) {}

GateDecision HoneyDaemon::gate(const PacketHeader& hdr, SimTime now, detection::Detector::Outputs& out) {
  if (!detector_) return GateDecision::Forward;
  switch (detector_->observe(hdr, now, out)) {
    case detection::Verdict::Benign:
      return GateDecision::Forward;
    case detection::Verdict::Confirmed:
      return GateDecision::Dropped;
    case detection::Verdict::Suspicious:
      break;
  }
  auto& hold = holds_[hdr.src];
  if (hold.size() >= hold_cap_) return GateDecision::Dropped;
  hold.push_back(hdr);
  return GateDecision::ChallengeIssued;
}

void HoneyDaemon::on_response(const PacketHeader& resp, SimTime now, detection::Detector::Outputs& out) {
  if (!detector_) return;
  const auto c0 = out.cleared.size();
  const auto f0 = out.confirmed.size();
  detector_->on_response(resp, now, out);
  settle(out, c0, f0);
}

void HoneyDaemon::on_window_close(std::uint64_t challenge_id, SimTime now, detection::Detector::Outputs& out) {
  if (!detector_) return;
  const auto c0 = out.cleared.size();
  const auto f0 = out.confirmed.size();
  detector_->on_window_close(challenge_id, now, out);
  settle(out, c0, f0);
}

void HoneyDaemon::settle(const detection::Detector::Outputs& out, std::size_t cleared_from,
                         std::size_t confirmed_from) {
  auto move_out = [this](Address a, std::vector<PacketHeader>& into) {
    auto it = holds_.find(a);
    if (it == holds_.end()) return;
    into.insert(into.end(), it->second.begin(), it->second.end());
    holds_.erase(it);
  };
  for (std::size_t i = cleared_from; i < out.cleared.size(); ++i) move_out(out.cleared[i], released_);
  for (std::size_t i = confirmed_from; i < out.confirmed.size(); ++i) move_out(out.confirmed[i], discarded_);
}

std::vector<PacketHeader> HoneyDaemon::take_released() { return std::exchange(released_, {}); }
std::vector<PacketHeader> HoneyDaemon::take_discarded() { return std::exchange(discarded_, {}); }

std::size_t HoneyDaemon::held() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, v] : holds_) n += v.size();
  return n;
}

}  // namespace honeymesh::victim
