#include "honeymesh/detection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "honeymesh/errors.hpp"

namespace honeymesh {

namespace {
constexpr std::array<std::string_view, 10> kDefenseEventNames = {
    "SuspicionRaised",   "ChallengeIssued",   "Escalated",     "Cleared",      "Confirmed",
    "RedirectInstalled", "EngagementStarted", "TrapTriggered", "FailoverDone", "BlockInstalled",
};
}  // namespace

std::string_view to_string(DefenseEventKind k) { return kDefenseEventNames.at(static_cast<std::size_t>(k)); }

std::optional<DefenseEventKind> parse_defense_event_kind(std::string_view s) {
  for (std::size_t i = 0; i < kDefenseEventNames.size(); ++i) {
    if (kDefenseEventNames[i] == s) return static_cast<DefenseEventKind>(i);
  }
  return std::nullopt;
}

}  // namespace honeymesh

namespace honeymesh::detection {

namespace {

template <typename Range>
Moments moments(const Range& xs) {
  Moments m;
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - m.mean) * (x - m.mean);
  m.stddev = std::max(std::sqrt(sq / static_cast<double>(xs.size())), kSigmaFloor);
  return m;
}

std::size_t proto_index(Protocol p) { return static_cast<std::size_t>(p); }

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Benign:
      return "Benign";
    case Verdict::Suspicious:
      return "Suspicious";
    case Verdict::Confirmed:
      return "Confirmed";
  }
  return "?";
}

std::string_view to_string(ResponseOutcome o) {
  switch (o) {
    case ResponseOutcome::Pass:
      return "Pass";
    case ResponseOutcome::Fail:
      return "Fail";
    case ResponseOutcome::Timeout:
      return "Timeout";
  }
  return "?";
}

BaselineModel train_baseline(std::span<const Observation> requests, std::size_t warmup_n) {
  if (warmup_n == 0) throw InsufficientSample("warmup_n must be positive");
  if (requests.size() < warmup_n) {
    throw InsufficientSample("baseline needs " + std::to_string(warmup_n) + " requests, got " +
                             std::to_string(requests.size()));
  }
  const auto sample = requests.first(warmup_n);
  BaselineModel m;
  m.trained_on = warmup_n;

  const SimTime t0 = sample.front().at;
  const auto buckets = static_cast<std::size_t>((sample.back().at - t0) / kBucketMs) + 1;
  std::vector<double> bucket_counts(buckets, 0.0);
  std::vector<double> sizes;
  std::vector<double> source_rates;
  sizes.reserve(warmup_n);
  source_rates.reserve(warmup_n);
  std::array<double, 3> proto{};
  std::unordered_map<Address, std::deque<SimTime>, AddressHash> recent;

  for (const auto& obs : sample) {
    bucket_counts[static_cast<std::size_t>((obs.at - t0) / kBucketMs)] += 1.0;
    sizes.push_back(static_cast<double>(obs.hdr.size_bytes));
    proto[proto_index(obs.hdr.protocol)] += 1.0;
    auto& window = recent[obs.hdr.src];
    while (!window.empty() && window.front() <= obs.at - kBucketMs) window.pop_front();
    window.push_back(obs.at);
    source_rates.push_back(static_cast<double>(window.size()) / static_cast<double>(kBucketMs));
  }
  for (auto& c : bucket_counts) c /= static_cast<double>(kBucketMs);

  m.arrival_rate = moments(bucket_counts);
  m.pkt_size = moments(sizes);
  m.per_source_rate = moments(source_rates);
  for (std::size_t i = 0; i < 3; ++i) m.protocol_mix[i] = proto[i] / static_cast<double>(warmup_n);
  return m;
}

void FlowStats::add(const PacketHeader& hdr, SimTime now) {
  expire(now);
  window.push_back(Entry{now, hdr.size_bytes, hdr.protocol});
  size_sum_ += hdr.size_bytes;
  ++proto_counts[proto_index(hdr.protocol)];
  last_seen = now;
  recompute();
}

void FlowStats::expire(SimTime now) {
  bool changed = false;
  while (!window.empty() && window.front().at <= now - kBucketMs) {
    size_sum_ -= window.front().size;
    --proto_counts[proto_index(window.front().protocol)];
    window.pop_front();
    changed = true;
  }
  if (changed) recompute();
}

void FlowStats::reset() {
  window.clear();
  size_sum_ = 0;
  proto_counts = {};
  rate = 0.0;
  mean_size = 0.0;
}

void FlowStats::recompute() {
  const auto n = static_cast<double>(window.size());
  rate = n / static_cast<double>(kBucketMs);
  mean_size = window.empty() ? 0.0 : static_cast<double>(size_sum_) / n;
}

double anomaly_score(const BaselineModel& m, const FlowStats& f, double z_cap) {
  const double z_rate = std::abs(f.rate - m.per_source_rate.mean) / std::max(m.per_source_rate.stddev, kSigmaFloor);
  const double z_size = std::abs(f.mean_size - m.pkt_size.mean) / std::max(m.pkt_size.stddev, kSigmaFloor);
  double total = 0.0;
  for (auto c : f.proto_counts) total += static_cast<double>(c);
  double l1 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double share = total > 0.0 ? static_cast<double>(f.proto_counts[i]) / total : 0.0;
    l1 += std::abs(share - m.protocol_mix[i]);
  }
  const double z_proto = l1 / kProtoMixScale;
  return std::min(1.0, std::max({z_rate, z_size, z_proto}) / z_cap);
}

bool decide_suspicion(double score, double threshold) { return score >= threshold; }

ResponseOutcome evaluate_response(const Challenge& c, const std::optional<PacketHeader>& resp, SimTime now) {
  if (!resp) return now > c.deadline ? ResponseOutcome::Timeout : ResponseOutcome::Fail;
  if (resp->nonce == c.nonce && now <= c.deadline) return ResponseOutcome::Pass;
  return ResponseOutcome::Fail;
}

NextAction next_action(const SuspicionRecord& rec, ResponseOutcome outcome) {
  switch (rec.level) {
    case ChallengeLevel::L1Pending:
      return outcome == ResponseOutcome::Pass ? NextAction::Clear : NextAction::Escalate;
    case ChallengeLevel::L2Pending:
      return outcome == ResponseOutcome::Pass ? NextAction::Clear : NextAction::Confirm;
    case ChallengeLevel::None:
      break;
  }
  throw std::invalid_argument("next_action on a record with no pending challenge");
}

PacketHeader challenge_packet(const Challenge& c, Address issuer) {
  PacketHeader h;
  h.protocol = Protocol::TCP;
  h.kind = PacketKind::Challenge;
  h.src = issuer;
  h.dst = c.issued_to;
  h.size_bytes = 64;
  h.nonce = c.nonce;
  h.challenge_level = c.level;
  h.sent_at = c.issued_at;
  return h;
}

PacketHeader challenge_response(const PacketHeader& challenge, Address responder, bool correct) {
  PacketHeader h;
  h.protocol = Protocol::TCP;
  h.kind = PacketKind::ChallengeResponse;
  h.src = responder;
  h.dst = challenge.src;
  h.size_bytes = 64;
  h.nonce = correct ? challenge.nonce : ~challenge.nonce;
  h.challenge_level = challenge.challenge_level;
  return h;
}

void Detector::Outputs::clear() {
  packets.clear();
  timers.clear();
  events.clear();
  cleared.clear();
  confirmed.clear();
}

Detector::Detector(std::string origin, Address issuer, BaselineModel baseline, DetectionConfig cfg, std::uint64_t seed,
                   std::vector<Address> guarded)
    : origin_(std::move(origin)),
      issuer_(issuer),
      baseline_(baseline),
      cfg_(cfg),
      rng_(seed),
      guarded_(std::move(guarded)) {}

void Detector::rehost(std::string origin, Address issuer) {
  origin_ = std::move(origin);
  issuer_ = issuer;
}

bool Detector::is_guarded(Address a) const { return std::find(guarded_.begin(), guarded_.end(), a) != guarded_.end(); }

void Detector::event(Outputs& out, SimTime now, DefenseEventKind kind, Address source, std::string detail) {
  out.events.push_back(DefenseEvent{now, kind, source, origin_, std::move(detail)});
}

void Detector::sweep_idle(SimTime now) {
  last_sweep_ = now;
  for (auto it = flows_.begin(); it != flows_.end();) {
    if (it->second.last_seen + cfg_.idle_evict_ms > now) {
      ++it;
      continue;
    }
    auto rec = records_.find(it->first);
    if (rec != records_.end()) {
      if (rec->second.level != ChallengeLevel::None) {
        ++it;
        continue;
      }
      if (rec->second.verdict != Verdict::Confirmed) records_.erase(rec);
    }
    it = flows_.erase(it);
  }
}

Verdict Detector::observe(const PacketHeader& hdr, SimTime now, Outputs& out) {
  if (now - last_sweep_ >= kBucketMs) sweep_idle(now);
  const Address src = hdr.src;
  auto rec_it = records_.find(src);
  if (rec_it != records_.end() && rec_it->second.verdict == Verdict::Confirmed) return Verdict::Confirmed;

  auto& flow = flows_[src];
  flow.source = src;
  flow.add(hdr, now);
  if (rec_it != records_.end() && rec_it->second.verdict == Verdict::Suspicious) return Verdict::Suspicious;

  const double score = is_guarded(src) ? 1.0 : anomaly_score(baseline_, flow, cfg_.z_cap);
  if (!decide_suspicion(score, cfg_.suspicion_threshold)) {
    if (rec_it != records_.end()) rec_it->second.score = score;
    return Verdict::Benign;
  }
  auto& rec = records_[src];
  rec.source = src;
  rec.score = score;
  rec.verdict = Verdict::Suspicious;
  event(out, now, DefenseEventKind::SuspicionRaised, src);
  issue_challenge(src, 1, now, out);
  return Verdict::Suspicious;
}

Challenge Detector::issue_challenge(Address source, std::uint8_t level, SimTime now, Outputs& out) {
  if (level != 1 && level != 2) throw std::invalid_argument("challenge level must be 1 or 2");
  if (pending_.count(source)) {
    throw ChallengeOutstanding("challenge already outstanding for " + std::to_string(source.value));
  }
  Challenge c{next_challenge_++, level, source, now, now + cfg_.challenge_timeout_ms, rng_()};
  pending_.emplace(source, c);
  by_id_.emplace(c.id, source);

  auto& rec = records_[source];
  rec.source = source;
  if (rec.verdict == Verdict::Benign) rec.verdict = Verdict::Suspicious;
  rec.level = level == 1 ? ChallengeLevel::L1Pending : ChallengeLevel::L2Pending;
  ++rec.challenges_sent;
  rec.last_challenge_id = c.id;

  out.packets.push_back(challenge_packet(c, issuer_));
  out.timers.push_back({c.deadline, c.id});
  event(out, now, DefenseEventKind::ChallengeIssued, source, level == 1 ? "L1" : "L2");
  return c;
}

void Detector::engage(Address source, SimTime now, Outputs& out) {
  if (pending_.count(source) || engagements_.count(source)) return;
  Challenge c{next_challenge_++, 2, source, now, now + cfg_.challenge_timeout_ms, rng_()};
  engagements_.emplace(source, c);
  by_id_.emplace(c.id, source);
  out.packets.push_back(challenge_packet(c, issuer_));
  out.timers.push_back({c.deadline, c.id});
  event(out, now, DefenseEventKind::ChallengeIssued, source, "engage");
}

void Detector::on_response(const PacketHeader& resp, SimTime now, Outputs& out) {
  const Address src = resp.src;
  if (auto eng = engagements_.find(src); eng != engagements_.end() && eng->second.nonce == resp.nonce) {
    by_id_.erase(eng->second.id);
    engagements_.erase(eng);
    return;
  }
  auto it = pending_.find(src);
  if (it == pending_.end()) return;
  const Challenge c = it->second;
  pending_.erase(it);
  by_id_.erase(c.id);
  const auto outcome = evaluate_response(c, resp, now);
  apply(records_[src], c, outcome, now, out);
}

void Detector::on_window_close(std::uint64_t challenge_id, SimTime now, Outputs& out) {
  auto id_it = by_id_.find(challenge_id);
  if (id_it == by_id_.end()) return;  // answered already
  const Address src = id_it->second;
  by_id_.erase(id_it);
  if (auto eng = engagements_.find(src); eng != engagements_.end() && eng->second.id == challenge_id) {
    engagements_.erase(eng);
    return;
  }
  auto it = pending_.find(src);
  if (it == pending_.end() || it->second.id != challenge_id) return;
  const Challenge c = it->second;
  pending_.erase(it);
  // The window is closed: evaluation happens strictly after the deadline.
  const auto outcome = evaluate_response(c, std::nullopt, std::max(now, c.deadline + 1));
  apply(records_[src], c, outcome, now, out);
}

void Detector::apply(SuspicionRecord& rec, const Challenge& c, ResponseOutcome outcome, SimTime now, Outputs& out) {
  const std::string detail = std::string(c.level == 1 ? "L1:" : "L2:") + std::string(to_string(outcome));
  switch (next_action(rec, outcome)) {
    case NextAction::Clear:
      rec.verdict = Verdict::Benign;
      rec.score = 0.0;
      rec.level = ChallengeLevel::None;
      if (auto f = flows_.find(rec.source); f != flows_.end()) f->second.reset();
      event(out, now, DefenseEventKind::Cleared, rec.source, detail);
      out.cleared.push_back(rec.source);
      break;
    case NextAction::Escalate:
      rec.level = ChallengeLevel::None;
      event(out, now, DefenseEventKind::Escalated, rec.source, detail);
      issue_challenge(rec.source, 2, now, out);
      break;
    case NextAction::Confirm:
      rec.verdict = Verdict::Confirmed;
      rec.level = ChallengeLevel::None;
      event(out, now, DefenseEventKind::Confirmed, rec.source, detail);
      out.confirmed.push_back(rec.source);
      break;
  }
}

Verdict Detector::verdict(Address source) const {
  auto it = records_.find(source);
  return it == records_.end() ? Verdict::Benign : it->second.verdict;
}

const SuspicionRecord* Detector::record(Address source) const {
  auto it = records_.find(source);
  return it == records_.end() ? nullptr : &it->second;
}

const FlowStats* Detector::flow(Address source) const {
  auto it = flows_.find(source);
  return it == flows_.end() ? nullptr : &it->second;
}

const std::optional<Challenge> Detector::outstanding(Address source) const {
  auto it = pending_.find(source);
  if (it == pending_.end()) return std::nullopt;
  return it->second;
}

}  // namespace honeymesh::detection
