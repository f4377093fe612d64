#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "honeymesh/defense_event.hpp"
#include "honeymesh/types.hpp"

namespace honeymesh::detection {

inline constexpr double kSigmaFloor = 1e-6;
inline constexpr SimTime kBucketMs = 1000;
/// Protocol-mix L1 distance that counts as one pseudo standard deviation.
inline constexpr double kProtoMixScale = 0.25;

struct Moments {
  double mean = 0.0;
  double stddev = kSigmaFloor;
};

/// Learned statistics of expected traffic for one protected service.
struct BaselineModel {
  Moments arrival_rate;     // pkts/ms over fixed 1000 ms buckets
  Moments pkt_size;         // bytes
  std::array<double, 3> protocol_mix{};  // indexed by Protocol
  Moments per_source_rate;  // pkts/ms in a sliding 1000 ms window per claimed source
  std::size_t trained_on = 0;
};

/// A request packet as seen by a detector, stamped with its arrival time.
struct Observation {
  SimTime at = 0;
  PacketHeader hdr;
};

/// Trains on exactly the first `warmup_n` observations of a time-ordered
/// sample. Throws InsufficientSample when the sample is shorter.
BaselineModel train_baseline(std::span<const Observation> requests, std::size_t warmup_n = 2000);

/// Per-source behaviour over a sliding 1000 ms window. Only packets whose
/// claimed source equals `source` are added.
struct FlowStats {
  struct Entry {
    SimTime at;
    std::int64_t size;
    Protocol protocol;
  };

  Address source;
  std::deque<Entry> window;
  double rate = 0.0;       // pkts/ms
  double mean_size = 0.0;  // bytes
  std::array<std::int64_t, 3> proto_counts{};
  SimTime last_seen = 0;

  void add(const PacketHeader& hdr, SimTime now);
  void expire(SimTime now);
  void reset();

 private:
  void recompute();
  std::int64_t size_sum_ = 0;
};

double anomaly_score(const BaselineModel& m, const FlowStats& f, double z_cap = 6.0);
bool decide_suspicion(double score, double threshold);

enum class Verdict : std::uint8_t { Benign, Suspicious, Confirmed };
enum class ChallengeLevel : std::uint8_t { None, L1Pending, L2Pending };

std::string_view to_string(Verdict v);

struct SuspicionRecord {
  Address source;
  double score = 0.0;
  ChallengeLevel level = ChallengeLevel::None;
  std::uint32_t challenges_sent = 0;
  std::optional<std::uint64_t> last_challenge_id;
  Verdict verdict = Verdict::Benign;
};

struct Challenge {
  std::uint64_t id = 0;
  std::uint8_t level = 1;
  Address issued_to;
  SimTime issued_at = 0;
  SimTime deadline = 0;
  std::uint64_t nonce = 0;
};

enum class ResponseOutcome : std::uint8_t { Pass, Fail, Timeout };
enum class NextAction : std::uint8_t { Clear, Escalate, Confirm };

std::string_view to_string(ResponseOutcome o);

/// Timeout when `now` is past the deadline with no response; Pass when the
/// response carries the right nonce and arrived by the deadline; Fail
/// otherwise.
ResponseOutcome evaluate_response(const Challenge& c, const std::optional<PacketHeader>& resp, SimTime now);

/// Ladder transition for a pending record. Requires level L1Pending or
/// L2Pending.
NextAction next_action(const SuspicionRecord& rec, ResponseOutcome outcome);

struct DetectionConfig {
  std::size_t warmup_n = 2000;
  double suspicion_threshold = 0.5;
  SimTime challenge_timeout_ms = 2000;
  double z_cap = 6.0;
  SimTime idle_evict_ms = 60000;
  std::size_t hold_cap = 64;
};

/// Builds the Challenge packet for `c`, sent from `issuer`.
PacketHeader challenge_packet(const Challenge& c, Address issuer);
/// The correct answer to a challenge packet.
PacketHeader challenge_response(const PacketHeader& challenge, Address responder, bool correct);

/// Behavioural detection plus the two-level challenge ladder for one host
/// (a honey VM or a honey-d). Never sees ground truth: it works on headers.
class Detector {
 public:
  /// Requests a window-close callback for challenge `challenge_id` at `at`.
  struct WindowTimer {
    SimTime at;
    std::uint64_t challenge_id;
  };

  struct Outputs {
    std::vector<PacketHeader> packets;  // challenges to send
    std::vector<WindowTimer> timers;
    std::vector<DefenseEvent> events;
    std::vector<Address> cleared;
    std::vector<Address> confirmed;

    void clear();
  };

  /// `guarded` lists addresses this detector protects; a packet arriving
  /// with one of them as its claimed source is maximally anomalous.
  Detector(std::string origin, Address issuer, BaselineModel baseline, DetectionConfig cfg, std::uint64_t seed,
           std::vector<Address> guarded = {});

  /// Scores one request packet. Returns the source's verdict after the
  /// packet: Benign (forward), Suspicious (challenge pending) or Confirmed.
  Verdict observe(const PacketHeader& hdr, SimTime now, Outputs& out);

  /// A ChallengeResponse addressed to this detector.
  void on_response(const PacketHeader& resp, SimTime now, Outputs& out);

  /// Called once the response window of `challenge_id` has closed, i.e. after
  /// every packet arriving at the deadline has been processed.
  void on_window_close(std::uint64_t challenge_id, SimTime now, Outputs& out);

  /// Throws ChallengeOutstanding when the source already has one pending.
  Challenge issue_challenge(Address source, std::uint8_t level, SimTime now, Outputs& out);

  /// Keeps an already-redirected source busy with a challenge query, at most
  /// one outstanding per source. No effect on the source's verdict.
  void engage(Address source, SimTime now, Outputs& out);

  Verdict verdict(Address source) const;
  const SuspicionRecord* record(Address source) const;
  const FlowStats* flow(Address source) const;
  const std::optional<Challenge> outstanding(Address source) const;

  /// Moves the detector to a new host; later challenges come from `issuer`.
  void rehost(std::string origin, Address issuer);

  const std::string& origin() const noexcept { return origin_; }
  Address issuer() const noexcept { return issuer_; }
  const BaselineModel& baseline() const noexcept { return baseline_; }
  const DetectionConfig& config() const noexcept { return cfg_; }
  std::size_t tracked_flows() const noexcept { return flows_.size(); }

 private:
  void event(Outputs& out, SimTime now, DefenseEventKind kind, Address source, std::string detail = {});
  void apply(SuspicionRecord& rec, const Challenge& c, ResponseOutcome outcome, SimTime now, Outputs& out);
  void sweep_idle(SimTime now);
  bool is_guarded(Address a) const;

  std::string origin_;
  Address issuer_;
  BaselineModel baseline_;
  DetectionConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Address> guarded_;

  std::unordered_map<Address, FlowStats, AddressHash> flows_;
  std::unordered_map<Address, SuspicionRecord, AddressHash> records_;
  std::unordered_map<Address, Challenge, AddressHash> pending_;      // ladder challenges
  std::unordered_map<Address, Challenge, AddressHash> engagements_;  // engagement challenges
  std::unordered_map<std::uint64_t, Address> by_id_;
  std::uint64_t next_challenge_ = 1;
  SimTime last_sweep_ = 0;
};

}  // namespace honeymesh::detection
