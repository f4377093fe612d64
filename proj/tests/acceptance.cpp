// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "honeymesh/detection.hpp"
#include "honeymesh/harness/config.hpp"
#include "honeymesh/harness/simulation.hpp"
#include "honeymesh/harness/sweep.hpp"
#include "honeymesh/victim.hpp"
#include "scenarios.hpp"

using namespace honeymesh;
using namespace honeymesh::harness;
using nlohmann::json;

namespace {

constexpr const char* kCrashAttacks[] = {"Teardrop", "PingOfDeath", "Land", "Nuke"};
constexpr int kSeeds = 20;

struct Ledger {
  std::vector<std::string> ordering_failures;
  std::vector<std::string> replay_failures;
  std::vector<std::pair<std::string, json>> determinism_set;  // scenarios rerun for AC5
  std::size_t runs = 0;
};

Ledger ledger;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// Runs a scenario document and checks the suite-wide properties on it.
RunResult run(const std::string& name, const json& doc, bool keep_for_replay = false) {
  auto result = run_scenario(config_from_json(doc));
  ++ledger.runs;
  if (auto v = scenarios::ordering_violation(result.trace); !v.empty()) {
    ledger.ordering_failures.push_back(name + ": " + v);
  }
  if (report_from_trace(parse_trace(serialize_trace(result.trace))) != result.report) {
    ledger.replay_failures.push_back(name);
  }
  if (keep_for_replay) ledger.determinism_set.emplace_back(name, doc);
  return result;
}

/// Served / sent over the buckets [from, to) of the success series.
double window_success(const MetricsReport& r, std::size_t from, std::size_t to) {
  std::uint64_t sent = 0, served = 0;
  for (std::size_t i = from; i < to && i < r.series_sent.size(); ++i) {
    sent += r.series_sent[i];
    served += r.series_served[i];
  }
  return sent == 0 ? 1.0 : static_cast<double>(served) / static_cast<double>(sent);
}

bool report(const std::string& id, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << id << "  " << detail << std::endl;
  return pass;
}

// ---------------------------------------------------------------------------

bool flood_mitigation(std::optional<SimTime>& confirm_after_challenge) {
  constexpr SimTime kStart = 60000, kEnd = 120000;
  scenarios::Shape s;
  s.duration_ms = 180000;
  const json on = scenarios::synflood(s, 1.0, kStart, kEnd);  // 10 agents, ten times the service rate
  const json off = scenarios::no_defense(on);

  const auto off_run = run("AC1 synflood defense-off", off, true);
  const auto t0 = std::chrono::steady_clock::now();
  const auto on_run = run("AC1 synflood defense-on", on, true);
  const double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double off_success = window_success(off_run.report, kStart / 1000, kEnd / 1000);
  const auto& sc = on_run.report.scenarios.at(0);
  const SimTime timeout = config_from_json(on).detection.challenge_timeout_ms;
  const SimTime bound = 2 * timeout + 2 * detection::kBucketMs;
  bool pass = sc.time_to_first_confirm_ms.has_value();
  double on_success = 0.0;
  if (pass) {
    const auto first_bucket =
        static_cast<std::size_t>((kStart + *sc.time_to_first_confirm_ms + detection::kBucketMs - 1) / detection::kBucketMs);
    on_success = window_success(on_run.report, first_bucket, kEnd / 1000);
    pass = *sc.time_to_first_confirm_ms <= bound;
  }
  pass = pass && off_success < 0.3 && on_success >= 0.9 && wall_s < 30.0;

  for (const auto& r : on_run.trace) {
    if (r.kind != RecordKind::Defense || r.s1 != "Confirmed") continue;
    for (const auto& q : on_run.trace) {
      if (q.kind == RecordKind::Defense && q.s1 == "ChallengeIssued" && q.a == r.a && q.s3 == "L1" && q.s2 == r.s2) {
        confirm_after_challenge = r.t - q.t;
        break;
      }
    }
    break;
  }

  return report("AC1 flood mitigation", pass,
                "off attack-window success=" + fmt(off_success) + " (<0.3), on post-detection success=" +
                    fmt(on_success) + " (>=0.9), first confirm=" +
                    (sc.time_to_first_confirm_ms ? std::to_string(*sc.time_to_first_confirm_ms) : "none") +
                    "ms (<=" + std::to_string(bound) + "), wall=" + fmt(wall_s) + "s (<30)");
}

bool crash_prevention() {
  constexpr SimTime kStart = 20000, kEnd = 40000;
  bool pass = true;
  std::string detail;
  for (const char* attack : kCrashAttacks) {
    scenarios::Shape s;
    s.duration_ms = 60000;
    const json on = scenarios::crash(s, attack, 0.01, kStart, kEnd);
    const auto off = run(std::string("AC2 ") + attack + " defense-off", scenarios::no_defense(on), true);

    std::uint64_t crashes_on = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      json doc = on;
      doc["seed"] = seed;
      crashes_on += run(std::string("AC2 ") + attack + " seed " + std::to_string(seed), doc, seed == 1)
                        .report.production_crashes;
    }

    // Trapped variant: few trapping sources and a pool larger than them, so
    // every compromise has a standby to fail over to.
    scenarios::Shape t = s;
    t.agents = 2;
    t.vms = 6;
    bool trapped_ok = true;
    std::uint64_t compromises = 0, failovers = 0;
    SimTime gap = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      json doc = scenarios::crash(t, attack, 0.01, kStart, kEnd);
      doc["seed"] = seed;
      const auto r = run(std::string("AC2 ") + attack + " trapped seed " + std::to_string(seed), doc, seed == 1).report;
      trapped_ok = trapped_ok && r.production_crashes == 0 && r.honeypot_compromises >= 1 &&
                   r.failovers == r.honeypot_compromises && r.coverage_gap_ms == 0;
      compromises += r.honeypot_compromises;
      failovers += r.failovers;
      gap += r.coverage_gap_ms;
    }

    const bool ok = off.report.production_crashes >= 1 && crashes_on == 0 && trapped_ok;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : "; ") + attack + ": off crashes=" +
              std::to_string(off.report.production_crashes) + " on crashes(20 seeds)=" + std::to_string(crashes_on) +
              " trapped compromises=" + std::to_string(compromises) + " failovers=" + std::to_string(failovers) +
              " gap=" + std::to_string(gap) + "ms";
  }
  return report("AC2 crash prevention", pass, detail);
}

bool false_positives() {
  // 50 clients at 0.001 req/ms: 0.05 req/ms, so 2.1e6 ms carries ~1.05e5 requests.
  scenarios::Shape s;
  s.clients = 50;
  s.agents = 0;
  s.duration_ms = 2100000;
  bool pass = true;
  std::uint64_t min_sent = UINT64_MAX;
  double min_success = 1.0;
  std::size_t fp = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    s.seed = static_cast<std::uint64_t>(seed);
    const auto r = run("AC3 legit-only seed " + std::to_string(seed), scenarios::base(s), seed == 1).report;
    min_sent = std::min(min_sent, r.legit_sent);
    min_success = std::min(min_success, r.legit_success_rate);
    fp += r.false_positive_sources.size();
    pass = pass && r.legit_sent >= 100000 && r.false_positive_sources.empty() && r.legit_success_rate >= 0.99;
  }
  return report("AC3 false positives", pass,
                "false positive sources=" + std::to_string(fp) + " (0), min success=" + fmt(min_success) +
                    " (>=0.99), min requests per run=" + std::to_string(min_sent) + " (>=100000)");
}

bool layered_detection() {
  bool pass = true;
  std::string detail;
  auto check = [&](const std::string& name, json doc) {
    doc["defense"]["farm_enabled"] = false;
    doc["defense"]["honeyd_enabled"] = true;
    const auto r = run("AC4 " + name + " farm-off", doc, true);
    std::set<std::int64_t> attackers;
    for (const auto& rec : r.trace) {
      if (rec.kind == RecordKind::AttackSource) attackers.insert(rec.b);
    }
    bool blocked = false;
    for (const auto& rec : r.trace) {
      if (rec.kind == RecordKind::Defense && rec.s1 == "BlockInstalled" && attackers.count(rec.a)) blocked = true;
    }
    pass = pass && blocked;
    detail += std::string(detail.empty() ? "" : ", ") + name + (blocked ? " blocked" : " NOT blocked");
  };
  scenarios::Shape s;
  s.duration_ms = 60000;
  check("SynFlood", scenarios::synflood(s, 1.0, 20000, 40000));
  for (const char* attack : kCrashAttacks) check(attack, scenarios::crash(s, attack, 0.01, 20000, 40000));

  const bool ordered = ledger.ordering_failures.empty();
  if (!ordered) detail += "; ordering: " + ledger.ordering_failures.front();
  return report("AC4 layered detection", pass && ordered,
                detail + "; ordering invariants held on " +
                    std::to_string(ledger.runs - ledger.ordering_failures.size()) + "/" + std::to_string(ledger.runs) +
                    " runs");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool determinism_and_replay() {
  std::size_t identical = 0;
  std::vector<std::string> differ;
  for (const auto& [name, doc] : ledger.determinism_set) {
    const auto cfg = config_from_json(doc);
    const auto a = run_scenario(cfg);
    const auto b = run_scenario(cfg);
    if (serialize_trace(a.trace) == serialize_trace(b.trace) && report_json_text(a.report) == report_json_text(b.report)) {
      ++identical;
    } else {
      differ.push_back(name);
    }
  }

  // The CLI path: run, then recompute the report from the written trace.
  const auto dir = std::filesystem::temp_directory_path() / "honeymesh_acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "scenario.json") << scenarios::synflood(scenarios::Shape{}, 1.0, 20000, 40000).dump(2);
  const std::string cli = HM_CLI;
  const std::string run_cmd = "\"" + cli + "\" run --config \"" + (dir / "scenario.json").string() + "\" --out \"" +
                              (dir / "out").string() + "\" > \"" + (dir / "run.json").string() + "\" 2>/dev/null";
  const std::string rep_cmd = "\"" + cli + "\" report --trace \"" + (dir / "out" / "trace.jsonl").string() + "\" > \"" +
                              (dir / "replay.json").string() + "\" 2>/dev/null";
  const bool cli_ok = std::system(run_cmd.c_str()) == 0 && std::system(rep_cmd.c_str()) == 0 &&
                      slurp(dir / "out" / "report.json") == slurp(dir / "replay.json") &&
                      slurp(dir / "run.json") == slurp(dir / "replay.json") && !slurp(dir / "replay.json").empty();
  std::filesystem::remove_all(dir);

  const bool pass = differ.empty() && ledger.replay_failures.empty() && cli_ok;
  std::string detail = std::to_string(identical) + "/" + std::to_string(ledger.determinism_set.size()) +
                       " scenarios byte-identical on rerun, in-process replay exact on " +
                       std::to_string(ledger.runs - ledger.replay_failures.size()) + "/" + std::to_string(ledger.runs) +
                       " runs, CLI report --trace " + (cli_ok ? "identical" : "DIFFERS");
  if (!differ.empty()) detail += "; differs: " + differ.front();
  return report("AC5 determinism and replay", pass, detail);
}

bool unit_oracles(std::optional<SimTime> confirm_after_challenge) {
  const auto& fx = oracles();
  std::vector<std::string> failed;
  auto expect = [&](const std::string& what, bool ok) {
    if (!ok) failed.push_back(what);
  };
  for (const char* key : {"poisson", "baseline_constant_rate", "anomaly", "md1", "ladder", "engagement_window_delta_ms"}) {
    expect(std::string("fixture section ") + key, fx.contains(key));
  }
  if (!failed.empty()) return report("AC6 unit-level oracles", false, "missing " + failed.front());

  // Baseline arithmetic.
  const auto& b = fx["baseline_constant_rate"];
  std::vector<detection::Observation> sample;
  for (int i = 0; i < b["n"].get<int>(); ++i) {
    detection::Observation o;
    o.at = i * b["gap_ms"].get<SimTime>();
    o.hdr.src = Address{1000};
    o.hdr.size_bytes = b["size"];
    sample.push_back(o);
  }
  const auto m = detection::train_baseline(sample, b["n"]);
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); };
  expect("baseline arrival mean", close(m.arrival_rate.mean, b["arrival_mean"]));
  expect("baseline size mean", close(m.pkt_size.mean, b["size_mean"]));
  expect("baseline per-source mean", close(m.per_source_rate.mean, b["per_source_mean"]));
  expect("baseline per-source stddev", close(m.per_source_rate.stddev, b["per_source_stddev"]));

  // Anomaly examples.
  detection::BaselineModel hm;
  hm.per_source_rate = {0.01, 0.002};
  hm.pkt_size = {500.0, 100.0};
  hm.protocol_mix = {0.0, 1.0, 0.0};
  auto score = [&](int n) {
    detection::FlowStats f;
    PacketHeader h;
    h.size_bytes = 500;
    for (int i = 0; i < n; ++i) f.add(h, i);
    return detection::anomaly_score(hm, f, fx["anomaly"]["z_cap"]);
  };
  expect("anomaly +6 sigma", std::abs(score(22) - fx["anomaly"]["rate_plus_6_sigma"].get<double>()) < 1e-9);
  expect("anomaly +3 sigma", std::abs(score(16) - fx["anomaly"]["rate_plus_3_sigma"].get<double>()) < 1e-9);

  // M/D/1 with drops.
  const auto& q = fx["md1"];
  victim::ServerConfig sc;
  sc.queue_cap = q["queue_cap"];
  sc.service_rate_pkts_per_ms = 1.0 / q["service_ms"].get<double>();
  victim::ProductionServer server(Address{10}, sc);
  victim::ServerOutput out;
  std::optional<std::pair<SimTime, std::uint64_t>> due;
  std::uint64_t sent = 0, accepted = 0;
  for (SimTime t = 0; t < q["horizon_ms"].get<SimTime>(); ++t) {
    auto step = [&](const PacketHeader& h) {
      server.handle(h, t, out);
      const bool dropped = !out.dropped.empty();
      if (out.service_done_at) due = std::pair{*out.service_done_at, out.service_epoch};
      out.clear();
      return !dropped;
    };
    if (due && due->first == t) {
      const auto epoch = due->second;
      due.reset();
      server.complete_service(epoch, t, out);
      if (out.service_done_at) due = std::pair{*out.service_done_at, out.service_epoch};
      out.clear();
    }
    PacketHeader attack;
    attack.protocol = Protocol::UDP;
    attack.src = Address{90000};
    attack.dst = Address{10};
    step(attack);
    if (t % q["legit_period"].get<SimTime>() == q["legit_offset"].get<SimTime>()) {
      PacketHeader legit;
      legit.src = Address{1000};
      legit.dst = Address{10};
      legit.request_id = ++sent;
      accepted += step(legit);
    }
  }
  expect("md1 legit sent", sent == q["legit_sent"].get<std::uint64_t>());
  expect("md1 legit accepted", accepted == q["legit_accepted"].get<std::uint64_t>());

  // Ladder timing from the AC1 run.
  expect("spoofed confirm two timeouts after first challenge",
         confirm_after_challenge == fx["ladder"]["spoof_confirm_after_first_challenge_ms"].get<SimTime>());

  // Engagement window sweep.
  const auto sw = sweep(scenarios::synflood(scenarios::Shape{}, 1.0, 20000, 40000), "engagement_window_ms", {0, 10000});
  const auto& a = sw.rows.at(0).report.scenarios.at(0);
  const auto& c = sw.rows.at(1).report.scenarios.at(0);
  expect("engagement window delta", a.time_to_first_block_ms && c.time_to_first_block_ms &&
                                        *c.time_to_first_block_ms - *a.time_to_first_block_ms ==
                                            fx["engagement_window_delta_ms"].get<SimTime>());

  std::string detail = "fixture tests/fixtures/oracles.json: baseline, anomaly, M/D/1, ladder and window values reproduced";
  if (!failed.empty()) detail = "mismatch: " + failed.front();
  return report("AC6 unit-level oracles", failed.empty(), detail);
}

}  // namespace

int main() {
  bool all = true;
  std::optional<SimTime> confirm_after_challenge;
  try {
    all &= flood_mitigation(confirm_after_challenge);
    all &= crash_prevention();
    all &= false_positives();
    all &= layered_detection();
    all &= determinism_and_replay();
    all &= unit_oracles(confirm_after_challenge);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  return all ? 0 : 1;
}
