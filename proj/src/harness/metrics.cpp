#include "honeymesh/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "honeymesh/errors.hpp"

namespace honeymesh::harness {

using ojson = nlohmann::ordered_json;

namespace {

constexpr SimTime kSeriesBucketMs = 1000;

bool operational_state(const std::string& s) { return s == "Active" || s == "Engaged"; }

}  // namespace

double nearest_rank(const std::vector<std::int64_t>& sorted, double pct) {
  if (sorted.empty()) return 0.0;
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return static_cast<double>(sorted[rank - 1]);
}

void MetricsAccumulator::consume(const TraceRecord& r) {
  switch (r.kind) {
    case RecordKind::RunStart: {
      seed_ = std::stoull(r.s1);
      duration_ = r.a;
      const auto buckets = static_cast<std::size_t>((duration_ + kSeriesBucketMs - 1) / kSeriesBucketMs);
      series_sent_.assign(buckets, 0);
      series_served_.assign(buckets, 0);
      end_t_ = duration_;
      break;
    }
    case RecordKind::AttackScenario:
      scenarios_.push_back({r.a, r.s1, r.b, std::nullopt, std::nullopt});
      break;
    case RecordKind::LegitSent: {
      ++sent_;
      auto bucket = static_cast<std::size_t>(std::max<SimTime>(0, r.t) / kSeriesBucketMs);
      if (!series_sent_.empty()) bucket = std::min(bucket, series_sent_.size() - 1);
      if (bucket < series_sent_.size()) ++series_sent_[bucket];
      request_bucket_[r.a] = bucket;
      break;
    }
    case RecordKind::LegitServed: {
      ++served_;
      latencies_.push_back(r.b);
      auto it = request_bucket_.find(r.a);
      if (it != request_bucket_.end()) {
        if (it->second < series_served_.size()) ++series_served_[it->second];
        request_bucket_.erase(it);
      }
      break;
    }
    case RecordKind::LegitDropped:
      ++dropped_;
      request_bucket_.erase(r.a);
      break;
    case RecordKind::AttackSource:
      scenario_sources_[r.a].insert(static_cast<std::uint32_t>(r.b));
      break;
    case RecordKind::Defense:
      if (r.s1 == "Confirmed") first_confirm_.emplace(static_cast<std::uint32_t>(r.a), r.t);
      if (r.s1 == "BlockInstalled") first_block_.emplace(static_cast<std::uint32_t>(r.a), r.t);
      break;
    case RecordKind::Crash:
      ++crashes_;
      crash_causes_.push_back(r.s1);
      break;
    case RecordKind::VmState: {
      vm_profile_[r.a] = r.b;
      vm_operational_[r.a] = operational_state(r.s1);
      std::size_t up = 0;
      for (const auto& [vm, profile] : vm_profile_) {
        if (profile == r.b && vm_operational_[vm]) ++up;
      }
      auto& since = gap_since_[r.b];
      if (up == 0 && !since) {
        since = r.t;
      } else if (up > 0 && since) {
        gap_total_ += r.t - *since;
        since.reset();
      }
      break;
    }
    case RecordKind::VmCompromised:
      ++compromises_;
      break;
    case RecordKind::Failover:
      if (r.b >= 0) ++failovers_;
      break;
    case RecordKind::PoolExhausted:
      ++exhaustions_;
      break;
    case RecordKind::FwDrops:
      fw_drops_ += static_cast<std::uint64_t>(r.b);
      break;
    case RecordKind::RunEnd:
      end_t_ = r.t;
      link_drops_ = static_cast<std::uint64_t>(r.a);
      noroute_drops_ = static_cast<std::uint64_t>(r.b);
      break;
    case RecordKind::RebootStart:
    case RecordKind::RebootDone:
    case RecordKind::VmRestored:
    case RecordKind::VmLog:
      break;
  }
}

MetricsReport MetricsAccumulator::finish() const {
  MetricsReport m;
  m.seed = seed_;
  m.duration_ms = duration_;
  m.legit_sent = sent_;
  m.legit_served = served_;
  m.legit_dropped = dropped_;
  m.legit_in_flight = sent_ - served_ - dropped_;
  m.legit_success_rate = sent_ == 0 ? 1.0 : static_cast<double>(served_) / static_cast<double>(sent_);

  auto sorted = latencies_;
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty()) {
    std::int64_t sum = 0;
    for (auto x : sorted) sum += x;
    m.latency_mean_ms = static_cast<double>(sum) / static_cast<double>(sorted.size());
  }
  m.latency_p95_ms = nearest_rank(sorted, 95.0);
  m.latency_p99_ms = nearest_rank(sorted, 99.0);

  std::set<std::uint32_t> attack_sources;
  m.scenarios = scenarios_;
  for (auto& sc : m.scenarios) {
    auto it = scenario_sources_.find(sc.index);
    if (it == scenario_sources_.end()) continue;
    for (auto src : it->second) {
      attack_sources.insert(src);
      if (auto c = first_confirm_.find(src); c != first_confirm_.end()) {
        const SimTime dt = c->second - sc.start_ms;
        if (!sc.time_to_first_confirm_ms || dt < *sc.time_to_first_confirm_ms) sc.time_to_first_confirm_ms = dt;
      }
      if (auto b = first_block_.find(src); b != first_block_.end()) {
        const SimTime dt = b->second - sc.start_ms;
        if (!sc.time_to_first_block_ms || dt < *sc.time_to_first_block_ms) sc.time_to_first_block_ms = dt;
      }
    }
  }
  for (const auto& [src, _] : first_confirm_) {
    if (!attack_sources.count(src)) m.false_positive_sources.push_back(src);
  }
  for (auto src : attack_sources) {
    if (!first_confirm_.count(src)) m.false_negative_sources.push_back(src);
  }

  m.production_crashes = crashes_;
  m.crash_causes = crash_causes_;
  m.honeypot_compromises = compromises_;
  m.failovers = failovers_;
  m.pool_exhaustions = exhaustions_;
  m.coverage_gap_ms = gap_total_;
  for (const auto& [profile, since] : gap_since_) {
    if (since) m.coverage_gap_ms += end_t_ - *since;
  }
  m.firewall_drops = fw_drops_;
  m.link_drops = link_drops_;
  m.noroute_drops = noroute_drops_;
  m.series_sent = series_sent_;
  m.series_served = series_served_;
  m.series_success_rate.resize(series_sent_.size());
  for (std::size_t i = 0; i < series_sent_.size(); ++i) {
    m.series_success_rate[i] = series_sent_[i] == 0 ? 1.0
                                                    : static_cast<double>(series_served_[i]) /
                                                          static_cast<double>(series_sent_[i]);
  }
  return m;
}

MetricsReport report_from_trace(const std::vector<TraceRecord>& records) {
  MetricsAccumulator acc;
  for (const auto& r : records) acc.consume(r);
  return acc.finish();
}

ojson report_to_json(const MetricsReport& r) {
  ojson j;
  j["seed"] = r.seed;
  j["duration_ms"] = r.duration_ms;
  j["legit_sent"] = r.legit_sent;
  j["legit_served"] = r.legit_served;
  j["legit_dropped"] = r.legit_dropped;
  j["legit_in_flight"] = r.legit_in_flight;
  j["legit_success_rate"] = r.legit_success_rate;
  j["latency_mean_ms"] = r.latency_mean_ms;
  j["latency_p95_ms"] = r.latency_p95_ms;
  j["latency_p99_ms"] = r.latency_p99_ms;
  ojson scenarios = ojson::array();
  for (const auto& s : r.scenarios) {
    ojson e;
    e["index"] = s.index;
    e["attack"] = s.attack;
    e["start_ms"] = s.start_ms;
    e["time_to_first_confirm_ms"] = s.time_to_first_confirm_ms ? ojson(*s.time_to_first_confirm_ms) : ojson(nullptr);
    e["time_to_first_block_ms"] = s.time_to_first_block_ms ? ojson(*s.time_to_first_block_ms) : ojson(nullptr);
    scenarios.push_back(std::move(e));
  }
  j["scenarios"] = std::move(scenarios);
  j["false_positive_sources"] = r.false_positive_sources;
  j["false_negative_sources"] = r.false_negative_sources;
  j["production_crashes"] = r.production_crashes;
  j["crash_causes"] = r.crash_causes;
  j["honeypot_compromises"] = r.honeypot_compromises;
  j["failovers"] = r.failovers;
  j["pool_exhaustions"] = r.pool_exhaustions;
  j["coverage_gap_ms"] = r.coverage_gap_ms;
  j["firewall_drops"] = r.firewall_drops;
  j["link_drops"] = r.link_drops;
  j["noroute_drops"] = r.noroute_drops;
  j["series_sent"] = r.series_sent;
  j["series_served"] = r.series_served;
  j["series_success_rate"] = r.series_success_rate;
  return j;
}

MetricsReport report_from_json(const ojson& j) {
  try {
    MetricsReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.duration_ms = j.at("duration_ms").get<SimTime>();
    r.legit_sent = j.at("legit_sent").get<std::uint64_t>();
    r.legit_served = j.at("legit_served").get<std::uint64_t>();
    r.legit_dropped = j.at("legit_dropped").get<std::uint64_t>();
    r.legit_in_flight = j.at("legit_in_flight").get<std::uint64_t>();
    r.legit_success_rate = j.at("legit_success_rate").get<double>();
    r.latency_mean_ms = j.at("latency_mean_ms").get<double>();
    r.latency_p95_ms = j.at("latency_p95_ms").get<double>();
    r.latency_p99_ms = j.at("latency_p99_ms").get<double>();
    for (const auto& e : j.at("scenarios")) {
      ScenarioTiming s;
      s.index = e.at("index").get<std::int64_t>();
      s.attack = e.at("attack").get<std::string>();
      s.start_ms = e.at("start_ms").get<SimTime>();
      if (!e.at("time_to_first_confirm_ms").is_null()) s.time_to_first_confirm_ms = e.at("time_to_first_confirm_ms").get<SimTime>();
      if (!e.at("time_to_first_block_ms").is_null()) s.time_to_first_block_ms = e.at("time_to_first_block_ms").get<SimTime>();
      r.scenarios.push_back(std::move(s));
    }
    r.false_positive_sources = j.at("false_positive_sources").get<std::vector<std::uint32_t>>();
    r.false_negative_sources = j.at("false_negative_sources").get<std::vector<std::uint32_t>>();
    r.production_crashes = j.at("production_crashes").get<std::uint64_t>();
    r.crash_causes = j.at("crash_causes").get<std::vector<std::string>>();
    r.honeypot_compromises = j.at("honeypot_compromises").get<std::uint64_t>();
    r.failovers = j.at("failovers").get<std::uint64_t>();
    r.pool_exhaustions = j.at("pool_exhaustions").get<std::uint64_t>();
    r.coverage_gap_ms = j.at("coverage_gap_ms").get<SimTime>();
    r.firewall_drops = j.at("firewall_drops").get<std::uint64_t>();
    r.link_drops = j.at("link_drops").get<std::uint64_t>();
    r.noroute_drops = j.at("noroute_drops").get<std::uint64_t>();
    r.series_sent = j.at("series_sent").get<std::vector<std::uint64_t>>();
    r.series_served = j.at("series_served").get<std::vector<std::uint64_t>>();
    r.series_success_rate = j.at("series_success_rate").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

std::string report_json_text(const MetricsReport& r) { return report_to_json(r).dump(2) + "\n"; }

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    out += f(xs[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string opt_str(const std::optional<SimTime>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "seed",
      "duration_ms",
      "legit_sent",
      "legit_served",
      "legit_dropped",
      "legit_in_flight",
      "legit_success_rate",
      "latency_mean_ms",
      "latency_p95_ms",
      "latency_p99_ms",
      "scenario_attacks",
      "scenario_start_ms",
      "time_to_first_confirm_ms",
      "time_to_first_block_ms",
      "false_positive_sources",
      "false_negative_sources",
      "production_crashes",
      "crash_causes",
      "honeypot_compromises",
      "failovers",
      "pool_exhaustions",
      "coverage_gap_ms",
      "firewall_drops",
      "link_drops",
      "noroute_drops",
      "series_sent",
      "series_served",
      "series_success_rate",
  };
  return cols;
}

std::string csv_header() {
  std::string out;
  for (const auto& c : csv_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string csv_row(const MetricsReport& r) {
  auto u = [](auto x) { return std::to_string(x); };
  std::vector<std::string> cells = {
      u(r.seed),
      u(r.duration_ms),
      u(r.legit_sent),
      u(r.legit_served),
      u(r.legit_dropped),
      u(r.legit_in_flight),
      fmt_double(r.legit_success_rate),
      fmt_double(r.latency_mean_ms),
      fmt_double(r.latency_p95_ms),
      fmt_double(r.latency_p99_ms),
      join(r.scenarios, [](const ScenarioTiming& s) { return s.attack; }),
      join(r.scenarios, [](const ScenarioTiming& s) { return std::to_string(s.start_ms); }),
      join(r.scenarios, [](const ScenarioTiming& s) { return opt_str(s.time_to_first_confirm_ms); }),
      join(r.scenarios, [](const ScenarioTiming& s) { return opt_str(s.time_to_first_block_ms); }),
      join(r.false_positive_sources, u),
      join(r.false_negative_sources, u),
      u(r.production_crashes),
      join(r.crash_causes, [](const std::string& s) { return s; }),
      u(r.honeypot_compromises),
      u(r.failovers),
      u(r.pool_exhaustions),
      u(r.coverage_gap_ms),
      u(r.firewall_drops),
      u(r.link_drops),
      u(r.noroute_drops),
      join(r.series_sent, u),
      join(r.series_served, u),
      join(r.series_success_rate, fmt_double),
  };
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

MetricsReport report_from_csv_row(const std::string& row) {
  const auto cells = split(row, ',');
  if (cells.size() != csv_columns().size()) {
    throw ParseError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(csv_columns().size()));
  }
  auto list = [](const std::string& cell) { return cell.empty() ? std::vector<std::string>{} : split(cell, ';'); };
  try {
    MetricsReport r;
    std::size_t i = 0;
    r.seed = std::stoull(cells[i++]);
    r.duration_ms = std::stoll(cells[i++]);
    r.legit_sent = std::stoull(cells[i++]);
    r.legit_served = std::stoull(cells[i++]);
    r.legit_dropped = std::stoull(cells[i++]);
    r.legit_in_flight = std::stoull(cells[i++]);
    r.legit_success_rate = std::stod(cells[i++]);
    r.latency_mean_ms = std::stod(cells[i++]);
    r.latency_p95_ms = std::stod(cells[i++]);
    r.latency_p99_ms = std::stod(cells[i++]);
    const auto attacks = list(cells[i++]);
    const auto starts = list(cells[i++]);
    // Scenario columns are positional; an empty cell inside a list is a null.
    const auto confirms = attacks.empty() ? std::vector<std::string>{} : split(cells[i], ';');
    ++i;
    const auto blocks = attacks.empty() ? std::vector<std::string>{} : split(cells[i], ';');
    ++i;
    if (starts.size() != attacks.size() || confirms.size() != attacks.size() || blocks.size() != attacks.size()) {
      throw ParseError("csv scenario columns disagree in length");
    }
    for (std::size_t k = 0; k < attacks.size(); ++k) {
      ScenarioTiming s;
      s.index = static_cast<std::int64_t>(k);
      s.attack = attacks[k];
      s.start_ms = std::stoll(starts[k]);
      if (!confirms[k].empty()) s.time_to_first_confirm_ms = std::stoll(confirms[k]);
      if (!blocks[k].empty()) s.time_to_first_block_ms = std::stoll(blocks[k]);
      r.scenarios.push_back(std::move(s));
    }
    for (const auto& x : list(cells[i++])) r.false_positive_sources.push_back(static_cast<std::uint32_t>(std::stoul(x)));
    for (const auto& x : list(cells[i++])) r.false_negative_sources.push_back(static_cast<std::uint32_t>(std::stoul(x)));
    r.production_crashes = std::stoull(cells[i++]);
    r.crash_causes = list(cells[i++]);
    r.honeypot_compromises = std::stoull(cells[i++]);
    r.failovers = std::stoull(cells[i++]);
    r.pool_exhaustions = std::stoull(cells[i++]);
    r.coverage_gap_ms = std::stoll(cells[i++]);
    r.firewall_drops = std::stoull(cells[i++]);
    r.link_drops = std::stoull(cells[i++]);
    r.noroute_drops = std::stoull(cells[i++]);
    for (const auto& x : list(cells[i++])) r.series_sent.push_back(std::stoull(x));
    for (const auto& x : list(cells[i++])) r.series_served.push_back(std::stoull(x));
    for (const auto& x : list(cells[i++])) r.series_success_rate.push_back(std::stod(x));
    return r;
  } catch (const std::logic_error& e) {
    throw ParseError(std::string("csv: ") + e.what());
  }
}

}  // namespace honeymesh::harness
