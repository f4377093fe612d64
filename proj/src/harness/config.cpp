#include "honeymesh/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "honeymesh/errors.hpp"
#include "honeymesh/traffic.hpp"

namespace honeymesh::harness {

using nlohmann::json;

namespace {

std::string type_name(const json& j) { return j.type_name(); }

/// One JSON object with a fixed key set.
class Fields {
 public:
  Fields(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ParseError(path_ + ": expected object, got " + type_name(j));
    for (const auto& [key, _] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ParseError("unknown field '" + where(key) + "'");
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& required(const std::string& key) const {
    if (!has(key)) throw ValidationError("missing field '" + where(key) + "'");
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  std::uint64_t u64(const std::string& key) const { return as_u64(required(key), where(key)); }
  std::uint64_t u64(const std::string& key, std::uint64_t def) const {
    return has(key) ? as_u64(j_.at(key), where(key)) : def;
  }
  std::int64_t i64(const std::string& key) const { return as_i64(required(key), where(key)); }
  std::int64_t i64(const std::string& key, std::int64_t def) const {
    return has(key) ? as_i64(j_.at(key), where(key)) : def;
  }
  double num(const std::string& key) const { return as_num(required(key), where(key)); }
  double num(const std::string& key, double def) const { return has(key) ? as_num(j_.at(key), where(key)) : def; }
  std::string str(const std::string& key) const { return as_str(required(key), where(key)); }
  std::string str(const std::string& key, std::string def) const {
    return has(key) ? as_str(j_.at(key), where(key)) : def;
  }
  bool flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ParseError(where(key) + ": expected boolean, got " + type_name(v));
    return v.get<bool>();
  }
  const json& array(const std::string& key) const {
    const auto& v = required(key);
    if (!v.is_array()) throw ParseError(where(key) + ": expected array, got " + type_name(v));
    return v;
  }
  const json* optional_array(const std::string& key) const {
    if (!has(key)) return nullptr;
    return &array(key);
  }

  static std::uint64_t as_u64(const json& v, const std::string& where) {
    const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!ok) throw ParseError(where + ": expected non-negative integer, got " + type_name(v));
    return v.get<std::uint64_t>();
  }
  static std::int64_t as_i64(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ParseError(where + ": expected integer, got " + type_name(v));
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      throw ParseError(where + ": integer out of range");
    }
    return v.get<std::int64_t>();
  }
  static double as_num(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where + ": expected number, got " + type_name(v));
    return v.get<double>();
  }
  static std::string as_str(const json& v, const std::string& where) {
    if (!v.is_string()) throw ParseError(where + ": expected string, got " + type_name(v));
    return v.get<std::string>();
  }

 private:
  const json& j_;
  std::string path_;
};

Address as_address(const json& v, const std::string& where) {
  const auto x = Fields::as_u64(v, where);
  if (x > UINT32_MAX) throw ValidationError(where + ": address out of range");
  return Address{static_cast<std::uint32_t>(x)};
}

AttackType as_attack(const json& v, const std::string& where) {
  const auto s = Fields::as_str(v, where);
  auto t = parse_attack_type(s);
  if (!t) throw ValidationError(where + ": unknown attack type '" + s + "'");
  return *t;
}

std::set<AttackType> attack_set(const json& arr, const std::string& where) {
  std::set<AttackType> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.insert(as_attack(arr[i], where + "." + std::to_string(i)));
  return out;
}

class NameResolver {
 public:
  void add_node(const std::string& name) { nodes_.insert(name); }
  void add_group(const std::string& name, std::vector<std::string> members) { groups_[name] = std::move(members); }

  /// A node name or a group name (expanding to its members).
  std::vector<std::string> expand(const std::string& name, const std::string& where) const {
    if (auto it = groups_.find(name); it != groups_.end()) return it->second;
    if (nodes_.count(name)) return {name};
    throw ValidationError(where + ": unknown node '" + name + "'");
  }

  std::vector<std::string> expand_all(const json& arr, const std::string& where) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto w = where + "." + std::to_string(i);
      for (auto& n : expand(Fields::as_str(arr[i], w), w)) out.push_back(std::move(n));
    }
    return out;
  }

 private:
  std::set<std::string> nodes_;
  std::map<std::string, std::vector<std::string>> groups_;
};

void parse_topology(const json& j, ScenarioConfig& cfg, NameResolver& names) {
  Fields t(j, "topology", {"nodes", "links", "link_queue_cap"});
  cfg.link_queue_cap = t.u64("link_queue_cap", core::Network::kDefaultLinkQueueCap);
  if (cfg.link_queue_cap == 0) throw ValidationError("topology.link_queue_cap must be positive");
  const auto& nodes = t.array("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Fields n(nodes[i], "topology.nodes." + std::to_string(i), {"id", "kind", "address", "role", "hosted_on", "count"});
    const auto id = n.str("id");
    const auto kind_s = n.str("kind");
    const auto kind = core::parse_node_kind(kind_s);
    if (!kind) throw ValidationError(n.where("kind") + ": unknown node kind '" + kind_s + "'");
    const Address base = as_address(n.required("address"), n.where("address"));
    const auto role_s = n.str("role", "External");
    core::FirewallRole role;
    if (role_s == "External") {
      role = core::FirewallRole::External;
    } else if (role_s == "Internal") {
      role = core::FirewallRole::Internal;
    } else {
      throw ValidationError(n.where("role") + ": expected External or Internal");
    }
    const auto hosted_on = n.str("hosted_on", "");
    if (n.has("count")) {
      const auto count = n.u64("count");
      if (count == 0) throw ValidationError(n.where("count") + " must be positive");
      std::vector<std::string> members;
      for (std::uint64_t k = 0; k < count; ++k) {
        const auto name = id + std::to_string(k);
        cfg.nodes.push_back({name, *kind, Address{base.value + static_cast<std::uint32_t>(k)}, role, hosted_on});
        names.add_node(name);
        members.push_back(name);
      }
      names.add_group(id, std::move(members));
    } else {
      cfg.nodes.push_back({id, *kind, base, role, hosted_on});
      names.add_node(id);
    }
  }
  const auto& links = t.array("links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto where = "topology.links." + std::to_string(i);
    Fields l(links[i], where, {"a", "b", "latency_ms", "bandwidth_pkts_per_ms"});
    const auto latency = l.i64("latency_ms", 1);
    const auto bandwidth = l.i64("bandwidth_pkts_per_ms", 10);
    for (const auto& a : names.expand(l.str("a"), l.where("a"))) {
      for (const auto& b : names.expand(l.str("b"), l.where("b"))) cfg.links.push_back({a, b, latency, bandwidth});
    }
  }
}

Address resolve_target(const json& v, const std::string& where, const ScenarioConfig& cfg) {
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    for (const auto& n : cfg.nodes) {
      if (n.id == name) return n.address;
    }
    throw ValidationError(where + ": unknown node '" + name + "'");
  }
  const Address a = as_address(v, where);
  for (const auto& n : cfg.nodes) {
    if (n.address == a) return a;
  }
  throw ValidationError(where + ": address " + std::to_string(a.value) + " is not in the topology");
}

const NodeConfig& node_named(const ScenarioConfig& cfg, const std::string& name) {
  for (const auto& n : cfg.nodes) {
    if (n.id == name) return n;
  }
  throw ValidationError("unknown node '" + name + "'");
}

void require_kind(const ScenarioConfig& cfg, const std::string& name, core::NodeKind kind, const std::string& where) {
  const auto& n = node_named(cfg, name);
  if (n.kind != kind) {
    throw ValidationError(where + ": node '" + name + "' is " + std::string(core::to_string(n.kind)) + ", expected " +
                          std::string(core::to_string(kind)));
  }
}

}  // namespace

core::Topology ScenarioConfig::build_topology() const {
  core::Topology topo;
  std::map<std::string, NodeId> ids;
  for (const auto& n : nodes) {
    if (n.kind == core::NodeKind::HoneyVm) continue;
    ids[n.id] = topo.add_node(n.id, n.kind, n.address, n.role);
  }
  for (const auto& n : nodes) {
    if (n.kind != core::NodeKind::HoneyVm) continue;
    auto host = ids.find(n.hosted_on);
    if (host == ids.end()) throw ValidationError("honey VM '" + n.id + "' hosted_on unknown node '" + n.hosted_on + "'");
    ids[n.id] = topo.add_node(n.id, n.kind, n.address, n.role, host->second);
  }
  for (const auto& l : links) topo.add_link(ids.at(l.a), ids.at(l.b), l.latency_ms, l.bandwidth_pkts_per_ms);
  topo.finalize();
  topo.validate_layering();
  return topo;
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
  }
}

ScenarioConfig config_from_json(const json& doc) {
  Fields root(doc, "",
              {"seed", "duration_ms", "output", "topology", "servers", "legit", "attacks", "farm", "defense", "detection"});
  ScenarioConfig cfg;
  cfg.seed = root.u64("seed");
  cfg.duration_ms = root.i64("duration_ms", cfg.duration_ms);
  if (cfg.duration_ms <= 0) throw ValidationError("duration_ms must be positive");
  if (root.has("output")) {
    Fields out(root.required("output"), "output", {"dir"});
    cfg.output_dir = out.str("dir", cfg.output_dir);
  }

  NameResolver names;
  parse_topology(root.required("topology"), cfg, names);

  if (const auto* servers = root.optional_array("servers")) {
    for (std::size_t i = 0; i < servers->size(); ++i) {
      const auto where = "servers." + std::to_string(i);
      Fields s((*servers)[i], where,
               {"node", "service", "service_rate_pkts_per_ms", "queue_cap", "syn_backlog_cap", "syn_halfopen_timeout_ms",
                "reassembly_max_bytes", "vulnerable_to", "reboot_time_ms"});
      ServerSpec spec;
      spec.node = s.str("node");
      require_kind(cfg, spec.node, core::NodeKind::ProductionServer, s.where("node"));
      const auto svc = s.str("service");
      auto parsed = farm::parse_service(svc);
      if (!parsed) throw ValidationError(s.where("service") + ": unknown service '" + svc + "'");
      spec.service = *parsed;
      auto& c = spec.config;
      c.service_rate_pkts_per_ms = s.num("service_rate_pkts_per_ms", c.service_rate_pkts_per_ms);
      c.queue_cap = s.u64("queue_cap", c.queue_cap);
      c.syn_backlog_cap = s.u64("syn_backlog_cap", c.syn_backlog_cap);
      c.syn_halfopen_timeout_ms = s.i64("syn_halfopen_timeout_ms", c.syn_halfopen_timeout_ms);
      c.reassembly_max_bytes = s.i64("reassembly_max_bytes", c.reassembly_max_bytes);
      c.reboot_time_ms = s.i64("reboot_time_ms", c.reboot_time_ms);
      if (const auto* v = s.optional_array("vulnerable_to")) c.vulnerable_to = attack_set(*v, s.where("vulnerable_to"));
      c.validate();
      cfg.servers.push_back(std::move(spec));
    }
  }
  for (const auto& n : cfg.nodes) {
    if (n.kind != core::NodeKind::ProductionServer) continue;
    const auto count = std::count_if(cfg.servers.begin(), cfg.servers.end(), [&](const auto& s) { return s.node == n.id; });
    if (count != 1) throw ValidationError("production server '" + n.id + "' needs exactly one servers entry");
  }

  if (const auto* legit = root.optional_array("legit")) {
    for (std::size_t i = 0; i < legit->size(); ++i) {
      const auto where = "legit." + std::to_string(i);
      Fields l((*legit)[i], where,
               {"clients", "target", "request_rate_per_client", "request_size_mean", "request_size_stddev",
                "answer_challenges"});
      LegitSpec spec;
      spec.clients = names.expand_all(l.array("clients"), l.where("clients"));
      for (const auto& c : spec.clients) require_kind(cfg, c, core::NodeKind::ClientHost, l.where("clients"));
      spec.target = l.str("target");
      require_kind(cfg, spec.target, core::NodeKind::ProductionServer, l.where("target"));
      spec.request_rate_per_client = l.num("request_rate_per_client", spec.request_rate_per_client);
      spec.request_size_mean = l.num("request_size_mean", spec.request_size_mean);
      spec.request_size_stddev = l.num("request_size_stddev", spec.request_size_stddev);
      spec.answer_challenges = l.num("answer_challenges", spec.answer_challenges);
      cfg.legit.push_back(std::move(spec));
    }
  }

  if (const auto* attacks = root.optional_array("attacks")) {
    for (std::size_t i = 0; i < attacks->size(); ++i) {
      const auto where = "attacks." + std::to_string(i);
      Fields a((*attacks)[i], where,
               {"attack", "agents", "spoof_pool", "target", "rate_pkts_per_ms", "start_ms", "end_ms", "p_bot_l1"});
      AttackSpec spec;
      spec.attack = as_attack(a.required("attack"), a.where("attack"));
      spec.agents = names.expand_all(a.array("agents"), a.where("agents"));
      for (const auto& ag : spec.agents) require_kind(cfg, ag, core::NodeKind::AttackAgent, a.where("agents"));
      if (a.has("spoof_pool")) {
        const auto& pool = a.required("spoof_pool");
        if (pool.is_array()) {
          for (std::size_t k = 0; k < pool.size(); ++k) {
            spec.spoof_pool.push_back(as_address(pool[k], a.where("spoof_pool") + "." + std::to_string(k)));
          }
        } else {
          Fields range(pool, a.where("spoof_pool"), {"base", "count"});
          const Address base = as_address(range.required("base"), range.where("base"));
          const auto count = range.u64("count");
          for (std::uint64_t k = 0; k < count; ++k) spec.spoof_pool.push_back(Address{base.value + static_cast<std::uint32_t>(k)});
        }
      }
      spec.target = resolve_target(a.required("target"), a.where("target"), cfg);
      spec.rate_pkts_per_ms = a.num("rate_pkts_per_ms");
      spec.start_ms = a.i64("start_ms");
      spec.end_ms = a.i64("end_ms");
      spec.p_bot_l1 = a.num("p_bot_l1", 0.0);
      cfg.attacks.push_back(std::move(spec));
    }
  }

  if (root.has("farm")) {
    Fields f(root.required("farm"), "farm", {"host", "restore_delay_ms", "profiles"});
    FarmSpec spec;
    spec.host = f.str("host");
    require_kind(cfg, spec.host, core::NodeKind::HoneyFarmHost, f.where("host"));
    spec.restore_delay_ms = f.i64("restore_delay_ms", spec.restore_delay_ms);
    if (const auto* profiles = f.optional_array("profiles")) {
      for (std::size_t i = 0; i < profiles->size(); ++i) {
        const auto where = "farm.profiles." + std::to_string(i);
        Fields p((*profiles)[i], where, {"mimics", "interaction", "exposed_vulns", "engage_reply_latency_ms", "vms"});
        ProfileSpec ps;
        const auto mimics = p.str("mimics");
        auto svc = farm::parse_service(mimics);
        if (!svc) throw ValidationError(p.where("mimics") + ": unknown service '" + mimics + "'");
        ps.profile.mimics = *svc;
        const auto inter = p.str("interaction", "High");
        auto level = farm::parse_interaction(inter);
        if (!level) throw ValidationError(p.where("interaction") + ": expected Low or High");
        ps.profile.interaction = *level;
        ps.profile.exposed_vulns = attack_set(p.array("exposed_vulns"), p.where("exposed_vulns"));
        ps.profile.engage_reply_latency_ms = p.i64("engage_reply_latency_ms", ps.profile.engage_reply_latency_ms);
        ps.profile.validate();
        ps.vms = names.expand_all(p.array("vms"), p.where("vms"));
        if (ps.vms.empty()) throw ValidationError(p.where("vms") + " must not be empty");
        for (const auto& vm : ps.vms) {
          require_kind(cfg, vm, core::NodeKind::HoneyVm, p.where("vms"));
          if (node_named(cfg, vm).hosted_on != spec.host) {
            throw ValidationError(p.where("vms") + ": VM '" + vm + "' is not hosted on '" + spec.host + "'");
          }
        }
        spec.profiles.push_back(std::move(ps));
      }
    }
    cfg.farm = std::move(spec);
  }

  // Without a farm section the farm defense is off unless asked for explicitly.
  cfg.defense.farm_enabled = cfg.farm.has_value();
  if (root.has("defense")) {
    Fields d(root.required("defense"), "defense", {"farm_enabled", "honeyd_enabled", "engagement_window_ms"});
    cfg.defense.farm_enabled = d.flag("farm_enabled", cfg.defense.farm_enabled);
    cfg.defense.honeyd_enabled = d.flag("honeyd_enabled", cfg.defense.honeyd_enabled);
    cfg.defense.engagement_window_ms = d.i64("engagement_window_ms", cfg.defense.engagement_window_ms);
    cfg.defense.validate();
  }
  if (root.has("detection")) {
    Fields d(root.required("detection"), "detection",
             {"warmup_n", "suspicion_threshold", "challenge_timeout_ms", "z_cap", "idle_evict_ms", "hold_cap"});
    auto& c = cfg.detection;
    c.warmup_n = d.u64("warmup_n", c.warmup_n);
    c.suspicion_threshold = d.num("suspicion_threshold", c.suspicion_threshold);
    c.challenge_timeout_ms = d.i64("challenge_timeout_ms", c.challenge_timeout_ms);
    c.z_cap = d.num("z_cap", c.z_cap);
    c.idle_evict_ms = d.i64("idle_evict_ms", c.idle_evict_ms);
    c.hold_cap = d.u64("hold_cap", c.hold_cap);
    if (c.warmup_n == 0) throw ValidationError("detection.warmup_n must be positive");
    if (!(c.suspicion_threshold > 0.0 && c.suspicion_threshold < 1.0)) {
      throw ValidationError("detection.suspicion_threshold must be in (0,1)");
    }
    if (c.challenge_timeout_ms <= 0 || c.idle_evict_ms <= 0) throw ValidationError("detection timeouts must be positive");
    if (!(c.z_cap > 0.0)) throw ValidationError("detection.z_cap must be positive");
  }

  if (cfg.defense.farm_enabled) {
    if (!cfg.farm) throw ValidationError("defense.farm_enabled requires a farm section");
    for (const auto& s : cfg.servers) {
      const bool covered = std::any_of(cfg.farm->profiles.begin(), cfg.farm->profiles.end(),
                                       [&](const ProfileSpec& p) { return p.profile.mimics == s.service; });
      if (!covered) {
        throw ValidationError("no honey VM profile mimics " + std::string(farm::to_string(s.service)) +
                              " (server '" + s.node + "')");
      }
    }
  }

  // Cross-checks that need the built topology.
  cfg.build_topology();
  for (std::size_t i = 0; i < cfg.legit.size(); ++i) {
    const auto& l = cfg.legit[i];
    traffic::LegitProfile p;
    for (const auto& c : l.clients) p.clients.push_back({kNoNode, node_named(cfg, c).address});
    p.request_rate_per_client = l.request_rate_per_client;
    p.request_size_mean = l.request_size_mean;
    p.request_size_stddev = l.request_size_stddev;
    p.answer_challenges = l.answer_challenges;
    try {
      p.validate();
    } catch (const InvalidScenario& e) {
      throw ValidationError("legit." + std::to_string(i) + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < cfg.attacks.size(); ++i) {
    const auto& a = cfg.attacks[i];
    traffic::AttackScenario sc;
    sc.attack = a.attack;
    for (const auto& ag : a.agents) sc.agents.push_back({kNoNode, node_named(cfg, ag).address});
    sc.spoof_pool = a.spoof_pool;
    sc.target = a.target;
    sc.rate_pkts_per_ms = a.rate_pkts_per_ms;
    sc.start_ms = a.start_ms;
    sc.end_ms = a.end_ms;
    sc.p_bot_l1 = a.p_bot_l1;
    try {
      sc.validate();
    } catch (const InvalidScenario& e) {
      throw ValidationError("attacks." + std::to_string(i) + ": " + e.what());
    }
  }
  return cfg;
}

ScenarioConfig parse_config(std::string_view text) { return config_from_json(parse_json_text(text)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

}  // namespace honeymesh::harness
