#include "honeymesh/harness/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "honeymesh/errors.hpp"

namespace honeymesh::harness {

namespace {

enum Owner : std::uint32_t {
  kGenerator = 1,
  kWindow,
  kHalfOpen,
  kReboot,
  kBlock,
  kRestore,
  kDeferred,
};

constexpr std::uint32_t kLegitGen = 0;
constexpr std::uint32_t kAttackGen = 1;
constexpr SimTime kWarmupChunkMs = 10000;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) { return splitmix(seed ^ splitmix(salt)); }

}  // namespace

struct Simulation::Impl {
  struct ServerRt {
    NodeId node;
    std::string name;
    farm::Service service;
    victim::ProductionServer server;
    victim::HoneyDaemon honeyd;
  };

  struct Request {
    NodeId client = kNoNode;
    Packet data;
    SimTime sent_at = 0;
    bool awaiting_reply = false;
  };

  struct Responder {
    std::mt19937_64 rng;
    double p = 1.0;
  };

  struct TapRt {
    std::size_t profile;
    detection::Detector detector;
  };

  ScenarioConfig cfg;
  Phase phase;
  core::Network net;
  core::EventLoop loop;

  std::vector<ServerRt> servers;
  std::map<NodeId, std::size_t> server_by_node;
  std::map<Address, std::size_t> server_by_address;

  NodeId farm_host = kNoNode;
  std::optional<farm::HoneyFarm> farm;
  std::vector<TapRt> taps;
  std::optional<control::Controller> controller;

  std::vector<traffic::LegitGenerator> legit_gens;
  std::vector<std::vector<NodeId>> legit_clients;
  std::vector<traffic::AttackGenerator> attack_gens;
  std::map<NodeId, Responder> clients;
  std::map<NodeId, Responder> agents;

  std::unordered_map<std::uint64_t, Request> requests;
  std::unordered_map<std::uint64_t, GroundTruth> parked;
  std::map<std::int64_t, Packet> deferred;
  std::set<std::pair<std::int32_t, std::uint32_t>> attack_sources;
  std::uint64_t next_packet = 1;
  std::uint64_t next_request = 1;
  std::int64_t next_deferred = 0;
  std::uint64_t noroute_drops = 0;
  std::uint64_t sunk = 0;

  std::vector<TraceRecord> trace;
  MetricsAccumulator metrics;
  std::map<farm::Service, std::vector<detection::Observation>> observations;

  detection::Detector::Outputs det_out;
  control::Actions actions;
  victim::ServerOutput srv_out;

  Impl(const ScenarioConfig& c, Phase p, const BaselineSet* baselines)
      : cfg(c), phase(p), net(c.build_topology(), c.link_queue_cap) {
    const auto& topo = net.topology();
    const bool main = phase == Phase::Main;
    const bool defended = main && cfg.defense.any();
    if (defended && !baselines) throw ValidationError("defense enabled without trained baselines");

    std::vector<Address> guarded;
    for (const auto& s : cfg.servers) guarded.push_back(topo.node(*topo.find_by_name(s.node)).address);

    for (std::size_t i = 0; i < cfg.servers.size(); ++i) {
      const auto& s = cfg.servers[i];
      const NodeId node = *topo.find_by_name(s.node);
      const Address addr = topo.node(node).address;
      victim::HoneyDaemon hd;
      if (defended && cfg.defense.honeyd_enabled) {
        auto base = baselines->find(s.service);
        if (base == baselines->end()) {
          throw InsufficientSample("no baseline for service " + std::string(farm::to_string(s.service)));
        }
        hd = victim::HoneyDaemon(detection::Detector("honeyd:" + s.node, addr, base->second, cfg.detection,
                                                     derive(cfg.seed, 0x4d00 + i), guarded),
                                 cfg.detection.hold_cap);
      }
      servers.push_back({node, s.node, s.service, victim::ProductionServer(addr, s.config), std::move(hd)});
      server_by_node[node] = i;
      server_by_address[addr] = i;
    }

    if (cfg.farm) {
      farm_host = *topo.find_by_name(cfg.farm->host);
    } else if (auto hosts = topo.nodes_of_kind(core::NodeKind::HoneyFarmHost); !hosts.empty()) {
      farm_host = hosts.front();
    }

    if (defended && cfg.defense.farm_enabled) {
      std::vector<farm::HoneyVmProfile> profiles;
      std::vector<farm::VmSpec> vms;
      for (std::size_t p = 0; p < cfg.farm->profiles.size(); ++p) {
        const auto& ps = cfg.farm->profiles[p];
        profiles.push_back(ps.profile);
        for (const auto& name : ps.vms) {
          const NodeId node = *topo.find_by_name(name);
          vms.push_back({node, name, topo.node(node).address, p});
        }
      }
      std::stable_sort(vms.begin(), vms.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
      farm.emplace(std::move(profiles), std::move(vms), cfg.farm->restore_delay_ms);
      for (std::size_t p = 0; p < farm->profiles().size(); ++p) {
        auto base = baselines->find(farm->profiles()[p].mimics);
        if (base == baselines->end()) continue;  // nothing to protect for this service
        const auto& vm = farm->vm(*farm->active_vm(p));
        taps.push_back({p, detection::Detector(vm.name, vm.address, base->second, cfg.detection,
                                               derive(cfg.seed, 0x7a00 + p), guarded)});
      }
    }
    if (defended) controller.emplace(net, cfg.defense, farm_host);

    for (std::size_t i = 0; i < cfg.legit.size(); ++i) {
      const auto& l = cfg.legit[i];
      traffic::LegitProfile prof;
      std::vector<NodeId> ids;
      for (const auto& name : l.clients) {
        const NodeId id = *topo.find_by_name(name);
        prof.clients.push_back({id, topo.node(id).address});
        ids.push_back(id);
        clients.try_emplace(id, Responder{std::mt19937_64(derive(cfg.seed, 0xc100 + id)), l.answer_challenges});
      }
      prof.request_rate_per_client = l.request_rate_per_client;
      prof.request_size_mean = l.request_size_mean;
      prof.request_size_stddev = l.request_size_stddev;
      prof.target = topo.node(*topo.find_by_name(l.target)).address;
      prof.answer_challenges = l.answer_challenges;
      const std::uint64_t salt = (main ? 0x1e60000 : 0x3a00000) + i;
      legit_gens.emplace_back(prof, derive(cfg.seed, salt));
      legit_clients.push_back(std::move(ids));
    }
    if (main) {
      for (std::size_t i = 0; i < cfg.attacks.size(); ++i) {
        const auto& a = cfg.attacks[i];
        traffic::AttackScenario sc;
        sc.attack = a.attack;
        for (const auto& name : a.agents) {
          const NodeId id = *topo.find_by_name(name);
          sc.agents.push_back({id, topo.node(id).address});
          agents.try_emplace(id, Responder{std::mt19937_64(derive(cfg.seed, 0xa900 + id)), a.p_bot_l1});
        }
        sc.spoof_pool = a.spoof_pool;
        sc.target = a.target;
        sc.rate_pkts_per_ms = a.rate_pkts_per_ms;
        sc.start_ms = a.start_ms;
        sc.end_ms = a.end_ms;
        sc.p_bot_l1 = a.p_bot_l1;
        attack_gens.emplace_back(sc, derive(cfg.seed, 0xa77000 + i), static_cast<std::int32_t>(i));
      }
    }

    for (std::size_t i = 0; i < legit_gens.size(); ++i) {
      loop.schedule(legit_gens[i].peek_time(), core::TimerFire{kGenerator, kLegitGen, static_cast<std::int64_t>(i)});
    }
    for (std::size_t i = 0; i < attack_gens.size(); ++i) {
      if (!attack_gens[i].done()) {
        loop.schedule(attack_gens[i].peek_time(),
                      core::TimerFire{kGenerator, kAttackGen, static_cast<std::int64_t>(i)});
      }
    }
  }

  SimTime now() const { return loop.now(); }
  const core::Topology& topo() const { return net.topology(); }

  // ---- trace ------------------------------------------------------------

  void emit(TraceRecord r) {
    if (phase != Phase::Main) return;
    metrics.consume(r);
    trace.push_back(std::move(r));
  }

  void emit_defense(const DefenseEvent& e) {
    emit({e.time, RecordKind::Defense, e.source.value, 0, 0, 0, std::string(to_string(e.kind)), e.origin, e.detail});
  }

  void emit_vm_changes() {
    if (!farm) return;
    for (const auto& ch : farm->take_changes()) {
      const auto& vm = farm->vm(ch.vm);
      emit({now(), RecordKind::VmState, static_cast<std::int64_t>(ch.vm), static_cast<std::int64_t>(vm.profile), 0, 0,
            std::string(farm::to_string(ch.to)), vm.name, {}});
    }
  }

  void emit_logs(std::size_t vm, const std::vector<farm::LogEntry>& logs) {
    for (const auto& e : logs) {
      emit({now(), RecordKind::VmLog, static_cast<std::int64_t>(vm), e.at, e.src.value, e.size_bytes,
            std::string(to_string(e.kind)), e.action, std::string(to_string(e.protocol))});
    }
  }

  // ---- packet movement --------------------------------------------------

  void close_legit(const Packet& pkt, const std::string& reason) {
    if (!pkt.truth.legit_request) return;
    auto it = requests.find(pkt.hdr.request_id);
    if (it == requests.end()) return;
    requests.erase(it);
    emit({now(), RecordKind::LegitDropped, static_cast<std::int64_t>(pkt.hdr.request_id), 0, 0, 0, reason, {}, {}});
  }

  void hop(NodeId from, NodeId to, Packet pkt) {
    if (auto at = net.transmit(from, to, now())) {
      loop.schedule(*at, core::PacketArrival{to, from, std::move(pkt)});
    } else {
      close_legit(pkt, "link");
    }
  }

  void forward(NodeId node, Packet pkt) {
    NodeId next;
    try {
      next = net.forward(node, pkt);
    } catch (const NoRoute&) {
      ++noroute_drops;
      close_legit(pkt, "noroute");
      return;
    }
    hop(node, next, std::move(pkt));
  }

  /// Emits a new packet at `node`.
  void send(NodeId node, PacketHeader hdr, GroundTruth truth) {
    if (auto dst = topo().find_by_address(hdr.dst); dst && *dst == node) return;  // loopback
    hdr.id = next_packet++;
    truth.origin = node;
    forward(node, Packet{std::move(hdr), truth, kNoNode});
  }

  /// Packets leaving the farm never reach a production server.
  void send_from_farm(PacketHeader hdr) {
    if (server_by_address.count(hdr.dst)) return;
    send(farm_host, std::move(hdr), GroundTruth{});
  }

  // ---- event dispatch ---------------------------------------------------

  void handle(const core::Event& ev) {
    std::visit([this](const auto& p) { on(p); }, ev.payload);
  }

  void on(const core::PacketArrival& a) {
    Packet pkt = a.packet;
    switch (topo().node(a.node).kind) {
      case core::NodeKind::Firewall:
        if (topo().is_inbound_side(a.node, a.from) &&
            net.admit_inbound(a.node, pkt, now()) == core::FilterResult::Drop) {
          close_legit(pkt, "firewall");
          return;
        }
        forward(a.node, std::move(pkt));
        return;
      case core::NodeKind::Router:
        at_router(a.node, std::move(pkt));
        return;
      case core::NodeKind::ProductionServer:
        at_server(server_by_node.at(a.node), std::move(pkt));
        return;
      case core::NodeKind::HoneyFarmHost:
        at_farm(std::move(pkt));
        return;
      case core::NodeKind::ClientHost:
        at_client(a.node, pkt);
        return;
      case core::NodeKind::AttackAgent:
        at_agent(a.node, pkt);
        return;
      case core::NodeKind::Handler:
      case core::NodeKind::HoneyVm:
        return;
    }
  }

  void on(const core::ServiceCompletion& c) {
    auto& s = servers[server_by_node.at(c.node)];
    srv_out.clear();
    s.server.complete_service(c.request, now(), srv_out);
    settle_server(server_by_node.at(c.node));
  }

  void on(const core::TimerFire& t) {
    switch (t.owner) {
      case kGenerator:
        if (t.tag == kLegitGen) {
          emit_legit(static_cast<std::size_t>(t.arg));
        } else {
          emit_attack(static_cast<std::size_t>(t.arg));
        }
        return;
      case kWindow:
        if (t.tag == 1) {
          loop.schedule(now(), core::TimerFire{kWindow, 2, t.arg, t.arg2});
        } else {
          close_window(static_cast<std::size_t>(t.arg), static_cast<std::uint64_t>(t.arg2));
        }
        return;
      case kHalfOpen:
        servers[static_cast<std::size_t>(t.arg)].server.expire_halfopen(now());
        return;
      case kReboot:
        reboot(static_cast<std::size_t>(t.arg), t.tag);
        return;
      case kBlock:
        actions.clear();
        controller->on_block_due(Address{static_cast<std::uint32_t>(t.arg)}, now(), actions, farm ? &*farm : nullptr);
        apply_actions();
        emit_vm_changes();
        return;
      case kRestore:
        restore();
        return;
      case kDeferred: {
        auto it = deferred.find(t.arg);
        Packet pkt = std::move(it->second);
        deferred.erase(it);
        pkt.hdr.sent_at = now();
        send_from_farm(std::move(pkt.hdr));
        return;
      }
      default:
        return;
    }
  }

  // ---- generators -------------------------------------------------------

  void emit_legit(std::size_t g) {
    auto e = legit_gens[g].next();
    loop.schedule(legit_gens[g].peek_time(), core::TimerFire{kGenerator, kLegitGen, static_cast<std::int64_t>(g)});
    const NodeId client = legit_clients[g][e.emitter];
    const std::uint64_t rid = next_request++;
    e.packet.hdr.request_id = rid;
    emit({now(), RecordKind::LegitSent, static_cast<std::int64_t>(rid), client, 0, 0, {}, {}, {}});

    PacketHeader syn = e.packet.hdr;
    syn.kind = PacketKind::Syn;
    syn.protocol = Protocol::TCP;
    syn.size_bytes = traffic::kSynBytes;
    requests[rid] = Request{client, e.packet, now(), false};
    send(client, syn, e.packet.truth);
  }

  void emit_attack(std::size_t g) {
    auto& gen = attack_gens[g];
    auto e = gen.next();
    if (!gen.done()) {
      loop.schedule(gen.peek_time(), core::TimerFire{kGenerator, kAttackGen, static_cast<std::int64_t>(g)});
    }
    const auto key = std::pair{e.packet.truth.scenario, e.packet.hdr.src.value};
    if (attack_sources.insert(key).second) {
      emit({now(), RecordKind::AttackSource, key.first, key.second, 0, 0, {}, {}, {}});
    }
    const NodeId agent = e.packet.truth.origin;
    send(agent, e.packet.hdr, e.packet.truth);
  }

  // ---- routers and the farm tap -----------------------------------------

  void at_router(NodeId router, Packet pkt) {
    core::RouteDecision d;
    try {
      d = net.route_decision(router, pkt);
    } catch (const NoRoute&) {
      ++noroute_drops;
      close_legit(pkt, "noroute");
      return;
    }
    if (d.redirected && pkt.redirect_to == kNoNode) pkt.redirect_to = d.farm;
    if (!d.redirected && !taps.empty() && pkt.hdr.kind != PacketKind::ChallengeResponse &&
        pkt.hdr.kind != PacketKind::Challenge) {
      auto srv = server_by_node.find(d.next_hop);
      if (srv != server_by_node.end() && servers[srv->second].server.address() == pkt.hdr.dst) {
        tap_observe(servers[srv->second].service, pkt.hdr);
      }
    }
    hop(router, d.next_hop, std::move(pkt));
  }

  TapRt* tap_for(farm::Service s) {
    for (auto& t : taps) {
      if (farm->profiles()[t.profile].mimics == s) return &t;
    }
    return nullptr;
  }

  std::size_t tap_index(const TapRt& t) const { return servers.size() + static_cast<std::size_t>(&t - taps.data()); }

  void tap_observe(farm::Service s, const PacketHeader& hdr) {
    auto* tap = tap_for(s);
    if (!tap) return;
    det_out.clear();
    tap->detector.observe(hdr, now(), det_out);
    apply_detector(tap_index(*tap), farm_host);
  }

  /// Routes detector side effects: trace events, challenge packets, window
  /// timers and confirmations.
  void apply_detector(std::size_t index, NodeId issuer_node) {
    auto out = std::move(det_out);
    det_out = {};
    for (const auto& e : out.events) emit_defense(e);
    for (auto& p : out.packets) {
      p.sent_at = now();
      if (issuer_node == farm_host) {
        send_from_farm(std::move(p));
      } else {
        send(issuer_node, std::move(p), GroundTruth{});
      }
    }
    for (const auto& t : out.timers) {
      loop.schedule(t.at, core::TimerFire{kWindow, 1, static_cast<std::int64_t>(index),
                                          static_cast<std::int64_t>(t.challenge_id)});
    }
    for (Address a : out.confirmed) {
      if (!controller) continue;
      actions.clear();
      controller->on_verdict(a, detection::Verdict::Confirmed, {}, now(), actions);
      apply_actions();
    }
  }

  void apply_actions() {
    auto acts = std::move(actions);
    actions = {};
    for (const auto& e : acts.events) emit_defense(e);
    for (const auto& b : acts.blocks) {
      loop.schedule(b.at, core::TimerFire{kBlock, 0, static_cast<std::int64_t>(b.source.value), 0});
    }
  }

  void close_window(std::size_t index, std::uint64_t challenge) {
    det_out.clear();
    if (index < servers.size()) {
      servers[index].honeyd.on_window_close(challenge, now(), det_out);
      apply_detector(index, servers[index].node);
      settle_holds(index);
    } else {
      taps[index - servers.size()].detector.on_window_close(challenge, now(), det_out);
      apply_detector(index, farm_host);
    }
  }

  // ---- production servers -----------------------------------------------

  void at_server(std::size_t idx, Packet pkt) {
    auto& s = servers[idx];
    if (pkt.hdr.dst != s.server.address()) return;
    if (pkt.hdr.kind == PacketKind::ChallengeResponse) {
      if (!s.honeyd.enabled()) return;
      det_out.clear();
      s.honeyd.on_response(pkt.hdr, now(), det_out);
      apply_detector(idx, s.node);
      settle_holds(idx);
      return;
    }
    if (pkt.hdr.kind == PacketKind::Challenge) return;
    if (phase == Phase::Warmup) observations[s.service].push_back({now(), pkt.hdr});

    parked[pkt.hdr.id] = pkt.truth;
    if (s.honeyd.enabled() && s.server.state().mode == victim::Mode::Healthy) {
      det_out.clear();
      const auto decision = s.honeyd.gate(pkt.hdr, now(), det_out);
      apply_detector(idx, s.node);
      switch (decision) {
        case victim::GateDecision::Forward:
          break;
        case victim::GateDecision::ChallengeIssued:
          settle_holds(idx);
          return;
        case victim::GateDecision::Dropped:
          unpark_and_drop(pkt.hdr, "honeyd");
          settle_holds(idx);
          return;
      }
    }
    deliver(idx, pkt.hdr);
  }

  void deliver(std::size_t idx, const PacketHeader& hdr) {
    srv_out.clear();
    servers[idx].server.handle(hdr, now(), srv_out);
    settle_server(idx);
  }

  GroundTruth unpark(std::uint64_t id) {
    auto it = parked.find(id);
    if (it == parked.end()) return {};
    GroundTruth t = it->second;
    parked.erase(it);
    return t;
  }

  void unpark_and_drop(const PacketHeader& hdr, const std::string& reason) {
    Packet p{hdr, unpark(hdr.id), kNoNode};
    close_legit(p, reason);
  }

  void settle_holds(std::size_t idx) {
    auto& hd = servers[idx].honeyd;
    for (const auto& h : hd.take_discarded()) unpark_and_drop(h, "honeyd");
    for (const auto& h : hd.take_released()) deliver(idx, h);
  }

  void settle_server(std::size_t idx) {
    auto out = std::move(srv_out);
    srv_out = {};
    auto& s = servers[idx];
    for (const auto& d : out.dropped) unpark_and_drop(d, "server");
    for (const auto& sv : out.served) {
      const GroundTruth t = unpark(sv.request.id);
      if (!sv.reply) continue;
      GroundTruth rt;
      rt.src_actual = s.server.address();
      rt.legit_request = t.legit_request;
      send(s.node, *sv.reply, rt);
    }
    if (out.crashed) {
      emit({now(), RecordKind::Crash, s.node, 0, 0, 0, std::string(to_string(*out.crashed)), s.name, {}});
      loop.schedule(now(), core::TimerFire{kReboot, 0, static_cast<std::int64_t>(idx), 0});
    }
    if (out.service_done_at) loop.schedule(*out.service_done_at, core::ServiceCompletion{s.node, out.service_epoch});
    if (out.halfopen_expiry) {
      loop.schedule(*out.halfopen_expiry, core::TimerFire{kHalfOpen, 0, static_cast<std::int64_t>(idx), 0});
    }
  }

  void reboot(std::size_t idx, std::uint32_t stage) {
    auto& s = servers[idx];
    if (stage == 0) {
      const SimTime until = s.server.begin_reboot(now());
      emit({now(), RecordKind::RebootStart, s.node, until, 0, 0, {}, s.name, {}});
      loop.schedule(until, core::TimerFire{kReboot, 1, static_cast<std::int64_t>(idx), 0});
    } else {
      s.server.finish_reboot(now());
      emit({now(), RecordKind::RebootDone, s.node, 0, 0, 0, {}, s.name, {}});
    }
  }

  // ---- honey farm -------------------------------------------------------

  void sync_taps() {
    for (auto& t : taps) {
      if (auto vm = farm->active_vm(t.profile)) t.detector.rehost(farm->vm(*vm).name, farm->vm(*vm).address);
    }
  }

  void at_farm(Packet pkt) {
    if (pkt.redirect_to != kNoNode) {
      engage(std::move(pkt));
      return;
    }
    if (!farm) return;
    auto vm = farm->find_by_address(pkt.hdr.dst);
    if (!vm) return;
    if (pkt.hdr.kind == PacketKind::ChallengeResponse) {
      for (auto& t : taps) {
        if (t.profile != farm->vm(*vm).profile) continue;
        det_out.clear();
        t.detector.on_response(pkt.hdr, now(), det_out);
        apply_detector(tap_index(t), farm_host);
      }
      return;
    }
    farm->log(*vm, pkt.hdr, now(), "direct");
  }

  void engage(Packet pkt) {
    auto srv = server_by_address.find(pkt.hdr.dst);
    std::optional<std::size_t> vm;
    if (farm && srv != server_by_address.end()) {
      if (auto profile = farm->profile_for(servers[srv->second].service)) vm = farm->active_vm(*profile);
    }
    close_legit(pkt, "diverted");
    if (!vm) {
      ++sunk;
      return;
    }
    const Address source = pkt.hdr.src;
    const auto res = farm->engage(*vm, pkt.hdr, now());
    const auto& state = farm->vm(*vm);
    if (res.first_engagement && controller) {
      actions.clear();
      controller->on_engagement(source, state.name, now(), actions);
      apply_actions();
    }
    if (res.trapped) {
      trapped(*vm, source, *res.trapped);
      return;
    }
    emit_vm_changes();
    if (res.reply) {
      const auto key = next_deferred++;
      deferred.emplace(key, Packet{*res.reply, {}, kNoNode});
      loop.schedule(res.reply->sent_at, core::TimerFire{kDeferred, 0, key, 0});
    }
    for (auto& t : taps) {
      if (t.profile != state.profile) continue;
      det_out.clear();
      t.detector.engage(source, now(), det_out);
      apply_detector(tap_index(t), farm_host);
    }
  }

  void trapped(std::size_t vm, Address source, AttackType cause) {
    const auto& state = farm->vm(vm);
    const std::string name = state.name;
    const std::size_t profile = state.profile;
    const std::string service(farm::to_string(farm->profiles()[profile].mimics));
    emit({now(), RecordKind::VmCompromised, static_cast<std::int64_t>(vm), source.value, 0, 0,
          std::string(to_string(cause)), name, {}});
    actions.clear();
    controller->on_trap(*farm, vm, source, cause, now(), actions);
    const auto result = actions.failover;
    apply_actions();
    const std::int64_t activated = result && result->activated ? static_cast<std::int64_t>(*result->activated) : -1;
    emit({now(), RecordKind::Failover, static_cast<std::int64_t>(vm), activated, 0, 0, service, name, {}});
    if (activated < 0) {
      emit({now(), RecordKind::PoolExhausted, static_cast<std::int64_t>(profile), 0, 0, 0, service, {}, {}});
    }
    emit_vm_changes();
    sync_taps();
    loop.schedule(now() + farm->restore_delay_ms(), core::TimerFire{kRestore, 0, 0, 0});
  }

  void restore() {
    std::vector<std::pair<std::size_t, std::vector<farm::LogEntry>>> archived;
    const auto restored = farm->restore_tick(now(), archived);
    for (auto vm : restored) emit({now(), RecordKind::VmRestored, static_cast<std::int64_t>(vm), 0, 0, 0, {}, farm->vm(vm).name, {}});
    for (const auto& [vm, logs] : archived) emit_logs(vm, logs);
    emit_vm_changes();
    sync_taps();
  }

  // ---- end hosts --------------------------------------------------------

  void at_client(NodeId node, const Packet& pkt) {
    const auto& hdr = pkt.hdr;
    switch (hdr.kind) {
      case PacketKind::Challenge: {
        auto& r = clients.at(node);
        if (std::bernoulli_distribution(r.p)(r.rng)) {
          send(node, detection::challenge_response(hdr, topo().node(node).address, true), GroundTruth{});
        }
        return;
      }
      case PacketKind::SynAck:
      case PacketKind::Data: {
        if (!pkt.truth.legit_request || !server_by_node.count(pkt.truth.origin)) return;
        auto it = requests.find(hdr.request_id);
        if (it == requests.end() || it->second.client != node) return;
        auto& req = it->second;
        if (hdr.kind == PacketKind::SynAck && !req.awaiting_reply) {
          req.awaiting_reply = true;
          PacketHeader data = req.data.hdr;
          data.sent_at = now();
          send(node, data, req.data.truth);
        } else if (hdr.kind == PacketKind::Data && req.awaiting_reply) {
          const SimTime latency = now() - req.sent_at;
          emit({now(), RecordKind::LegitServed, static_cast<std::int64_t>(hdr.request_id), latency, 0, 0, {}, {}, {}});
          requests.erase(it);
        }
        return;
      }
      default:
        return;
    }
  }

  void at_agent(NodeId node, const Packet& pkt) {
    if (pkt.hdr.kind != PacketKind::Challenge) return;
    auto& r = agents.at(node);
    if (traffic::bot_answers(pkt.hdr.challenge_level, r.p, r.rng)) {
      send(node, detection::challenge_response(pkt.hdr, topo().node(node).address, true), GroundTruth{});
    }
  }

  // ---- run phases -------------------------------------------------------

  void start_trace() {
    emit({0, RecordKind::RunStart, cfg.duration_ms, static_cast<std::int64_t>(cfg.attacks.size()), 0, 0,
          std::to_string(cfg.seed), {}, {}});
    for (std::size_t i = 0; i < cfg.attacks.size(); ++i) {
      const auto& a = cfg.attacks[i];
      emit({0, RecordKind::AttackScenario, static_cast<std::int64_t>(i), a.start_ms, a.end_ms, 0,
            std::string(to_string(a.attack)), {}, {}});
    }
    if (farm) {
      for (const auto& vm : farm->vms()) {
        emit({0, RecordKind::VmState, static_cast<std::int64_t>(vm.id), static_cast<std::int64_t>(vm.profile), 0, 0,
              std::string(farm::to_string(vm.lifecycle)), vm.name, {}});
      }
      farm->take_changes();
    }
  }

  void finish_trace() {
    if (farm) {
      for (const auto& vm : farm->vms()) emit_logs(vm.id, vm.attack_log);
    }
    for (NodeId fw : topo().nodes_of_kind(core::NodeKind::Firewall)) {
      emit({now(), RecordKind::FwDrops, fw, static_cast<std::int64_t>(net.firewall_drops(fw)), 0, 0, {},
            topo().node(fw).name, {}});
    }
    emit({now(), RecordKind::RunEnd, static_cast<std::int64_t>(net.link_drops()), static_cast<std::int64_t>(noroute_drops),
          static_cast<std::int64_t>(farm ? farm->delivered() : 0), 0, {}, {}, {}});
  }

  void run_until(SimTime t) {
    loop.run_until(t, [this](const core::Event& ev) { handle(ev); });
  }
};

Simulation::Simulation(const ScenarioConfig& cfg, Phase phase, const BaselineSet* baselines)
    : impl_(std::make_unique<Impl>(cfg, phase, baselines)) {}

Simulation::~Simulation() = default;

RunResult Simulation::run() {
  auto& s = *impl_;
  if (s.phase != Phase::Main) throw std::logic_error("run() needs a main-phase simulation");
  s.start_trace();
  s.run_until(s.cfg.duration_ms);
  s.finish_trace();
  return RunResult{s.metrics.finish(), std::move(s.trace)};
}

std::map<farm::Service, std::vector<detection::Observation>> Simulation::collect(const std::set<farm::Service>& services,
                                                                               std::size_t n, SimTime limit_ms) {
  auto& s = *impl_;
  auto enough = [&] {
    return std::all_of(services.begin(), services.end(), [&](farm::Service svc) {
      auto it = s.observations.find(svc);
      return it != s.observations.end() && it->second.size() >= n;
    });
  };
  while (!enough() && s.now() < limit_ms) s.run_until(std::min(limit_ms, s.now() + kWarmupChunkMs));
  return std::move(s.observations);
}

void Simulation::record_event_order(bool on) { impl_->loop.record_order(on); }

const std::vector<std::pair<SimTime, std::uint64_t>>& Simulation::event_order() const {
  return impl_->loop.order_trace();
}

const core::Network& Simulation::network() const { return impl_->net; }

const victim::ProductionServer& Simulation::server(NodeId node) const {
  return impl_->servers.at(impl_->server_by_node.at(node)).server;
}

const farm::HoneyFarm* Simulation::honey_farm() const { return impl_->farm ? &*impl_->farm : nullptr; }

std::uint64_t Simulation::farm_sunk() const { return impl_->sunk; }

BaselineSet train_baselines(const ScenarioConfig& cfg) {
  const auto topo = cfg.build_topology();
  std::map<farm::Service, double> load;  // expected request packets per ms
  for (const auto& s : cfg.servers) load.try_emplace(s.service, 0.0);
  for (const auto& l : cfg.legit) {
    for (const auto& s : cfg.servers) {
      if (s.node == l.target) load[s.service] += 2.0 * l.request_rate_per_client * static_cast<double>(l.clients.size());
    }
  }
  std::set<farm::Service> services;
  double slowest = 0.0;
  for (const auto& [svc, rate] : load) {
    if (rate <= 0.0) {
      throw InsufficientSample("no legitimate traffic reaches service " + std::string(farm::to_string(svc)) +
                               " to train its baseline");
    }
    services.insert(svc);
    slowest = std::max(slowest, static_cast<double>(cfg.detection.warmup_n) / rate);
  }
  BaselineSet out;
  if (services.empty()) return out;

  const SimTime limit = static_cast<SimTime>(std::ceil(4.0 * slowest)) + kWarmupChunkMs;
  Simulation warmup(cfg, Simulation::Phase::Warmup);
  auto obs = warmup.collect(services, cfg.detection.warmup_n, limit);
  for (auto svc : services) out.emplace(svc, detection::train_baseline(obs[svc], cfg.detection.warmup_n));
  return out;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  if (!cfg.defense.any()) return Simulation(cfg, Simulation::Phase::Main).run();
  const auto baselines = train_baselines(cfg);
  return Simulation(cfg, Simulation::Phase::Main, &baselines).run();
}

void write_run(const RunResult& run, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    const auto path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
  };
  write("trace.jsonl", serialize_trace(run.trace));
  write("report.json", report_json_text(run.report));
  write("report.csv", csv_header() + "\n" + csv_row(run.report) + "\n");
}

}  // namespace honeymesh::harness
