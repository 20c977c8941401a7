/*
 * Copyright 2026 The nocsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nocsim/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <sstream>
#include <tuple>

#include "nocsim/error.hpp"
#include "nocsim/workload.hpp"

namespace nocsim {

std::uint32_t data_digest(const Bytes& data) {
  std::uint32_t h = 2166136261u;
  for (auto b : data) {
    h ^= b;
    h *= 16777619u;
  }
  return h;
}

namespace {

struct TxnMeta {
  Opcode opcode;
  Address address;
  Cycle issue_cycle;
};

struct InitiatorRt {
  InitiatorRt(const InitiatorConfig& c, std::unique_ptr<MasterProgram> p)
      : cfg(c), state(c), program(std::move(p)) {}

  InitiatorConfig cfg;
  InitiatorState state;
  std::unique_ptr<MasterProgram> program;
  LinkParams params;
  std::size_t up = 0;    // request class, NIU -> switch
  std::size_t down = 0;  // response class, switch -> NIU
  std::uint64_t next_txn = 0;
  std::deque<Flit> inject;
  std::vector<Flit> rx;
  std::map<std::uint64_t, TxnMeta> meta;
  bool stalled = false;
};

struct ServiceItem {
  Packet packet;
  Cycle ready;
};

struct TargetRt {
  explicit TargetRt(const TargetConfig& c) : cfg(c), memory(c.memory_size), monitors(c.granule) {}

  TargetConfig cfg;
  TargetMemory memory;
  ExclusiveMonitorSet monitors;
  LinkParams params;
  std::size_t down = 0;  // request class, switch -> NIU
  std::size_t up = 0;    // response class, NIU -> switch
  std::vector<Flit> rx;
  std::deque<ServiceItem> service;
  Cycle busy_until = 0;
  std::deque<Flit> inject;
};

TraceEvent packet_event(Cycle now, Site site, TraceKind kind, const PacketHeader& h) {
  TraceEvent e{now, site, kind};
  e.master = h.mst_addr;
  e.tag = h.tag;
  e.opcode = h.opcode;
  if (h.kind == PacketKind::Response) e.status = h.status;
  e.address = h.slv_addr.offset;
  e.aux = h.packet_id;
  return e;
}

class Engine {
 public:
  explicit Engine(const Scenario& s) : s_(s), map_(s.address_map()) {
    build_fabric();
  }

  RunResult run() {
    RunResult result;
    trace_ = &result.trace;
    Cycle now = 0;
    try {
      while (!done()) {
        if (now >= s_.run.max_cycles) {
          result.timed_out = true;
          break;
        }
        cycle(now);
        ++now;
      }
    } catch (const Fault& f) {
      result.fault = f.what();
    }
    finish(result, now);
    return result;
  }

 private:
  std::size_t add_channel(const LinkParams& p, std::uint32_t depth, std::string name) {
    channels_.emplace_back(p, depth);
    channel_names_.push_back(std::move(name));
    return channels_.size() - 1;
  }

  void build_fabric() {
    std::map<SwitchId, std::vector<PortWiring>> wiring;
    for (const auto& sw : s_.topology.switches) wiring[sw.id].resize(sw.ports);

    static constexpr const char* kLane[] = {"/req", "/resp"};
    auto pname = [](PortRef p) { return "S" + std::to_string(p.sw) + "." + std::to_string(p.port); };

    for (const auto& l : s_.topology.links) {
      for (Lane lane : {kRequestLane, kResponseLane}) {
        auto ab = add_channel(l.params, l.depth, pname(l.a) + ">" + pname(l.b) + kLane[lane]);
        auto ba = add_channel(l.params, l.depth, pname(l.b) + ">" + pname(l.a) + kLane[lane]);
        wiring[l.a.sw][l.a.port].out[lane] = ab;
        wiring[l.b.sw][l.b.port].in[lane] = ab;
        wiring[l.b.sw][l.b.port].out[lane] = ba;
        wiring[l.a.sw][l.a.port].in[lane] = ba;
      }
    }

    for (const auto& [id, a] : s_.topology.niu_attachments) {
      const std::string n = "N" + std::to_string(id);
      const bool initiator = s_.initiators.contains(id);
      // An initiator sends requests and receives responses; a target the
      // reverse. Only those two channels exist on an attachment.
      const Lane up_lane = initiator ? kRequestLane : kResponseLane;
      const Lane down_lane = initiator ? kResponseLane : kRequestLane;
      auto up = add_channel(a.params, a.depth, n + ">" + pname(a.at) + kLane[up_lane]);
      auto down = add_channel(a.params, a.depth, pname(a.at) + ">" + n + kLane[down_lane]);
      wiring[a.at.sw][a.at.port].in[up_lane] = up;
      wiring[a.at.sw][a.at.port].out[down_lane] = down;
      if (initiator) {
        auto& rt = initiators_.emplace_back(s_.initiators.at(id), make_program(s_, id));
        rt.params = a.params;
        rt.up = up;
        rt.down = down;
      } else {
        auto& rt = targets_.emplace_back(s_.targets.at(id));
        rt.params = a.params;
        rt.up = up;
        rt.down = down;
      }
    }
    for (auto& [id, w] : wiring) switches_.emplace_back(id, std::move(w));
  }

  bool done() const {
    for (const auto& i : initiators_) {
      if (!i.program->finished() || !i.state.pending.empty() || !i.inject.empty() || !i.rx.empty()) return false;
    }
    for (const auto& t : targets_) {
      if (!t.service.empty() || !t.inject.empty() || !t.rx.empty()) return false;
    }
    for (const auto& sw : switches_) {
      if (!sw.idle()) return false;
    }
    for (const auto& ch : channels_) {
      if (!ch.idle()) return false;
    }
    return true;
  }

  void cycle(Cycle now) {
    for (auto& ch : channels_) ch.settle(now);
    for (auto& i : initiators_) present(i, now);
    for (auto& i : initiators_) inject(i.inject, channels_[i.up], Site::niu(i.cfg.id), now);
    for (auto& sw : switches_) {
      sw.absorb(now, channels_);
      sw.step(now, s_.run.mode, s_.routes, channels_, trace_);
    }
    for (auto& t : targets_) serve(t, now);
    for (auto& i : initiators_) collect(i, now);
  }

  void present(InitiatorRt& i, Cycle now) {
    if (!i.inject.empty()) return;
    const ScriptStep* step = i.program->current();
    if (step == nullptr) return;
    if (step->fence && i.state.pending.outstanding() > 0) return;

    const auto& req = step->request;
    const std::uint64_t txn = i.next_txn;
    auto result = ingress_pack(req, i.cfg, map_, i.state, txn, now, next_packet_id_);

    if (std::holds_alternative<IngressStall>(result)) {
      ++i_stats(i).stall_cycles;
      if (!i.stalled) {
        TraceEvent e{now, Site::niu(i.cfg.id), TraceKind::Stall};
        e.master = i.cfg.id;
        e.key = req.socket_order_key;
        e.opcode = req.opcode;
        e.address = req.address;
        e.txn = txn;
        trace_->record(e);
      }
      i.stalled = true;
      return;
    }

    i.stalled = false;
    ++i.next_txn;
    ++i_stats(i).issued;
    TraceEvent e{now, Site::niu(i.cfg.id), TraceKind::ReqIssued};
    e.master = i.cfg.id;
    e.key = req.socket_order_key;
    e.opcode = req.opcode;
    e.address = req.address;
    e.txn = txn;
    e.aux = req.byte_count();
    trace_->record(e);

    const bool surfaced = needs_response(req.opcode);
    if (surfaced) {
      i.state.releaser.issue(txn, req.socket_order_key);
      i.meta[txn] = TxnMeta{req.opcode, req.address, now};
    }
    i.program->accepted();  // invalidates `step`

    if (auto* packets = std::get_if<std::vector<Packet>>(&result)) {
      for (const auto& p : *packets) {
        for (auto& f : serialize(p, i.params)) i.inject.push_back(std::move(f));
      }
      return;
    }
    auto& local = std::get<LocalCompletion>(result);
    if (!local.surfaced) {
      ++i_stats(i).posted;
      ++posted_;
      return;
    }
    release(i, i.state.releaser.complete(txn, std::move(local.response)), now);
  }

  void release(InitiatorRt& i, std::vector<ResponseReleaser::Released> released, Cycle now) {
    for (auto& r : released) {
      auto it = i.meta.find(r.txn);
      const TxnMeta m = it->second;
      i.meta.erase(it);
      TraceEvent e{now, Site::niu(i.cfg.id), TraceKind::RespEmitted};
      e.master = i.cfg.id;
      e.key = r.response.socket_order_key;
      e.opcode = m.opcode;
      e.status = r.response.status;
      e.address = m.address;
      e.txn = r.txn;
      if (!r.response.data.empty()) e.aux = data_digest(r.response.data);
      trace_->record(e);

      auto& st = i_stats(i);
      const Cycle latency = now - m.issue_cycle;
      if (st.responses == 0 || latency < st.latency_min) st.latency_min = latency;
      st.latency_max = std::max(st.latency_max, latency);
      st.latency_sum += latency;
      ++st.responses;
      if (r.response.status == Status::ExFail) ++st.exfail;
      ++completed_;
      i.program->on_response(m.opcode, r.response);
    }
  }

  void inject(std::deque<Flit>& queue, LinkChannel& ch, Site site, Cycle now) {
    if (queue.empty() || !ch.can_send(now)) return;
    Flit f = std::move(queue.front());
    queue.pop_front();
    if (f.is_head()) trace_->record(packet_event(now, site, TraceKind::PktInjected, *f.header));
    ch.send(std::move(f), now);
  }

  /// Pulls every arrived flit off `ch`; returns a packet each time a tail
  /// completes one. NIUs always drain their input, so credits go straight
  /// back.
  template <typename Fn>
  void drain(LinkChannel& ch, std::vector<Flit>& rx, Cycle now, Fn&& on_packet) {
    while (auto f = ch.receive(now)) {
      ch.return_credit(now);
      const bool tail = f->is_tail();
      rx.push_back(std::move(*f));
      if (tail) {
        Packet p = deserialize(rx);
        rx.clear();
        on_packet(std::move(p));
      }
    }
  }

  void serve(TargetRt& t, Cycle now) {
    const Site site = Site::niu(t.cfg.id);
    drain(channels_[t.down], t.rx, now, [&](Packet p) {
      trace_->record(packet_event(now, site, TraceKind::PktDelivered, p.header));
      const Cycle start = std::max(now, t.busy_until);
      t.busy_until = start + t.cfg.service_cycles;
      t.service.push_back(ServiceItem{std::move(p), t.busy_until});
    });

    while (!t.service.empty() && t.service.front().ready <= now) {
      const Packet request = std::move(t.service.front().packet);
      t.service.pop_front();
      std::vector<MonitorNote> notes;
      Packet resp = target_handle(request, t.memory, t.monitors, &notes);
      for (const auto& n : notes) {
        TraceEvent e{now, site, n.armed ? TraceKind::MonitorArmed : TraceKind::MonitorCleared};
        e.master = n.master;
        e.address = n.granule;
        e.aux = request.header.mst_addr;
        trace_->record(e);
      }
      resp.header.packet_id = next_packet_id_++;
      for (auto& f : serialize(resp, t.params)) t.inject.push_back(std::move(f));
    }
    inject(t.inject, channels_[t.up], site, now);
  }

  void collect(InitiatorRt& i, Cycle now) {
    const Site site = Site::niu(i.cfg.id);
    drain(channels_[i.down], i.rx, now, [&](Packet p) {
      trace_->record(packet_event(now, site, TraceKind::PktDelivered, p.header));
      auto done = egress_unpack(p, i.state.pending, i.cfg.endianness);
      if (!done) return;
      trace_->events().back().txn = done->txn;  // the fragment that completed it
      if (!done->surfaced()) {
        ++i_stats(i).posted;
        ++posted_;
        return;
      }
      release(i, i.state.releaser.complete(done->txn, std::move(done->response)), now);
    });
  }

  MasterStats& i_stats(const InitiatorRt& i) { return stats_[i.cfg.id]; }

  void finish(RunResult& result, Cycle now) {
    for (const auto& i : initiators_) {
      for (const auto& [tag, slot] : i.state.pending.slots()) {
        for (const auto& p : slot) {
          result.stuck.push_back(StuckTransaction{i.cfg.id, p.txn, p.request.socket_order_key, p.request.opcode,
                                                  p.request.address, tag, p.issue_cycle});
        }
      }
    }
    std::sort(result.stuck.begin(), result.stuck.end(), [](const auto& a, const auto& b) {
      return std::tie(a.master, a.txn) < std::tie(b.master, b.txn);
    });
    for (auto& t : targets_) result.memory[t.cfg.id] = t.memory.bytes();

    auto& st = result.stats;
    st.cycles = now;
    st.completed = completed_;
    st.posted = posted_;
    for (const auto& sw : switches_) st.lock_stalls += sw.lock_stalls();
    for (const auto& i : initiators_) {
      auto m = stats_[i.cfg.id];
      m.loop_iterations = i.program->iterations();
      m.latency_mean = m.responses ? static_cast<double>(m.latency_sum) / static_cast<double>(m.responses) : 0.0;
      st.masters[i.cfg.id] = m;
    }
    for (std::size_t c = 0; c < channels_.size(); ++c) {
      const auto flits = channels_[c].flits_sent();
      st.links.push_back(LinkStats{channel_names_[c], flits,
                                   now ? static_cast<double>(flits) / static_cast<double>(now) : 0.0});
    }
  }

  const Scenario& s_;
  AddressMap map_;
  std::vector<LinkChannel> channels_;
  std::vector<std::string> channel_names_;
  std::vector<Switch> switches_;
  std::vector<InitiatorRt> initiators_;
  std::vector<TargetRt> targets_;
  std::map<MasterId, MasterStats> stats_;
  std::uint64_t next_packet_id_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t posted_ = 0;
  Trace* trace_ = nullptr;
};

}  // namespace

RunResult run(const Scenario& scenario) { return Engine(scenario).run(); }

std::string format_stuck(const std::vector<StuckTransaction>& stuck) {
  std::ostringstream out;
  for (const auto& t : stuck) {
    char addr[16];
    std::snprintf(addr, sizeof addr, "0x%08x", static_cast<unsigned>(t.address));
    out << "stuck N" << t.master << " txn=" << t.txn << " key=" << to_string(t.key) << ' ' << to_string(t.opcode)
        << ' ' << addr << " tag=" << unsigned{t.tag} << " issued@" << t.issue_cycle << '\n';
  }
  return out.str();
}

std::string format_stats(const RunResult& r, const Scenario& s) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "rng_algorithm = " << kRngAlgorithm << '\n';
  out << "seed = " << s.run.seed << '\n';
  out << "mode = " << to_string(s.run.mode) << '\n';
  out << "cycles = " << r.stats.cycles << '\n';
  out << "timed_out = " << (r.timed_out ? 1 : 0) << '\n';
  out << "fault = " << (r.fault ? *r.fault : "none") << '\n';
  out << "completed_transactions = " << r.stats.completed << '\n';
  out << "posted_completions = " << r.stats.posted << '\n';
  out << "stuck_transactions = " << r.stuck.size() << '\n';
  out << "lock_stall_cycles = " << r.stats.lock_stalls << '\n';
  for (const auto& [id, m] : r.stats.masters) {
    const std::string p = "master.N" + std::to_string(id) + ".";
    out << p << "issued = " << m.issued << '\n';
    out << p << "responses = " << m.responses << '\n';
    out << p << "posted = " << m.posted << '\n';
    out << p << "exfail = " << m.exfail << '\n';
    out << p << "loop_iterations = " << m.loop_iterations << '\n';
    out << p << "stall_cycles = " << m.stall_cycles << '\n';
    out << p << "latency_min = " << m.latency_min << '\n';
    out << p << "latency_mean = " << m.latency_mean << '\n';
    out << p << "latency_max = " << m.latency_max << '\n';
  }
  for (const auto& l : r.stats.links) {
    out << "link." << l.name << ".flits = " << l.flits << '\n';
    out << "link." << l.name << ".utilization = " << l.utilization << '\n';
  }
  return out.str();
}

}  // namespace nocsim
