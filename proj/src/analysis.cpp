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

#include "nocsim/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <set>

#include "nocsim/workload.hpp"

namespace nocsim {

std::string to_string(const ProjectedOp& op) {
  char addr[16];
  std::snprintf(addr, sizeof addr, "0x%08x", static_cast<unsigned>(op.address));
  std::string out = "(" + to_string(op.key) + ", " + std::string(to_string(op.opcode)) + ", " + addr;
  if (op.status) out += ", " + std::string(to_string(*op.status));
  if (op.digest) {
    char d[16];
    std::snprintf(d, sizeof d, "%08x", static_cast<unsigned>(*op.digest));
    out += ", data#" + std::string(d);
  }
  return out + ")";
}

Projection transaction_projection(const Trace& trace) {
  Projection p;
  for (const auto& e : trace.events()) {
    if (e.kind != TraceKind::ReqIssued && e.kind != TraceKind::RespEmitted) continue;
    if (!e.master || !e.key || !e.opcode || !e.address) continue;
    ProjectedOp op{*e.key, *e.opcode, *e.address, std::nullopt, std::nullopt};
    auto& m = p[*e.master];
    if (e.kind == TraceKind::ReqIssued) {
      m.issued.push_back(op);
    } else {
      op.status = e.status;
      if (e.aux) op.digest = static_cast<std::uint32_t>(*e.aux);
      m.responses[op.key].push_back(op);
    }
  }
  return p;
}

namespace {

std::optional<std::string> diff_lists(const std::string& where, const std::vector<ProjectedOp>& a,
                                      const std::vector<ProjectedOp>& b) {
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool ha = i < a.size(), hb = i < b.size();
    if (ha && hb && a[i] == b[i]) continue;
    return where + "[" + std::to_string(i) + "]: " + (ha ? to_string(a[i]) : "<none>") + " vs " +
           (hb ? to_string(b[i]) : "<none>");
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> first_divergence(const Projection& a, const Projection& b) {
  std::set<MasterId> masters;
  for (const auto& [m, _] : a) masters.insert(m);
  for (const auto& [m, _] : b) masters.insert(m);
  static const MasterProjection kEmpty;
  for (MasterId m : masters) {
    auto ia = a.find(m);
    auto ib = b.find(m);
    const auto& pa = ia == a.end() ? kEmpty : ia->second;
    const auto& pb = ib == b.end() ? kEmpty : ib->second;
    const std::string who = "N" + std::to_string(m);
    if (auto d = diff_lists(who + " issued", pa.issued, pb.issued)) return d;
    std::set<SocketOrderKey> keys;
    for (const auto& [k, _] : pa.responses) keys.insert(k);
    for (const auto& [k, _] : pb.responses) keys.insert(k);
    static const std::vector<ProjectedOp> kNone;
    for (const auto& k : keys) {
      auto ra = pa.responses.find(k);
      auto rb = pb.responses.find(k);
      if (auto d = diff_lists(who + " responses " + to_string(k), ra == pa.responses.end() ? kNone : ra->second,
                              rb == pb.responses.end() ? kNone : rb->second)) {
        return d;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

struct IssuedInfo {
  const TraceEvent* event;
  bool answered = false;
};

std::uint32_t out_depth(const Scenario& s, SwitchId sw, PortId port) {
  for (const auto& l : s.topology.links) {
    if ((l.a.sw == sw && l.a.port == port) || (l.b.sw == sw && l.b.port == port)) return l.depth;
  }
  for (const auto& [id, a] : s.topology.niu_attachments) {
    if (a.at.sw == sw && a.at.port == port) return a.depth;
  }
  return 0;
}

}  // namespace

std::vector<std::string> check_invariants(const Trace& trace, const Scenario& scenario, bool complete) {
  std::vector<std::string> v;
  const auto& events = trace.events();

  std::map<std::pair<MasterId, std::uint64_t>, IssuedInfo> issued;
  std::map<std::pair<MasterId, SocketOrderKey>, std::deque<std::uint64_t>> streams;
  std::map<std::pair<MasterId, Tag>, std::int64_t> live_tags;
  std::map<Site, MasterId> locks;
  std::map<std::pair<NiuId, MasterId>, std::optional<Address>> monitors;
  std::map<std::pair<NiuId, MasterId>, std::int64_t> exclusive_tokens;

  Cycle last = 0;
  for (std::size_t idx = 0; idx < events.size(); ++idx) {
    const TraceEvent& e = events[idx];
    if (e.cycle < last) v.push_back("cycle order violation: " + format_event(e) + " after cycle " + std::to_string(last));
    last = std::max(last, e.cycle);
    const bool at_niu = e.site.kind == Site::Kind::Niu;

    switch (e.kind) {
      case TraceKind::ReqIssued: {
        if (!e.master || !e.txn || !e.key || !e.opcode) break;
        issued[{*e.master, *e.txn}] = IssuedInfo{&e};
        if (needs_response(*e.opcode)) streams[{*e.master, *e.key}].push_back(*e.txn);
        break;
      }
      case TraceKind::RespEmitted: {
        if (!e.master || !e.txn || !e.key) break;
        auto it = issued.find({*e.master, *e.txn});
        if (it == issued.end()) {
          v.push_back("conservation violation: response without request: " + format_event(e));
          break;
        }
        const TraceEvent& req = *it->second.event;
        if (it->second.answered) {
          v.push_back("conservation violation: second response: " + format_event(e));
          break;
        }
        if (!needs_response(*req.opcode)) {
          v.push_back("conservation violation: response to a posted store: " + format_event(e));
          break;
        }
        if (req.key != e.key || req.opcode != e.opcode || req.address != e.address) {
          v.push_back("conservation violation: response does not match its request: " + format_event(req) +
                      " / " + format_event(e));
        }
        it->second.answered = true;
        auto& q = streams[{*e.master, *e.key}];
        if (!q.empty() && q.front() != *e.txn) {
          const TraceEvent& older = *issued[{*e.master, q.front()}].event;
          v.push_back("stream order violation: " + format_event(e) + " released before older " +
                      format_event(older));
        }
        if (auto pos = std::find(q.begin(), q.end(), *e.txn); pos != q.end()) q.erase(pos);
        break;
      }
      case TraceKind::PktInjected:
      case TraceKind::PktDelivered: {
        if (!at_niu || !e.master || !e.tag) break;
        if (scenario.initiators.contains(e.site.id) && e.site.id == *e.master) {
          auto& n = live_tags[{*e.master, *e.tag}];
          if (e.kind == TraceKind::PktInjected && !e.status) {
            ++n;
          } else if (e.kind == TraceKind::PktDelivered && e.status) {
            if (n == 0) v.push_back("tag liveness violation: response on a dead tag: " + format_event(e));
            else --n;
          }
        }
        if (e.kind == TraceKind::PktInjected && e.status && scenario.targets.contains(e.site.id) &&
            e.opcode == Opcode::StoreExclusive && e.status == Status::ExOkay) {
          if (--exclusive_tokens[{e.site.id, *e.master}] < 0) {
            v.push_back("exclusive safety violation: EXOKAY without an armed monitor: " + format_event(e));
            exclusive_tokens[{e.site.id, *e.master}] = 0;
          }
        }
        break;
      }
      case TraceKind::MonitorArmed:
        if (e.master && e.address) monitors[{e.site.id, *e.master}] = *e.address;
        break;
      case TraceKind::MonitorCleared: {
        if (!e.master) break;
        auto& m = monitors[{e.site.id, *e.master}];
        if (!m || m != e.address) {
          v.push_back("exclusive safety violation: clearing a monitor that is not armed: " + format_event(e));
        }
        m.reset();
        // A monitor cleared by its own master is a successful exclusive store.
        if (e.aux && *e.aux == *e.master) ++exclusive_tokens[{e.site.id, *e.master}];
        break;
      }
      case TraceKind::LockSet: {
        if (!e.master) break;
        if (auto it = locks.find(e.site); it != locks.end()) {
          v.push_back("lock violation: LOCK_SET on a port already locked by N" + std::to_string(it->second) + ": " +
                      format_event(e));
        }
        locks[e.site] = *e.master;
        break;
      }
      case TraceKind::LockCleared: {
        auto it = locks.find(e.site);
        if (it == locks.end() || !e.master || it->second != *e.master) {
          v.push_back("lock violation: LOCK_CLEARED by a non-owner: " + format_event(e));
        }
        if (it != locks.end()) locks.erase(it);
        break;
      }
      case TraceKind::PktForwarded: {
        if (!e.master) break;
        // Locks reserve the request class only; responses carry a status.
        if (!e.status) {
          if (auto it = locks.find(e.site); it != locks.end() && it->second != *e.master) {
            v.push_back("lock mutual exclusion violation: N" + std::to_string(*e.master) + " crossed " +
                        e.site.str() + " locked by N" + std::to_string(it->second) + ": " + format_event(e));
          }
        }
        const auto depth = out_depth(scenario, e.site.id, e.site.port);
        if (e.aux && *e.aux >= depth) {
          v.push_back("credit bound violation: " + std::to_string(*e.aux) + " credits left on a " +
                      std::to_string(depth) + "-deep buffer: " + format_event(e));
        }
        break;
      }
      case TraceKind::Stall:
        break;
    }
  }

  if (complete) {
    for (const auto& [k, info] : issued) {
      if (needs_response(*info.event->opcode) && !info.answered) {
        v.push_back("conservation violation: request never answered: " + format_event(*info.event));
      }
    }
    for (const auto& [k, n] : live_tags) {
      if (n != 0) {
        v.push_back("tag liveness violation: N" + std::to_string(k.first) + " tag " + std::to_string(k.second) +
                    " still live at end of run");
      }
    }
    for (const auto& [site, owner] : locks) {
      v.push_back("lock violation: " + site.str() + " still locked by N" + std::to_string(owner) + " at end of run");
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

namespace {

/// Reference semantics, written independently of the NIU code paths.
class SequentialBus {
 public:
  explicit SequentialBus(const Scenario& s) : s_(s) {
    for (const auto& [id, t] : s.targets) memory_[id].assign(t.memory_size, 0);
  }

  void execute(const InitiatorConfig& cfg, const TransactionRequest& r) {
    const std::uint64_t bytes = std::uint64_t{r.burst_len} * r.beat_size;
    const TargetConfig* target = nullptr;
    for (const auto& [id, t] : s_.targets) {
      if (r.address >= t.base && std::uint64_t{r.address} + bytes <= std::uint64_t{t.base} + t.size) target = &t;
    }
    if (target == nullptr) return;

    const bool atomic = r.opcode == Opcode::ReadEx || r.opcode == Opcode::StoreLockedRelease ||
                        r.opcode == Opcode::LoadExclusive || r.opcode == Opcode::StoreExclusive;
    if (atomic && bytes > cfg.max_payload) return;
    if (r.opcode == Opcode::ReadEx) locked_[cfg.id] = true;
    if (r.opcode == Opcode::StoreLockedRelease) {
      if (!locked_[cfg.id]) return;
      locked_[cfg.id] = false;
    }

    // Socket byte order to memory byte order, beat by beat.
    Bytes data = r.data;
    if (cfg.endianness != Endianness::Little) {
      for (std::size_t b = 0; b + r.beat_size <= data.size(); b += r.beat_size) {
        std::reverse(data.begin() + b, data.begin() + b + r.beat_size);
      }
    }

    const std::uint32_t frag = std::max(r.beat_size, cfg.max_payload / r.beat_size * r.beat_size);
    for (std::uint64_t begin = 0; begin < bytes; begin += frag) {
      const std::uint64_t len = std::min<std::uint64_t>(frag, bytes - begin);
      const std::uint64_t off = r.address - target->base + begin;
      access(*target, cfg.id, r.opcode, off, len, data, begin);
    }
  }

  void add_counter(Address counter, std::uint32_t amount) {
    for (const auto& [id, t] : s_.targets) {
      if (counter < t.base || counter - t.base + 4 > t.memory_size) continue;
      auto& mem = memory_[id];
      const std::size_t off = counter - t.base;
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= std::uint32_t{mem[off + i]} << (8 * i);
      v += amount;
      for (int i = 0; i < 4; ++i) mem[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
  }

  std::map<NiuId, Bytes> take() { return std::move(memory_); }

 private:
  void access(const TargetConfig& t, MasterId m, Opcode op, std::uint64_t off, std::uint64_t len, const Bytes& data,
              std::uint64_t data_at) {
    if (off + len > t.memory_size) return;
    const std::uint64_t g0 = off / t.granule, g1 = (off + len - 1) / t.granule;
    const bool exclusive = op == Opcode::LoadExclusive || op == Opcode::StoreExclusive;
    if (exclusive && g0 != g1) return;
    auto& mon = monitors_[t.id];

    auto write = [&](bool clear_self) {
      auto& mem = memory_[t.id];
      std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(data_at), len, mem.begin() + static_cast<std::ptrdiff_t>(off));
      for (auto& [other, g] : mon) {
        if (g && *g >= g0 && *g <= g1 && (other != m || clear_self)) g.reset();
      }
    };

    switch (op) {
      case Opcode::Load:
      case Opcode::ReadEx:
        break;
      case Opcode::LoadExclusive:
        mon[m] = g0;
        break;
      case Opcode::Store:
      case Opcode::StorePosted:
      case Opcode::StoreLockedRelease:
        write(false);
        break;
      case Opcode::StoreExclusive:
        if (mon[m] == g0) write(true);
        break;
    }
  }

  const Scenario& s_;
  std::map<NiuId, Bytes> memory_;
  std::map<NiuId, std::map<MasterId, std::optional<std::uint64_t>>> monitors_;
  std::map<MasterId, bool> locked_;
};

}  // namespace

std::map<NiuId, Bytes> sequential_oracle(const Scenario& scenario) {
  SequentialBus bus(scenario);
  const auto slots = random_slots(scenario);
  std::vector<std::pair<const InitiatorConfig*, Script>> scripts;
  for (const auto& [id, w] : scenario.workloads) {
    const auto& cfg = scenario.initiators.at(id);
    if (const auto* s = std::get_if<Script>(&w)) {
      scripts.emplace_back(&cfg, *s);
    } else if (const auto* r = std::get_if<RandomWorkload>(&w)) {
      scripts.emplace_back(&cfg, expand_random(*r, cfg, scenario, slots.at(id), slots.size(), scenario.run.seed));
    }
  }
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (const auto& [cfg, script] : scripts) {
      if (i >= script.size()) continue;
      any = true;
      bus.execute(*cfg, script[i].request);
    }
    if (!any) break;
  }
  for (const auto& [id, w] : scenario.workloads) {
    if (const auto* e = std::get_if<ExclusiveLoop>(&w)) bus.add_counter(e->counter, e->iterations);
    if (const auto* l = std::get_if<LockLoop>(&w)) bus.add_counter(l->counter, l->iterations);
  }
  return bus.take();
}

}  // namespace nocsim
