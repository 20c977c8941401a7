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

#include "nocsim/fabric.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "nocsim/error.hpp"
#include "nocsim/trace.hpp"

namespace nocsim {

namespace {

struct Neighbor {
  bool is_niu = false;
  NiuId niu = 0;
  PortRef port;
};

std::map<PortRef, Neighbor> neighbors(const Topology& topo) {
  std::map<PortRef, Neighbor> out;
  for (const auto& l : topo.links) {
    out[l.a] = Neighbor{false, 0, l.b};
    out[l.b] = Neighbor{false, 0, l.a};
  }
  for (const auto& [niu, att] : topo.niu_attachments) out[att.at] = Neighbor{true, niu, {}};
  return out;
}

std::string port_name(const PortRef& p) { return "S" + std::to_string(p.sw) + "." + std::to_string(p.port); }

}  // namespace

const SwitchDesc* Topology::find_switch(SwitchId id) const {
  for (const auto& s : switches) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::vector<std::string> Topology::check() const {
  std::vector<std::string> problems;
  if (switches.empty()) problems.emplace_back("topology has no switches");

  std::set<SwitchId> ids;
  for (const auto& s : switches) {
    if (!ids.insert(s.id).second) problems.push_back("duplicate switch S" + std::to_string(s.id));
    if (s.ports == 0) problems.push_back("switch S" + std::to_string(s.id) + " has no ports");
  }

  std::set<PortRef> used;
  auto use_port = [&](const PortRef& p, const std::string& who) {
    const SwitchDesc* s = find_switch(p.sw);
    if (!s) {
      problems.push_back(who + " references unknown switch S" + std::to_string(p.sw));
    } else if (p.port >= s->ports) {
      problems.push_back(who + " uses port " + port_name(p) + " beyond the switch's port count");
    } else if (!used.insert(p).second) {
      problems.push_back("port " + port_name(p) + " has more than one link");
    }
  };
  for (const auto& l : links) {
    const std::string who = "link " + port_name(l.a) + "-" + port_name(l.b);
    use_port(l.a, who);
    use_port(l.b, who);
    if (l.a.sw == l.b.sw) problems.push_back(who + " is a self loop");
    if (!l.params.valid() || l.depth == 0) problems.push_back(who + " has a zero parameter");
  }
  for (const auto& [niu, att] : niu_attachments) {
    const std::string who = "attachment of N" + std::to_string(niu);
    use_port(att.at, who);
    if (!att.params.valid() || att.depth == 0) problems.push_back(who + " has a zero parameter");
  }

  if (!switches.empty() && problems.empty()) {
    std::map<SwitchId, std::vector<SwitchId>> adj;
    for (const auto& l : links) {
      adj[l.a.sw].push_back(l.b.sw);
      adj[l.b.sw].push_back(l.a.sw);
    }
    std::set<SwitchId> seen{switches.front().id};
    std::vector<SwitchId> stack{switches.front().id};
    while (!stack.empty()) {
      SwitchId s = stack.back();
      stack.pop_back();
      for (SwitchId n : adj[s]) {
        if (seen.insert(n).second) stack.push_back(n);
      }
    }
    if (seen.size() != switches.size()) problems.emplace_back("topology is not connected");
  }
  return problems;
}

std::string_view to_string(TransportMode mode) {
  return mode == TransportMode::Wormhole ? "wormhole" : "store_and_forward";
}

std::optional<TransportMode> parse_mode(std::string_view text) {
  if (text == "wormhole") return TransportMode::Wormhole;
  if (text == "store_and_forward" || text == "saf") return TransportMode::StoreAndForward;
  return std::nullopt;
}

NiuId destination(const PacketHeader& header) {
  return header.kind == PacketKind::Request ? header.slv_addr.target : header.mst_addr;
}

// ---------------------------------------------------------------------------

std::optional<PortId> RoutingTable::lookup(SwitchId sw, NiuId target) const {
  auto s = table_.find(sw);
  if (s == table_.end()) return std::nullopt;
  auto t = s->second.find(target);
  if (t == s->second.end()) return std::nullopt;
  return t->second;
}

RoutingTable RoutingTable::shortest_paths(const Topology& topo) {
  RoutingTable table;
  const auto nbr = neighbors(topo);
  constexpr unsigned kFar = std::numeric_limits<unsigned>::max();

  for (const auto& [niu, att] : topo.niu_attachments) {
    std::map<SwitchId, unsigned> dist;
    for (const auto& s : topo.switches) dist[s.id] = kFar;
    dist[att.at.sw] = 0;
    std::queue<SwitchId> frontier;
    frontier.push(att.at.sw);
    while (!frontier.empty()) {
      SwitchId u = frontier.front();
      frontier.pop();
      const SwitchDesc* sd = topo.find_switch(u);
      for (PortId p = 0; p < sd->ports; ++p) {
        auto it = nbr.find(PortRef{u, p});
        if (it == nbr.end() || it->second.is_niu) continue;
        SwitchId v = it->second.port.sw;
        if (dist[v] == kFar) {
          dist[v] = dist[u] + 1;
          frontier.push(v);
        }
      }
    }

    table.set(att.at.sw, niu, att.at.port);
    for (const auto& s : topo.switches) {
      if (s.id == att.at.sw || dist[s.id] == kFar) continue;
      for (PortId p = 0; p < s.ports; ++p) {
        auto it = nbr.find(PortRef{s.id, p});
        if (it == nbr.end() || it->second.is_niu) continue;
        if (dist[it->second.port.sw] + 1 == dist[s.id]) {
          table.set(s.id, niu, p);
          break;
        }
      }
    }
  }
  return table;
}

std::vector<std::string> RoutingTable::check(const Topology& topo) const {
  std::vector<std::string> problems;
  const auto nbr = neighbors(topo);
  for (const auto& [target, att] : topo.niu_attachments) {
    const std::string tname = "N" + std::to_string(target);
    for (const auto& start : topo.switches) {
      SwitchId cur = start.id;
      bool reached = false;
      for (std::size_t hops = 0; hops <= topo.switches.size(); ++hops) {
        auto port = lookup(cur, target);
        if (!port) {
          problems.push_back("unroutable target " + tname + " at switch S" + std::to_string(cur));
          break;
        }
        auto it = nbr.find(PortRef{cur, *port});
        if (it == nbr.end()) {
          problems.push_back("route to " + tname + " at S" + std::to_string(cur) + " leaves through unconnected port " +
                             std::to_string(*port));
          break;
        }
        if (it->second.is_niu) {
          if (it->second.niu != target) {
            problems.push_back("route to " + tname + " at S" + std::to_string(cur) + " ends at N" +
                               std::to_string(it->second.niu));
          }
          reached = true;
          break;
        }
        cur = it->second.port.sw;
      }
      if (!reached && (problems.empty() || problems.back().find(tname) == std::string::npos)) {
        problems.push_back("routing loop toward target " + tname + " from S" + std::to_string(start.id));
      }
    }
  }
  return problems;
}

PortId route(const RoutingTable& table, SwitchId sw, NiuId target) {
  auto port = table.lookup(sw, target);
  if (!port) {
    throw Fault(FaultKind::UnroutablePacket, "no route to N" + std::to_string(target) + " at S" + std::to_string(sw));
  }
  return *port;
}

PortId route(const RoutingTable& table, SwitchId sw, const PacketHeader& header) {
  return route(table, sw, destination(header));
}

// ---------------------------------------------------------------------------

std::optional<PortId> arbitrate(std::span<const Candidate> candidates, ArbiterState& state) {
  const Candidate* best = nullptr;
  unsigned best_distance = 0;
  const unsigned n = std::max<unsigned>(state.num_inputs, 1);
  for (const auto& c : candidates) {
    if (state.lock_owner && c.header->mst_addr != *state.lock_owner) continue;
    const unsigned distance = (c.input_port + n - state.cursor % n) % n;
    if (best == nullptr || c.header->priority > best->header->priority ||
        (c.header->priority == best->header->priority && distance < best_distance)) {
      best = &c;
      best_distance = distance;
    }
  }
  if (best == nullptr) return std::nullopt;
  state.cursor = static_cast<PortId>((best->input_port + 1) % n);
  return best->input_port;
}

LockChange lock_handle(const PacketHeader& header, ArbiterState& state) {
  switch (header.lock_marker) {
    case LockMarker::None:
      return LockChange::None;
    case LockMarker::Acquire:
      if (state.lock_owner && *state.lock_owner != header.mst_addr) {
        throw Fault(FaultKind::LockProtocolViolation, "acquire by N" + std::to_string(header.mst_addr) +
                                                          " of a port locked by N" + std::to_string(*state.lock_owner));
      }
      if (state.lock_owner) return LockChange::None;
      state.lock_owner = header.mst_addr;
      return LockChange::Set;
    case LockMarker::Release:
      if (!state.lock_owner || *state.lock_owner != header.mst_addr) {
        throw Fault(FaultKind::LockProtocolViolation,
                    "release by N" + std::to_string(header.mst_addr) + " of a port it does not own");
      }
      state.lock_owner.reset();
      return LockChange::Cleared;
  }
  return LockChange::None;
}

// ---------------------------------------------------------------------------

Switch::Switch(SwitchId id, std::vector<PortWiring> wiring)
    : id_(id), wiring_(std::move(wiring)), in_(wiring_.size()), out_(wiring_.size()) {
  for (auto& lanes : out_) {
    for (auto& lane : lanes) lane.arb.num_inputs = static_cast<PortId>(wiring_.size());
  }
}

void Switch::accept(PortId port, Lane lane, Flit flit) {
  auto& il = in_[port][lane];
  if (flit.is_tail()) ++il.tails;
  il.fifo.push_back(std::move(flit));
}

void Switch::absorb(Cycle now, std::vector<LinkChannel>& channels) {
  for (PortId p = 0; p < ports(); ++p) {
    for (Lane lane : {kRequestLane, kResponseLane}) {
      const std::size_t ch = wiring_[p].in[lane];
      if (ch == kNoChannel) continue;
      while (auto f = channels[ch].receive(now)) accept(p, lane, std::move(*f));
    }
  }
}

bool Switch::idle() const {
  for (const auto& lanes : in_) {
    for (const auto& l : lanes) {
      if (!l.fifo.empty()) return false;
    }
  }
  return true;
}

void Switch::step(Cycle now, TransportMode mode, const RoutingTable& routes, std::vector<LinkChannel>& channels,
                  Trace* trace) {
  const PortId n = ports();
  // A crossbar input moves at most one flit per cycle.
  popped_.assign(std::size_t{n} * 2, false);
  for (Lane lane : {kRequestLane, kResponseLane}) {
    for (PortId o = 0; o < n; ++o) {
      const std::size_t out_ch = wiring_[o].out[lane];
      if (out_ch == kNoChannel) continue;
      OutputLane& ol = out_[o][lane];

      if (!ol.holder) {
        scratch_.clear();
        for (PortId i = 0; i < n; ++i) {
          InputLane& il = in_[i][lane];
          if (il.fifo.empty() || !il.fifo.front().is_head()) continue;
          if (!il.route) il.route = route(routes, id_, *il.fifo.front().header);
          if (*il.route != o) continue;
          if (mode == TransportMode::StoreAndForward && il.tails == 0) continue;
          scratch_.push_back(Candidate{i, &*il.fifo.front().header});
        }
        if (scratch_.empty()) continue;
        auto winner = arbitrate(scratch_, ol.arb);
        if (!winner) {
          ++lock_stalls_;
          continue;
        }
        ol.holder = *winner;
      }

      InputLane& il = in_[*ol.holder][lane];
      LinkChannel& ch = channels[out_ch];
      const std::size_t slot = std::size_t{*ol.holder} * 2 + lane;
      if (il.fifo.empty() || popped_[slot] || !ch.can_send(now)) continue;
      popped_[slot] = true;

      Flit flit = std::move(il.fifo.front());
      il.fifo.pop_front();
      const bool head = flit.is_head();
      const bool tail = flit.is_tail();
      LockChange change = LockChange::None;
      std::optional<PacketHeader> header;
      if (head) {
        header = flit.header;
        change = lock_handle(*header, ol.arb);
      }
      ch.send(std::move(flit), now);
      channels[wiring_[*ol.holder].in[lane]].return_credit(now);

      if (head && trace) {
        const Site site = Site::switch_port(id_, o);
        TraceEvent e{now, site, TraceKind::PktForwarded};
        e.master = header->mst_addr;
        e.tag = header->tag;
        e.opcode = header->opcode;
        if (header->kind == PacketKind::Response) e.status = header->status;
        e.address = header->slv_addr.offset;
        e.aux = ch.credits();
        trace->record(e);
        if (change != LockChange::None) {
          TraceEvent l{now, site, change == LockChange::Set ? TraceKind::LockSet : TraceKind::LockCleared};
          l.master = header->mst_addr;
          l.tag = header->tag;
          l.opcode = header->opcode;
          l.address = header->slv_addr.offset;
          trace->record(l);
        }
      }
      if (tail) {
        --il.tails;
        il.route.reset();
        ol.holder.reset();
      }
    }
  }
}

}  // namespace nocsim
