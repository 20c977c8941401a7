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

// Drives one Switch in isolation: a source per input lane pushes flits as
// credits allow, and a sink per output lane drains and returns credits at
// once. The log records every flit that leaves the switch.

#pragma once

#include <array>
#include <deque>
#include <string>
#include <vector>

#include "nocsim/fabric.hpp"
#include "nocsim/link.hpp"

namespace nocsim::testing {

struct Injection {
  PortId port = 0;
  Packet packet;
};

struct SwitchLogEntry {
  Cycle cycle;
  PortId out;
  Lane lane;
  std::uint64_t packet_id;
  FlitType type;
  bool operator==(const SwitchLogEntry&) const = default;
};

struct SwitchRun {
  std::vector<SwitchLogEntry> log;
  bool drained = false;
};

inline Lane lane_of(const Packet& p) { return p.header.kind == PacketKind::Request ? kRequestLane : kResponseLane; }

inline SwitchRun drive_switch(PortId ports, const RoutingTable& routes, const std::vector<Injection>& injections,
                              TransportMode mode, LinkParams params, std::uint32_t depth, Cycle max_cycles = 10000) {
  std::vector<LinkChannel> channels;
  std::vector<PortWiring> wiring(ports);
  for (PortId p = 0; p < ports; ++p) {
    for (Lane lane : {kRequestLane, kResponseLane}) {
      wiring[p].in[lane] = channels.size();
      channels.emplace_back(params, depth);
      wiring[p].out[lane] = channels.size();
      channels.emplace_back(params, depth);
    }
  }
  Switch sw(0, wiring);

  std::vector<std::array<std::deque<Flit>, 2>> sources(ports);
  for (const auto& inj : injections) {
    for (auto& f : serialize(inj.packet, params)) sources[inj.port][lane_of(inj.packet)].push_back(std::move(f));
  }

  SwitchRun run;
  for (Cycle now = 0; now < max_cycles; ++now) {
    for (auto& ch : channels) ch.settle(now);
    bool pending = false;
    for (PortId p = 0; p < ports; ++p) {
      for (Lane lane : {kRequestLane, kResponseLane}) {
        auto& q = sources[p][lane];
        auto& ch = channels[wiring[p].in[lane]];
        if (!q.empty() && ch.can_send(now)) {
          ch.send(std::move(q.front()), now);
          q.pop_front();
        }
        pending = pending || !q.empty();
      }
    }
    sw.absorb(now, channels);
    sw.step(now, mode, routes, channels, nullptr);
    for (PortId p = 0; p < ports; ++p) {
      for (Lane lane : {kRequestLane, kResponseLane}) {
        auto& ch = channels[wiring[p].out[lane]];
        while (auto f = ch.receive(now)) {
          run.log.push_back({now, p, lane, f->packet_id, f->type});
          ch.return_credit(now);
        }
      }
    }
    bool busy = pending || !sw.idle();
    for (const auto& ch : channels) busy = busy || !ch.idle();
    if (!busy) {
      run.drained = true;
      break;
    }
  }
  return run;
}

}  // namespace nocsim::testing
