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

/**
 * @file fabric.hpp
 * @brief Transport layer: topology, static routing, arbitration, switches.
 *
 * Switches look at four header fields only: the destination NIU (SlvAddr
 * target for requests, MstAddr for responses), MstAddr, priority, and the
 * lock marker. Opcodes, tags, user bits and payload pass through untouched.
 */

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nocsim/link.hpp"
#include "nocsim/packet.hpp"

namespace nocsim {

class Trace;

using SwitchId = std::uint16_t;
using PortId = std::uint16_t;

struct PortRef {
  SwitchId sw = 0;
  PortId port = 0;
  auto operator<=>(const PortRef&) const = default;
};

struct SwitchDesc {
  SwitchId id = 0;
  PortId ports = 0;
};

/// Bidirectional switch-to-switch link.
struct LinkDesc {
  PortRef a;
  PortRef b;
  std::uint32_t depth = 16;  // receiver buffer depth in flits, per buffer class
  LinkParams params;
};

struct Attachment {
  PortRef at;
  std::uint32_t depth = 16;
  LinkParams params;
};

struct Topology {
  std::vector<SwitchDesc> switches;
  std::vector<LinkDesc> links;
  std::map<NiuId, Attachment> niu_attachments;

  const SwitchDesc* find_switch(SwitchId id) const;
  /// Empty when connected, ports in range and each port used at most once.
  std::vector<std::string> check() const;
};

enum class TransportMode : std::uint8_t { StoreAndForward, Wormhole };

std::string_view to_string(TransportMode mode);
std::optional<TransportMode> parse_mode(std::string_view text);

/// Destination NIU of a packet: SlvAddr target for requests, MstAddr for
/// responses.
NiuId destination(const PacketHeader& header);

class RoutingTable {
 public:
  void set(SwitchId sw, NiuId target, PortId port) { table_[sw][target] = port; }
  std::optional<PortId> lookup(SwitchId sw, NiuId target) const;

  /// Shortest-path routes toward every attached NIU; ties go to the lowest
  /// output port.
  static RoutingTable shortest_paths(const Topology& topo);

  /// Completeness and loop freedom for every (switch, NIU) pair. Messages
  /// name the offending target.
  std::vector<std::string> check(const Topology& topo) const;

  const std::map<SwitchId, std::map<NiuId, PortId>>& entries() const { return table_; }

 private:
  std::map<SwitchId, std::map<NiuId, PortId>> table_;
};

/// Throws Fault(UnroutablePacket) when the switch has no entry for the target.
PortId route(const RoutingTable& table, SwitchId sw, NiuId target);
PortId route(const RoutingTable& table, SwitchId sw, const PacketHeader& header);

struct ArbiterState {
  PortId num_inputs = 1;
  PortId cursor = 0;
  std::optional<NiuId> lock_owner;
};

struct Candidate {
  PortId input_port;
  const PacketHeader* header;
};

/// Lock gate, then highest priority, then round robin from the cursor. The
/// cursor moves past the winner. std::nullopt when the lock gate leaves no
/// eligible candidate.
std::optional<PortId> arbitrate(std::span<const Candidate> candidates, ArbiterState& state);

enum class LockChange { None, Set, Cleared };

/// Applied when a packet head traverses an output port. Throws
/// Fault(LockProtocolViolation) for a release by a non-owner or an acquire of
/// a port owned by someone else.
LockChange lock_handle(const PacketHeader& header, ArbiterState& state);

enum Lane : std::uint8_t { kRequestLane = 0, kResponseLane = 1 };
inline constexpr std::size_t kNoChannel = static_cast<std::size_t>(-1);

/// Channel indices wired to one switch port, per lane.
struct PortWiring {
  std::array<std::size_t, 2> in{kNoChannel, kNoChannel};
  std::array<std::size_t, 2> out{kNoChannel, kNoChannel};
};

class Switch {
 public:
  Switch(SwitchId id, std::vector<PortWiring> wiring);

  SwitchId id() const { return id_; }
  PortId ports() const { return static_cast<PortId>(wiring_.size()); }

  void accept(PortId port, Lane lane, Flit flit);
  /// Moves every flit that has arrived on an input channel into its buffer.
  void absorb(Cycle now, std::vector<LinkChannel>& channels);

  /// One cycle: per output lane, arbitrate among complete (store-and-forward)
  /// or head-ready (wormhole) packets, then move at most one flit of the
  /// granted packet if the downstream channel has a credit and a rate slot.
  void step(Cycle now, TransportMode mode, const RoutingTable& routes, std::vector<LinkChannel>& channels,
            Trace* trace);

  bool idle() const;
  const ArbiterState& arbiter(PortId port, Lane lane) const { return out_[port][lane].arb; }
  std::uint64_t lock_stalls() const { return lock_stalls_; }

 private:
  struct InputLane {
    std::deque<Flit> fifo;
    std::optional<PortId> route;  // of the packet at the head of the fifo
    std::size_t tails = 0;        // complete packets buffered
  };
  struct OutputLane {
    ArbiterState arb;
    std::optional<PortId> holder;  // input port currently granted
  };

  SwitchId id_;
  std::vector<PortWiring> wiring_;
  std::vector<std::array<InputLane, 2>> in_;
  std::vector<std::array<OutputLane, 2>> out_;
  std::vector<Candidate> scratch_;
  std::vector<bool> popped_;
  std::uint64_t lock_stalls_ = 0;
};

}  // namespace nocsim
