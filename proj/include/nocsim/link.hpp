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
 * @file link.hpp
 * @brief Physical layer: flit framing, link parameters and credit-based
 * channels.
 *
 * A link between two endpoints is modelled as four Channels: one per
 * direction and per buffer class (request / response). Each Channel owns the
 * credit counter of its sender and the flits currently on the wire.
 */

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "nocsim/packet.hpp"

namespace nocsim {

enum class FlitType : std::uint8_t { Head, Body, Tail, HeadTail };

struct Flit {
  FlitType type = FlitType::HeadTail;
  std::uint64_t packet_id = 0;
  std::optional<PacketHeader> header;  // Head and HeadTail only
  Bytes payload;                       // Body and Tail only

  bool is_head() const { return type == FlitType::Head || type == FlitType::HeadTail; }
  bool is_tail() const { return type == FlitType::Tail || type == FlitType::HeadTail; }
  bool operator==(const Flit&) const = default;
};

struct LinkParams {
  std::uint32_t flit_payload_width = 8;  // bytes per body flit
  std::uint32_t latency = 1;             // cycles on the wire
  std::uint32_t rate_ratio = 1;          // one flit every rate_ratio cycles

  bool valid() const { return flit_payload_width >= 1 && latency >= 1 && rate_ratio >= 1; }
  bool operator==(const LinkParams&) const = default;
};

/// 1 for an empty payload, otherwise 1 + ceil(payload_bytes / width).
std::size_t flit_count(std::size_t payload_bytes, std::uint32_t width);

std::vector<Flit> serialize(const Packet& packet, const LinkParams& params);

/// Throws Fault(FramingViolation) on malformed input.
Packet deserialize(std::span<const Flit> flits);

/// Sender-side credit counter for one buffer class of one link direction.
class CreditCounter {
 public:
  explicit CreditCounter(std::uint32_t depth) : depth_(depth), credits_(depth) {}

  bool can_send() const { return credits_ > 0; }
  /// Throws Fault(CreditAccounting) at zero.
  void consume();
  /// Throws Fault(CreditAccounting) beyond the initial depth.
  void give_back();

  std::uint32_t credits() const { return credits_; }
  std::uint32_t depth() const { return depth_; }

 private:
  std::uint32_t depth_;
  std::uint32_t credits_;
};

/// One direction of one buffer class of a link.
class LinkChannel {
 public:
  LinkChannel(LinkParams params, std::uint32_t depth) : params_(params), credits_(depth) {}

  /// Applies credit returns that have become visible by `now`.
  void settle(Cycle now);
  bool can_send(Cycle now) const;
  void send(Flit flit, Cycle now);
  /// Pops the next flit that has arrived by `now`, if any.
  std::optional<Flit> receive(Cycle now);
  /// Receiver drained one buffer slot; the credit reaches the sender after
  /// the link latency.
  void return_credit(Cycle now);

  bool idle() const { return wire_.empty() && returns_.empty(); }
  const LinkParams& params() const { return params_; }
  std::uint32_t credits() const { return credits_.credits(); }
  std::uint32_t depth() const { return credits_.depth(); }
  std::uint64_t flits_sent() const { return flits_sent_; }

 private:
  struct InFlight {
    Cycle arrival;
    Flit flit;
  };

  LinkParams params_;
  CreditCounter credits_;
  std::deque<InFlight> wire_;
  std::deque<Cycle> returns_;
  std::optional<Cycle> last_send_;
  std::uint64_t flits_sent_ = 0;
};

}  // namespace nocsim
