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

#include "nocsim/link.hpp"

#include <algorithm>

#include "nocsim/error.hpp"

namespace nocsim {

std::string_view to_string(LockMarker marker) {
  switch (marker) {
    case LockMarker::None: return "NONE";
    case LockMarker::Acquire: return "LOCK_ACQUIRE";
    case LockMarker::Release: return "LOCK_RELEASE";
  }
  return "?";
}

std::size_t flit_count(std::size_t payload_bytes, std::uint32_t width) {
  if (payload_bytes == 0) return 1;
  return 1 + (payload_bytes + width - 1) / width;
}

std::vector<Flit> serialize(const Packet& packet, const LinkParams& params) {
  std::vector<Flit> flits;
  const std::uint64_t id = packet.header.packet_id;
  const auto& payload = packet.payload;
  flits.reserve(flit_count(payload.size(), params.flit_payload_width));

  if (payload.empty()) {
    flits.push_back(Flit{FlitType::HeadTail, id, packet.header, {}});
    return flits;
  }
  flits.push_back(Flit{FlitType::Head, id, packet.header, {}});
  for (std::size_t pos = 0; pos < payload.size(); pos += params.flit_payload_width) {
    const std::size_t end = std::min<std::size_t>(payload.size(), pos + params.flit_payload_width);
    const FlitType type = end == payload.size() ? FlitType::Tail : FlitType::Body;
    flits.push_back(Flit{type, id, std::nullopt, Bytes(payload.begin() + pos, payload.begin() + end)});
  }
  return flits;
}

Packet deserialize(std::span<const Flit> flits) {
  if (flits.empty()) throw Fault(FaultKind::FramingViolation, "empty flit sequence");
  const Flit& head = flits.front();
  if (!head.is_head() || !head.header) throw Fault(FaultKind::FramingViolation, "sequence does not start with a head flit");

  Packet packet{*head.header, {}};
  if (head.type == FlitType::HeadTail) {
    if (flits.size() != 1) throw Fault(FaultKind::FramingViolation, "flits after a head-tail flit");
    return packet;
  }

  for (std::size_t i = 1; i < flits.size(); ++i) {
    const Flit& f = flits[i];
    if (f.is_head()) throw Fault(FaultKind::FramingViolation, "head flit inside a packet");
    if (f.packet_id != head.packet_id) throw Fault(FaultKind::FramingViolation, "foreign flit interleaved");
    const bool last = i + 1 == flits.size();
    if (f.type == FlitType::Tail && !last) throw Fault(FaultKind::FramingViolation, "flits after tail");
    packet.payload.insert(packet.payload.end(), f.payload.begin(), f.payload.end());
  }
  if (flits.back().type != FlitType::Tail) throw Fault(FaultKind::FramingViolation, "missing tail flit");
  return packet;
}

void CreditCounter::consume() {
  if (credits_ == 0) throw Fault(FaultKind::CreditAccounting, "consume with zero credits");
  --credits_;
}

void CreditCounter::give_back() {
  if (credits_ >= depth_) throw Fault(FaultKind::CreditAccounting, "credit returned beyond buffer depth");
  ++credits_;
}

void LinkChannel::settle(Cycle now) {
  while (!returns_.empty() && returns_.front() <= now) {
    credits_.give_back();
    returns_.pop_front();
  }
}

bool LinkChannel::can_send(Cycle now) const {
  if (!credits_.can_send()) return false;
  return !last_send_ || now >= *last_send_ + params_.rate_ratio;
}

void LinkChannel::send(Flit flit, Cycle now) {
  credits_.consume();
  last_send_ = now;
  ++flits_sent_;
  wire_.push_back(InFlight{now + params_.latency, std::move(flit)});
}

std::optional<Flit> LinkChannel::receive(Cycle now) {
  if (wire_.empty() || wire_.front().arrival > now) return std::nullopt;
  Flit flit = std::move(wire_.front().flit);
  wire_.pop_front();
  return flit;
}

void LinkChannel::return_credit(Cycle now) { returns_.push_back(now + params_.latency); }

}  // namespace nocsim
