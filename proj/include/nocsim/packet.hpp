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

#pragma once

#include <bitset>
#include <cstdint>

#include "nocsim/transaction.hpp"

namespace nocsim {

using NiuId = std::uint16_t;
using Tag = std::uint8_t;

enum class PacketKind : std::uint8_t { Request, Response };

enum class LockMarker : std::uint8_t { None, Acquire, Release };

inline constexpr unsigned kUserBits = 8;
/// User bit 0 marks exclusive-access requests and exclusive responses.
inline constexpr unsigned kExclusiveUserBit = 0;

/// Destination of a packet: the target NIU plus the byte offset inside it.
struct SlvAddr {
  NiuId target = 0;
  Address offset = 0;
  bool operator==(const SlvAddr&) const = default;
};

/// Transport header. Switches read only slv_addr.target, mst_addr, priority
/// and lock_marker; everything else is carried opaquely.
struct PacketHeader {
  SlvAddr slv_addr;
  NiuId mst_addr = 0;
  Tag tag = 0;
  PacketKind kind = PacketKind::Request;
  Opcode opcode = Opcode::Load;  // mirrored into responses
  Status status = Status::Okay;  // meaningful for responses only
  std::uint8_t priority = 0;
  std::bitset<kUserBits> user_bits;
  LockMarker lock_marker = LockMarker::None;
  /// Bytes covered by this packet: carried bytes for writes and read data,
  /// requested bytes for read requests.
  std::uint32_t payload_len = 0;
  std::uint16_t frag_index = 0;
  bool frag_last = true;
  std::uint64_t packet_id = 0;  // simulator bookkeeping, unique per run

  bool operator==(const PacketHeader&) const = default;
};

struct Packet {
  PacketHeader header;
  Bytes payload;

  bool operator==(const Packet&) const = default;
};

std::string_view to_string(LockMarker marker);

}  // namespace nocsim
