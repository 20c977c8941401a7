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
 * @file transaction.hpp
 * @brief Socket-neutral transaction vocabulary.
 *
 * Every socket family (fully ordered, threaded, ID based) reduces its traffic
 * to TransactionRequest / TransactionResponse pairs. The ordering semantics a
 * socket expects are captured by SocketOrderKey; order_class() decides which
 * pairs of keys must have their responses returned in issue order.
 */

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nocsim {

using Address = std::uint32_t;
inline constexpr unsigned kAddressBits = 32;

using MasterId = std::uint16_t;
using Bytes = std::vector<std::uint8_t>;
using Cycle = std::uint64_t;

enum class Opcode : std::uint8_t {
  Load,
  Store,
  StorePosted,
  ReadEx,
  StoreLockedRelease,
  LoadExclusive,
  StoreExclusive,
};

inline constexpr Opcode kAllOpcodes[] = {
    Opcode::Load,   Opcode::Store,         Opcode::StorePosted,    Opcode::ReadEx,
    Opcode::StoreLockedRelease, Opcode::LoadExclusive, Opcode::StoreExclusive,
};

enum class Status : std::uint8_t { Okay, ExOkay, ExFail, ErrorDecode, ErrorSlave };

enum class Channel : std::uint8_t { Read, Write };

enum class SocketFamily : std::uint8_t { FullyOrdered, Threaded, IdBased };

enum class Endianness : std::uint8_t { Little, Big };

/// Byte order used inside the fabric and in target memories.
inline constexpr Endianness kFabricEndianness = Endianness::Little;

struct SingleKey {
  auto operator<=>(const SingleKey&) const = default;
};

struct ThreadKey {
  std::uint8_t thread_id = 0;
  auto operator<=>(const ThreadKey&) const = default;
};

struct TxnIdKey {
  std::uint8_t tid = 0;
  Channel channel = Channel::Read;
  auto operator<=>(const TxnIdKey&) const = default;
};

using SocketOrderKey = std::variant<SingleKey, ThreadKey, TxnIdKey>;

struct TransactionRequest {
  MasterId master_id = 0;
  Opcode opcode = Opcode::Load;
  Address address = 0;
  Bytes data;
  std::uint32_t burst_len = 1;
  std::uint32_t beat_size = 4;
  SocketOrderKey socket_order_key = SingleKey{};
  bool exclusive_flag = false;

  std::uint32_t byte_count() const { return burst_len * beat_size; }
  bool operator==(const TransactionRequest&) const = default;
};

struct TransactionResponse {
  MasterId master_id = 0;
  SocketOrderKey socket_order_key = SingleKey{};
  Status status = Status::Okay;
  Bytes data;

  bool operator==(const TransactionResponse&) const = default;
};

enum class OrderClass { SameStream, Independent };

/// False only for posted stores.
bool needs_response(Opcode opcode);

/// Opcodes that write target memory.
bool writes_memory(Opcode opcode);

/// Opcodes that return read data.
bool returns_data(Opcode opcode);

bool is_exclusive(Opcode opcode);

/// READ for opcodes that return data, WRITE otherwise.
Channel natural_channel(Opcode opcode);

/// Invariant violations of a request; empty means the request is well formed.
std::vector<std::string> validate_request(const TransactionRequest& req);

/// Throws Fault(HeterogeneousOrderKeys) when the keys come from different
/// socket families.
OrderClass order_class(const SocketOrderKey& a, const SocketOrderKey& b);

SocketFamily family_of(const SocketOrderKey& key);

/// Dense stream index used by per-stream tag policies:
/// Single -> 0, Thread(t) -> t, TxnId(t, c) -> 2t + c.
unsigned stream_index(const SocketOrderKey& key);

std::string_view to_string(Opcode op);
std::string_view to_string(Status status);
std::string_view to_string(SocketFamily family);
std::string_view to_string(Endianness e);
std::string to_string(const SocketOrderKey& key);

std::optional<Opcode> parse_opcode(std::string_view text);
std::optional<Status> parse_status(std::string_view text);
std::optional<SocketFamily> parse_family(std::string_view text);
std::optional<Endianness> parse_endianness(std::string_view text);
/// Accepts "single", "thread:<n>", "id:<n>:read|write".
std::optional<SocketOrderKey> parse_key(std::string_view text);

}  // namespace nocsim
