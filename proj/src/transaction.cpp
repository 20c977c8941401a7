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

#include "nocsim/transaction.hpp"

#include <bit>
#include <charconv>

#include "nocsim/error.hpp"

namespace nocsim {

const char* to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::HeterogeneousOrderKeys: return "heterogeneous order keys";
    case FaultKind::OrphanResponse: return "orphan response";
    case FaultKind::FramingViolation: return "framing violation";
    case FaultKind::LockProtocolViolation: return "lock protocol violation";
    case FaultKind::CreditAccounting: return "credit accounting";
    case FaultKind::RaggedBeat: return "ragged beat";
    case FaultKind::UnroutablePacket: return "unroutable packet";
    case FaultKind::InvalidRequest: return "invalid request";
  }
  return "fault";
}

bool needs_response(Opcode opcode) { return opcode != Opcode::StorePosted; }

bool writes_memory(Opcode opcode) {
  switch (opcode) {
    case Opcode::Store:
    case Opcode::StorePosted:
    case Opcode::StoreLockedRelease:
    case Opcode::StoreExclusive:
      return true;
    default:
      return false;
  }
}

bool returns_data(Opcode opcode) { return !writes_memory(opcode); }

bool is_exclusive(Opcode opcode) {
  return opcode == Opcode::LoadExclusive || opcode == Opcode::StoreExclusive;
}

Channel natural_channel(Opcode opcode) {
  return returns_data(opcode) ? Channel::Read : Channel::Write;
}

std::vector<std::string> validate_request(const TransactionRequest& req) {
  std::vector<std::string> violations;
  if (req.burst_len == 0) violations.emplace_back("burst length zero");
  if (req.beat_size == 0 || !std::has_single_bit(req.beat_size)) {
    violations.emplace_back("beat size not a power of two");
  } else if (req.address % req.beat_size != 0) {
    violations.emplace_back("address misaligned");
  }

  const std::uint64_t expected =
      writes_memory(req.opcode) ? std::uint64_t{req.burst_len} * req.beat_size : 0;
  if (req.data.size() != expected) violations.emplace_back("data length mismatch");

  const std::uint64_t end = std::uint64_t{req.address} + std::uint64_t{req.burst_len} * req.beat_size;
  if (end > (std::uint64_t{1} << kAddressBits)) violations.emplace_back("address range overflow");

  if (req.exclusive_flag != is_exclusive(req.opcode)) {
    violations.emplace_back("exclusive flag inconsistent");
  }
  if (const auto* id = std::get_if<TxnIdKey>(&req.socket_order_key)) {
    if (id->channel != natural_channel(req.opcode)) violations.emplace_back("order key channel mismatch");
  }
  return violations;
}

SocketFamily family_of(const SocketOrderKey& key) {
  switch (key.index()) {
    case 0: return SocketFamily::FullyOrdered;
    case 1: return SocketFamily::Threaded;
    default: return SocketFamily::IdBased;
  }
}

OrderClass order_class(const SocketOrderKey& a, const SocketOrderKey& b) {
  if (a.index() != b.index()) {
    throw Fault(FaultKind::HeterogeneousOrderKeys, to_string(a) + " vs " + to_string(b));
  }
  // Within one family the key value identifies the stream exactly.
  return a == b ? OrderClass::SameStream : OrderClass::Independent;
}

unsigned stream_index(const SocketOrderKey& key) {
  return std::visit(
      [](const auto& k) -> unsigned {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, SingleKey>) {
          return 0;
        } else if constexpr (std::is_same_v<K, ThreadKey>) {
          return k.thread_id;
        } else {
          return 2u * k.tid + (k.channel == Channel::Write ? 1u : 0u);
        }
      },
      key);
}

std::string_view to_string(Opcode op) {
  switch (op) {
    case Opcode::Load: return "LOAD";
    case Opcode::Store: return "STORE";
    case Opcode::StorePosted: return "STORE_POSTED";
    case Opcode::ReadEx: return "READEX";
    case Opcode::StoreLockedRelease: return "STORE_LOCKED_RELEASE";
    case Opcode::LoadExclusive: return "LOAD_EXCLUSIVE";
    case Opcode::StoreExclusive: return "STORE_EXCLUSIVE";
  }
  return "?";
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Okay: return "OKAY";
    case Status::ExOkay: return "EXOKAY";
    case Status::ExFail: return "EXFAIL";
    case Status::ErrorDecode: return "ERROR_DECODE";
    case Status::ErrorSlave: return "ERROR_SLAVE";
  }
  return "?";
}

std::string_view to_string(SocketFamily family) {
  switch (family) {
    case SocketFamily::FullyOrdered: return "ordered";
    case SocketFamily::Threaded: return "threaded";
    case SocketFamily::IdBased: return "id";
  }
  return "?";
}

std::string_view to_string(Endianness e) { return e == Endianness::Little ? "little" : "big"; }

std::string to_string(const SocketOrderKey& key) {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, SingleKey>) {
          return "single";
        } else if constexpr (std::is_same_v<K, ThreadKey>) {
          return "thread:" + std::to_string(k.thread_id);
        } else {
          return "id:" + std::to_string(k.tid) + (k.channel == Channel::Read ? ":read" : ":write");
        }
      },
      key);
}

std::optional<Opcode> parse_opcode(std::string_view text) {
  for (Opcode op : kAllOpcodes) {
    if (to_string(op) == text) return op;
  }
  return std::nullopt;
}

std::optional<Status> parse_status(std::string_view text) {
  for (Status s : {Status::Okay, Status::ExOkay, Status::ExFail, Status::ErrorDecode, Status::ErrorSlave}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<SocketFamily> parse_family(std::string_view text) {
  for (SocketFamily f : {SocketFamily::FullyOrdered, SocketFamily::Threaded, SocketFamily::IdBased}) {
    if (to_string(f) == text) return f;
  }
  return std::nullopt;
}

std::optional<Endianness> parse_endianness(std::string_view text) {
  if (text == "little") return Endianness::Little;
  if (text == "big") return Endianness::Big;
  return std::nullopt;
}

namespace {

std::optional<std::uint8_t> parse_small(std::string_view text) {
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value > 255) return std::nullopt;
  return static_cast<std::uint8_t>(value);
}

}  // namespace

std::optional<SocketOrderKey> parse_key(std::string_view text) {
  if (text == "single") return SingleKey{};
  if (text.starts_with("thread:")) {
    auto id = parse_small(text.substr(7));
    if (!id) return std::nullopt;
    return ThreadKey{*id};
  }
  if (text.starts_with("id:")) {
    auto rest = text.substr(3);
    auto colon = rest.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto tid = parse_small(rest.substr(0, colon));
    auto chan = rest.substr(colon + 1);
    if (!tid) return std::nullopt;
    if (chan == "read") return TxnIdKey{*tid, Channel::Read};
    if (chan == "write") return TxnIdKey{*tid, Channel::Write};
  }
  return std::nullopt;
}

}  // namespace nocsim
