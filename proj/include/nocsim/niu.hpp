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
 * @file niu.hpp
 * @brief Network Interface Units.
 *
 * An initiator NIU turns socket transactions into request packets and
 * reassembles response packets: it decodes the address into a SlvAddr,
 * allocates a Tag under the configured policy, chops bursts, converts byte
 * order and records the transaction in its pending table. Responses are
 * matched by (MstAddr, Tag) and released to the socket in the order its
 * family demands.
 *
 * A target NIU executes request packets against a memory and keeps the
 * exclusive-access monitors. Everything a socket feature needs is either
 * state kept here or a bit in the packet; switches never see it.
 */

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "nocsim/packet.hpp"
#include "nocsim/transaction.hpp"

namespace nocsim {

// ---------------------------------------------------------------------------
// Byte order

/// Per-beat byte-lane reversal when the two byte orders differ. Throws
/// Fault(RaggedBeat) if data does not divide into whole beats.
Bytes endianness_convert(std::span<const std::uint8_t> data, std::uint32_t beat_size, Endianness from,
                         Endianness to);

// ---------------------------------------------------------------------------
// Address map

struct AddressRegion {
  Address base = 0;
  std::uint32_t size = 0;
  NiuId target = 0;
};

struct DecodedAddress {
  NiuId target = 0;
  Address offset = 0;
  bool operator==(const DecodedAddress&) const = default;
};

class AddressMap {
 public:
  AddressMap() = default;
  /// Throws std::invalid_argument on overlapping or empty regions.
  explicit AddressMap(std::vector<AddressRegion> regions);

  const std::vector<AddressRegion>& regions() const { return regions_; }
  const AddressRegion* region_of(NiuId target) const;

 private:
  std::vector<AddressRegion> regions_;  // sorted by base
};

/// std::nullopt is a decode miss.
std::optional<DecodedAddress> address_decode(Address address, const AddressMap& map);

// ---------------------------------------------------------------------------
// Tag policies and the pending-transaction table

struct TagPolicy {
  enum class Kind : std::uint8_t { SingleOutstanding, PerStream, Pooled };
  Kind kind = Kind::SingleOutstanding;
  std::uint32_t count = 1;  // streams for PerStream, capacity for Pooled

  static TagPolicy single_outstanding() { return {Kind::SingleOutstanding, 1}; }
  static TagPolicy per_stream(std::uint32_t streams) { return {Kind::PerStream, streams}; }
  static TagPolicy pooled(std::uint32_t capacity) { return {Kind::Pooled, capacity}; }

  std::uint32_t capacity() const { return kind == Kind::SingleOutstanding ? 1 : count; }
  bool operator==(const TagPolicy&) const = default;
};

std::string_view to_string(TagPolicy::Kind kind);

struct PendingTransaction {
  std::uint64_t txn = 0;  // per-master issue sequence number
  TransactionRequest request;
  NiuId target = 0;
  Cycle issue_cycle = 0;
  std::uint32_t fragments = 1;
  std::uint32_t fragment_bytes = 0;
  std::uint32_t received = 0;
  Status status = Status::Okay;
  Bytes data;  // read data in fabric byte order
};

/// Tag -> live transactions. A tag slot usually holds one transaction; under
/// PerStream a stream may pipeline several transactions to one target behind
/// the same tag, matched in FIFO order.
class PendingTable {
 public:
  explicit PendingTable(std::uint32_t capacity) : capacity_(capacity) {}

  std::uint32_t capacity() const { return capacity_; }
  std::size_t live_tags() const { return slots_.size(); }
  std::size_t outstanding() const;
  bool empty() const { return slots_.empty(); }
  bool is_live(Tag tag) const { return slots_.contains(tag); }

  /// Appends a transaction to a tag slot.
  PendingTransaction& open(Tag tag, PendingTransaction entry);
  const std::deque<PendingTransaction>* slot(Tag tag) const;
  PendingTransaction* oldest(Tag tag);
  PendingTransaction* newest(Tag tag);
  void close_oldest(Tag tag);

  const std::map<Tag, std::deque<PendingTransaction>>& slots() const { return slots_; }

 private:
  std::uint32_t capacity_;
  std::map<Tag, std::deque<PendingTransaction>> slots_;
};

/// Picks a tag for a new transaction and records a placeholder entry for it
/// in `pending`; std::nullopt means STALL. `target` is the decoded target NIU,
/// needed by the PerStream same-target rule.
std::optional<Tag> assign_tag(const TagPolicy& policy, const SocketOrderKey& key, NiuId target,
                              PendingTable& pending);

// ---------------------------------------------------------------------------
// Response release ordering

/// Holds completed responses until every older transaction of the same stream
/// has been emitted. Posted stores are never registered.
class ResponseReleaser {
 public:
  struct Released {
    std::uint64_t txn;
    TransactionResponse response;
  };

  void issue(std::uint64_t txn, const SocketOrderKey& key);
  std::vector<Released> complete(std::uint64_t txn, TransactionResponse response);
  std::size_t held() const;
  bool empty() const { return key_of_.empty(); }

 private:
  struct Stream {
    std::deque<std::uint64_t> order;
    std::map<std::uint64_t, TransactionResponse> done;
  };
  std::map<SocketOrderKey, Stream> streams_;
  std::map<std::uint64_t, SocketOrderKey> key_of_;
};

struct IssuedTxn {
  std::uint64_t txn;
  SocketOrderKey key;
};

/// Emission order of responses for one initiator, given the issue history and
/// the order in which responses became complete.
std::vector<std::uint64_t> response_release_order(std::span<const IssuedTxn> issued,
                                                  std::span<const std::uint64_t> completion_order);

// ---------------------------------------------------------------------------
// Initiator NIU

struct InitiatorConfig {
  NiuId id = 0;
  SocketFamily family = SocketFamily::FullyOrdered;
  TagPolicy policy;
  std::uint32_t max_payload = 32;
  Endianness endianness = Endianness::Little;
  std::uint8_t priority = 0;
  std::uint32_t tag_bits = 4;
};

struct InitiatorState {
  explicit InitiatorState(const InitiatorConfig& cfg) : pending(cfg.policy.capacity()) {}

  PendingTable pending;
  ResponseReleaser releaser;
  /// Target whose path this initiator currently holds locked.
  std::optional<NiuId> open_lock;
};

struct IngressStall {};

/// Transaction finished inside the initiator without touching the fabric
/// (decode miss, unsupported atomic size, release without a lock).
struct LocalCompletion {
  TransactionResponse response;
  bool surfaced = true;  // false for posted stores
};

using IngressResult = std::variant<std::vector<Packet>, IngressStall, LocalCompletion>;

/// Request packets for `req`. Packet ids are drawn from `next_packet_id`.
/// Throws Fault(InvalidRequest) for malformed requests or keys of the wrong
/// socket family.
IngressResult ingress_pack(const TransactionRequest& req, const InitiatorConfig& cfg, const AddressMap& map,
                           InitiatorState& state, std::uint64_t txn, Cycle now,
                           std::uint64_t& next_packet_id);

struct Completion {
  std::uint64_t txn = 0;
  Opcode opcode = Opcode::Load;
  Address address = 0;
  Cycle issue_cycle = 0;
  TransactionResponse response;

  bool surfaced() const { return needs_response(opcode); }
};

/// Accumulates one response fragment. std::nullopt means INCOMPLETE.
/// Throws Fault(OrphanResponse) when no live transaction owns the tag.
std::optional<Completion> egress_unpack(const Packet& response, PendingTable& pending,
                                        Endianness socket_endianness);

// ---------------------------------------------------------------------------
// Exclusive monitors

struct MonitorEntry {
  Address granule_base = 0;
  bool armed = false;
  bool operator==(const MonitorEntry&) const = default;
};

struct ExclusiveLoadEvent {
  MasterId master;
  Address address;
};

/// A store that updated memory. `exclusive` marks a successful exclusive store.
struct StoreEvent {
  MasterId master;
  Address address;
  std::uint32_t length = 1;
  bool exclusive = false;
};

struct StoreExclusiveFailedEvent {
  MasterId master;
};

using MonitorEvent = std::variant<ExclusiveLoadEvent, StoreEvent, StoreExclusiveFailedEvent>;

class ExclusiveMonitorSet {
 public:
  explicit ExclusiveMonitorSet(std::uint32_t granule = 8) : granule_(granule) {}

  /// Applies an event; returns the masters whose armed monitor was cleared.
  std::vector<MasterId> apply(const MonitorEvent& event);

  bool armed(MasterId master, Address address) const;
  std::optional<MonitorEntry> entry(MasterId master) const;
  std::uint32_t granule() const { return granule_; }
  Address granule_of(Address address) const { return address & ~(granule_ - 1); }
  const std::map<MasterId, MonitorEntry>& monitors() const { return monitors_; }

 private:
  std::uint32_t granule_;
  std::map<MasterId, MonitorEntry> monitors_;
};

ExclusiveMonitorSet exclusive_monitor_update(const MonitorEvent& event, ExclusiveMonitorSet monitors);

// ---------------------------------------------------------------------------
// Target NIU

struct TargetConfig {
  NiuId id = 0;
  Address base = 0;
  std::uint32_t size = 0x1000;         // span of the address map region
  std::uint32_t memory_size = 0x1000;  // backing bytes; offsets beyond it are slave errors
  std::uint32_t granule = 8;
  std::uint32_t service_cycles = 1;
};

class TargetMemory {
 public:
  explicit TargetMemory(std::uint32_t size, std::uint8_t fill = 0) : bytes_(size, fill) {}

  bool contains(Address offset, std::uint32_t length) const {
    return std::uint64_t{offset} + length <= bytes_.size();
  }
  Bytes read(Address offset, std::uint32_t length) const;
  void write(Address offset, std::span<const std::uint8_t> data);
  const Bytes& bytes() const { return bytes_; }
  Bytes& bytes() { return bytes_; }

 private:
  Bytes bytes_;
};

struct MonitorNote {
  bool armed = false;  // false: cleared
  MasterId master = 0;
  Address granule = 0;
};

/// Executes a request packet and builds its response packet. The response
/// mirrors (slv_addr, mst_addr, tag, fragment fields, priority); its
/// packet_id is left for the caller to assign.
Packet target_handle(const Packet& request, TargetMemory& memory, ExclusiveMonitorSet& monitors,
                     std::vector<MonitorNote>* notes = nullptr);

}  // namespace nocsim
