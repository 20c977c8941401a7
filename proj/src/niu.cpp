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

#include "nocsim/niu.hpp"

#include <algorithm>
#include <stdexcept>

#include "nocsim/error.hpp"

namespace nocsim {

Bytes endianness_convert(std::span<const std::uint8_t> data, std::uint32_t beat_size, Endianness from,
                         Endianness to) {
  if (beat_size == 0 || data.size() % beat_size != 0) {
    throw Fault(FaultKind::RaggedBeat,
                std::to_string(data.size()) + " bytes do not split into beats of " + std::to_string(beat_size));
  }
  Bytes out(data.begin(), data.end());
  if (from == to) return out;
  for (auto it = out.begin(); it != out.end(); it += beat_size) std::reverse(it, it + beat_size);
  return out;
}

// ---------------------------------------------------------------------------

AddressMap::AddressMap(std::vector<AddressRegion> regions) : regions_(std::move(regions)) {
  std::sort(regions_.begin(), regions_.end(),
            [](const AddressRegion& a, const AddressRegion& b) { return a.base < b.base; });
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto& r = regions_[i];
    if (r.size == 0) throw std::invalid_argument("empty address region");
    const std::uint64_t end = std::uint64_t{r.base} + r.size;
    if (end > (std::uint64_t{1} << kAddressBits)) throw std::invalid_argument("address region exceeds address space");
    if (i + 1 < regions_.size() && end > regions_[i + 1].base) {
      throw std::invalid_argument("overlapping address regions");
    }
  }
}

const AddressRegion* AddressMap::region_of(NiuId target) const {
  for (const auto& r : regions_) {
    if (r.target == target) return &r;
  }
  return nullptr;
}

std::optional<DecodedAddress> address_decode(Address address, const AddressMap& map) {
  const auto& regions = map.regions();
  auto it = std::upper_bound(regions.begin(), regions.end(), address,
                             [](Address a, const AddressRegion& r) { return a < r.base; });
  if (it == regions.begin()) return std::nullopt;
  --it;
  if (std::uint64_t{address} >= std::uint64_t{it->base} + it->size) return std::nullopt;
  return DecodedAddress{it->target, address - it->base};
}

// ---------------------------------------------------------------------------

std::string_view to_string(TagPolicy::Kind kind) {
  switch (kind) {
    case TagPolicy::Kind::SingleOutstanding: return "single";
    case TagPolicy::Kind::PerStream: return "per_stream";
    case TagPolicy::Kind::Pooled: return "pooled";
  }
  return "?";
}

std::size_t PendingTable::outstanding() const {
  std::size_t n = 0;
  for (const auto& [tag, q] : slots_) n += q.size();
  return n;
}

PendingTransaction& PendingTable::open(Tag tag, PendingTransaction entry) {
  auto& q = slots_[tag];
  q.push_back(std::move(entry));
  return q.back();
}

const std::deque<PendingTransaction>* PendingTable::slot(Tag tag) const {
  auto it = slots_.find(tag);
  return it == slots_.end() ? nullptr : &it->second;
}

PendingTransaction* PendingTable::oldest(Tag tag) {
  auto it = slots_.find(tag);
  return it == slots_.end() ? nullptr : &it->second.front();
}

PendingTransaction* PendingTable::newest(Tag tag) {
  auto it = slots_.find(tag);
  return it == slots_.end() ? nullptr : &it->second.back();
}

void PendingTable::close_oldest(Tag tag) {
  auto it = slots_.find(tag);
  if (it == slots_.end()) return;
  it->second.pop_front();
  if (it->second.empty()) slots_.erase(it);
}

std::optional<Tag> assign_tag(const TagPolicy& policy, const SocketOrderKey& key, NiuId target,
                              PendingTable& pending) {
  std::optional<Tag> tag;
  switch (policy.kind) {
    case TagPolicy::Kind::SingleOutstanding:
      if (pending.empty()) tag = 0;
      break;
    case TagPolicy::Kind::PerStream: {
      const unsigned stream = stream_index(key);
      if (stream >= policy.count) {
        throw Fault(FaultKind::InvalidRequest,
                    "stream " + to_string(key) + " outside the " + std::to_string(policy.count) + " configured streams");
      }
      const auto* live = pending.slot(static_cast<Tag>(stream));
      const bool same_target =
          live && std::all_of(live->begin(), live->end(), [&](const PendingTransaction& p) { return p.target == target; });
      if (!live || same_target) tag = static_cast<Tag>(stream);
      break;
    }
    case TagPolicy::Kind::Pooled:
      for (std::uint32_t t = 0; t < policy.count; ++t) {
        if (!pending.is_live(static_cast<Tag>(t))) {
          tag = static_cast<Tag>(t);
          break;
        }
      }
      break;
  }
  if (tag) {
    PendingTransaction placeholder;
    placeholder.request.socket_order_key = key;
    placeholder.target = target;
    pending.open(*tag, std::move(placeholder));
  }
  return tag;
}

// ---------------------------------------------------------------------------

void ResponseReleaser::issue(std::uint64_t txn, const SocketOrderKey& key) {
  streams_[key].order.push_back(txn);
  key_of_.emplace(txn, key);
}

std::vector<ResponseReleaser::Released> ResponseReleaser::complete(std::uint64_t txn, TransactionResponse response) {
  auto kit = key_of_.find(txn);
  if (kit == key_of_.end()) {
    throw Fault(FaultKind::OrphanResponse, "completion for unissued transaction " + std::to_string(txn));
  }
  auto sit = streams_.find(kit->second);
  Stream& stream = sit->second;
  stream.done.emplace(txn, std::move(response));

  std::vector<Released> out;
  while (!stream.order.empty()) {
    auto done = stream.done.find(stream.order.front());
    if (done == stream.done.end()) break;
    out.push_back(Released{done->first, std::move(done->second)});
    key_of_.erase(done->first);
    stream.done.erase(done);
    stream.order.pop_front();
  }
  if (stream.order.empty()) streams_.erase(sit);
  return out;
}

std::size_t ResponseReleaser::held() const {
  std::size_t n = 0;
  for (const auto& [key, s] : streams_) n += s.done.size();
  return n;
}

std::vector<std::uint64_t> response_release_order(std::span<const IssuedTxn> issued,
                                                  std::span<const std::uint64_t> completion_order) {
  ResponseReleaser releaser;
  for (const auto& i : issued) releaser.issue(i.txn, i.key);
  std::vector<std::uint64_t> emitted;
  emitted.reserve(completion_order.size());
  for (std::uint64_t txn : completion_order) {
    for (auto& r : releaser.complete(txn, TransactionResponse{})) emitted.push_back(r.txn);
  }
  return emitted;
}

// ---------------------------------------------------------------------------

namespace {

bool is_atomic(Opcode op) {
  return op == Opcode::ReadEx || op == Opcode::StoreLockedRelease || is_exclusive(op);
}

LocalCompletion local_error(const TransactionRequest& req, Status status) {
  TransactionResponse resp;
  resp.master_id = req.master_id;
  resp.socket_order_key = req.socket_order_key;
  resp.status = status;
  if (returns_data(req.opcode)) resp.data.assign(req.byte_count(), 0);
  return LocalCompletion{std::move(resp), needs_response(req.opcode)};
}

}  // namespace

IngressResult ingress_pack(const TransactionRequest& req, const InitiatorConfig& cfg, const AddressMap& map,
                           InitiatorState& state, std::uint64_t txn, Cycle now,
                           std::uint64_t& next_packet_id) {
  if (auto v = validate_request(req); !v.empty()) throw Fault(FaultKind::InvalidRequest, v.front());
  if (family_of(req.socket_order_key) != cfg.family) {
    throw Fault(FaultKind::InvalidRequest,
                "key " + to_string(req.socket_order_key) + " on a " + std::string(to_string(cfg.family)) + " socket");
  }

  const std::uint32_t total = req.byte_count();
  auto decoded = address_decode(req.address, map);
  if (decoded) {
    const AddressRegion* region = map.region_of(decoded->target);
    if (std::uint64_t{decoded->offset} + total > region->size) decoded.reset();
  }
  if (!decoded) return local_error(req, Status::ErrorDecode);

  if (is_atomic(req.opcode) && total > cfg.max_payload) return local_error(req, Status::ErrorSlave);
  if (req.opcode == Opcode::ReadEx && state.open_lock) {
    throw Fault(FaultKind::InvalidRequest, "READEX issued while a lock is held");
  }
  if (req.opcode == Opcode::StoreLockedRelease) {
    if (!state.open_lock) return local_error(req, Status::ErrorSlave);
    if (*state.open_lock != decoded->target) {
      throw Fault(FaultKind::InvalidRequest, "lock release aimed at a different target than its READEX");
    }
  }

  auto tag = assign_tag(cfg.policy, req.socket_order_key, decoded->target, state.pending);
  if (!tag) return IngressStall{};

  const std::uint32_t fragment =
      std::max(req.beat_size, cfg.max_payload / req.beat_size * req.beat_size);
  const std::uint32_t fragments = (total + fragment - 1) / fragment;

  PendingTransaction& entry = *state.pending.newest(*tag);
  entry.txn = txn;
  entry.request = req;
  entry.issue_cycle = now;
  entry.fragments = fragments;
  entry.fragment_bytes = fragment;
  if (returns_data(req.opcode)) entry.data.assign(total, 0);

  Bytes fabric_data;
  if (writes_memory(req.opcode)) {
    fabric_data = endianness_convert(req.data, req.beat_size, cfg.endianness, kFabricEndianness);
  }

  LockMarker marker = LockMarker::None;
  if (req.opcode == Opcode::ReadEx) marker = LockMarker::Acquire;
  if (req.opcode == Opcode::StoreLockedRelease) marker = LockMarker::Release;

  std::vector<Packet> packets;
  packets.reserve(fragments);
  for (std::uint32_t i = 0; i < fragments; ++i) {
    const std::uint32_t begin = i * fragment;
    const std::uint32_t len = std::min(fragment, total - begin);
    Packet p;
    auto& h = p.header;
    h.slv_addr = SlvAddr{decoded->target, decoded->offset + begin};
    h.mst_addr = cfg.id;
    h.tag = *tag;
    h.kind = PacketKind::Request;
    h.opcode = req.opcode;
    h.priority = cfg.priority;
    h.user_bits.set(kExclusiveUserBit, req.exclusive_flag);
    h.lock_marker = marker;
    h.payload_len = len;
    h.frag_index = static_cast<std::uint16_t>(i);
    h.frag_last = i + 1 == fragments;
    h.packet_id = next_packet_id++;
    if (!fabric_data.empty()) p.payload.assign(fabric_data.begin() + begin, fabric_data.begin() + begin + len);
    packets.push_back(std::move(p));
  }

  if (req.opcode == Opcode::ReadEx) state.open_lock = decoded->target;
  if (req.opcode == Opcode::StoreLockedRelease) state.open_lock.reset();
  return packets;
}

std::optional<Completion> egress_unpack(const Packet& response, PendingTable& pending,
                                        Endianness socket_endianness) {
  const auto& h = response.header;
  PendingTransaction* entry = pending.oldest(h.tag);
  if (h.kind != PacketKind::Response || entry == nullptr) {
    throw Fault(FaultKind::OrphanResponse,
                "mst " + std::to_string(h.mst_addr) + " tag " + std::to_string(h.tag) + " has no live transaction");
  }

  if (!response.payload.empty()) {
    const std::size_t at = std::size_t{h.frag_index} * entry->fragment_bytes;
    const std::size_t n = std::min(response.payload.size(), entry->data.size() - std::min(at, entry->data.size()));
    std::copy_n(response.payload.begin(), n, entry->data.begin() + at);
  }
  if (h.status != Status::Okay && entry->status == Status::Okay) entry->status = h.status;
  if (++entry->received < entry->fragments) return std::nullopt;

  Completion done;
  done.txn = entry->txn;
  done.opcode = entry->request.opcode;
  done.address = entry->request.address;
  done.issue_cycle = entry->issue_cycle;
  done.response.master_id = entry->request.master_id;
  done.response.socket_order_key = entry->request.socket_order_key;
  done.response.status = entry->status;
  if (returns_data(entry->request.opcode)) {
    done.response.data =
        endianness_convert(entry->data, entry->request.beat_size, kFabricEndianness, socket_endianness);
  }
  pending.close_oldest(h.tag);
  return done;
}

// ---------------------------------------------------------------------------

std::vector<MasterId> ExclusiveMonitorSet::apply(const MonitorEvent& event) {
  std::vector<MasterId> cleared;
  if (const auto* load = std::get_if<ExclusiveLoadEvent>(&event)) {
    monitors_[load->master] = MonitorEntry{granule_of(load->address), true};
  } else if (const auto* store = std::get_if<StoreEvent>(&event)) {
    const Address first = granule_of(store->address);
    const Address last = granule_of(store->address + std::max<std::uint32_t>(store->length, 1) - 1);
    for (auto& [master, mon] : monitors_) {
      if (!mon.armed || mon.granule_base < first || mon.granule_base > last) continue;
      if (master != store->master || store->exclusive) {
        mon.armed = false;
        cleared.push_back(master);
      }
    }
  }
  // A failed exclusive store leaves every monitor untouched.
  return cleared;
}

bool ExclusiveMonitorSet::armed(MasterId master, Address address) const {
  auto it = monitors_.find(master);
  return it != monitors_.end() && it->second.armed && it->second.granule_base == granule_of(address);
}

std::optional<MonitorEntry> ExclusiveMonitorSet::entry(MasterId master) const {
  auto it = monitors_.find(master);
  if (it == monitors_.end()) return std::nullopt;
  return it->second;
}

ExclusiveMonitorSet exclusive_monitor_update(const MonitorEvent& event, ExclusiveMonitorSet monitors) {
  monitors.apply(event);
  return monitors;
}

// ---------------------------------------------------------------------------

Bytes TargetMemory::read(Address offset, std::uint32_t length) const {
  return Bytes(bytes_.begin() + offset, bytes_.begin() + offset + length);
}

void TargetMemory::write(Address offset, std::span<const std::uint8_t> data) {
  std::copy(data.begin(), data.end(), bytes_.begin() + offset);
}

Packet target_handle(const Packet& request, TargetMemory& memory, ExclusiveMonitorSet& monitors,
                     std::vector<MonitorNote>* notes) {
  const auto& rq = request.header;
  Packet resp;
  auto& h = resp.header;
  h = rq;
  h.kind = PacketKind::Response;
  h.lock_marker = LockMarker::None;
  h.user_bits.reset();
  h.payload_len = 0;
  h.status = Status::Okay;

  const MasterId master = rq.mst_addr;
  const Address offset = rq.slv_addr.offset;
  const std::uint32_t len = rq.payload_len;

  auto note_cleared = [&](const std::vector<MasterId>& cleared) {
    if (!notes) return;
    for (MasterId m : cleared) notes->push_back(MonitorNote{false, m, monitors.entry(m)->granule_base});
  };

  bool ok = memory.contains(offset, len);
  if (ok && is_exclusive(rq.opcode)) ok = monitors.granule_of(offset) == monitors.granule_of(offset + len - 1);
  if (!ok) {
    h.status = Status::ErrorSlave;
    return resp;
  }

  switch (rq.opcode) {
    case Opcode::Load:
    case Opcode::ReadEx:
      resp.payload = memory.read(offset, len);
      break;
    case Opcode::LoadExclusive:
      resp.payload = memory.read(offset, len);
      monitors.apply(ExclusiveLoadEvent{master, offset});
      if (notes) notes->push_back(MonitorNote{true, master, monitors.granule_of(offset)});
      h.status = Status::ExOkay;
      break;
    case Opcode::Store:
    case Opcode::StorePosted:
    case Opcode::StoreLockedRelease:
      memory.write(offset, request.payload);
      note_cleared(monitors.apply(StoreEvent{master, offset, len, false}));
      break;
    case Opcode::StoreExclusive:
      if (monitors.armed(master, offset)) {
        memory.write(offset, request.payload);
        note_cleared(monitors.apply(StoreEvent{master, offset, len, true}));
        h.status = Status::ExOkay;
      } else {
        monitors.apply(StoreExclusiveFailedEvent{master});
        h.status = Status::ExFail;
      }
      break;
  }
  h.payload_len = static_cast<std::uint32_t>(resp.payload.size());
  h.user_bits.set(kExclusiveUserBit, h.status == Status::ExOkay || h.status == Status::ExFail);
  return resp;
}

}  // namespace nocsim
