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

#include <doctest.h>

#include <algorithm>

#include "nocsim/error.hpp"
#include "nocsim/transaction.hpp"

using namespace nocsim;

namespace {

bool has(const std::vector<std::string>& v, const std::string& what) {
  return std::find(v.begin(), v.end(), what) != v.end();
}

TransactionRequest load(Address a, std::uint32_t burst, std::uint32_t beat) {
  TransactionRequest r;
  r.opcode = Opcode::Load;
  r.address = a;
  r.burst_len = burst;
  r.beat_size = beat;
  return r;
}

std::vector<SocketOrderKey> small_key_universe() {
  std::vector<SocketOrderKey> keys{SingleKey{}};
  for (std::uint8_t t = 0; t < 4; ++t) keys.push_back(ThreadKey{t});
  for (std::uint8_t t = 0; t < 4; ++t) {
    keys.push_back(TxnIdKey{t, Channel::Read});
    keys.push_back(TxnIdKey{t, Channel::Write});
  }
  return keys;
}

}  // namespace

TEST_CASE("needs_response is false only for posted stores") {
  CHECK_FALSE(needs_response(Opcode::StorePosted));
  CHECK(needs_response(Opcode::Load));
  CHECK(needs_response(Opcode::StoreExclusive));
  for (Opcode op : kAllOpcodes) CHECK(needs_response(op) == (op != Opcode::StorePosted));
}

TEST_CASE("validate_request") {
  SUBCASE("well formed load") { CHECK(validate_request(load(0x100, 4, 4)).empty()); }

  SUBCASE("store data shorter than burst") {
    TransactionRequest r = load(0x100, 2, 4);
    r.opcode = Opcode::Store;
    r.data.assign(7, 0xAA);
    CHECK(has(validate_request(r), "data length mismatch"));
  }

  SUBCASE("exclusive flag must follow the opcode") {
    TransactionRequest r = load(0x100, 1, 4);
    r.opcode = Opcode::LoadExclusive;
    r.exclusive_flag = false;
    CHECK(has(validate_request(r), "exclusive flag inconsistent"));
    r.exclusive_flag = true;
    CHECK(validate_request(r).empty());
  }

  SUBCASE("shape violations") {
    CHECK(has(validate_request(load(0x102, 1, 4)), "address misaligned"));
    CHECK(has(validate_request(load(0x100, 0, 4)), "burst length zero"));
    CHECK(has(validate_request(load(0x100, 1, 3)), "beat size not a power of two"));
    CHECK(has(validate_request(load(0xFFFFFFF8u, 4, 4)), "address range overflow"));
    auto r = load(0x100, 1, 4);
    r.data = {1};
    CHECK(has(validate_request(r), "data length mismatch"));
  }

  SUBCASE("id keys carry the opcode's channel") {
    auto r = load(0x100, 1, 4);
    r.socket_order_key = TxnIdKey{1, Channel::Write};
    CHECK(has(validate_request(r), "order key channel mismatch"));
    r.socket_order_key = TxnIdKey{1, Channel::Read};
    CHECK(validate_request(r).empty());
  }
}

TEST_CASE("order_class examples") {
  CHECK(order_class(SingleKey{}, SingleKey{}) == OrderClass::SameStream);
  CHECK(order_class(ThreadKey{0}, ThreadKey{1}) == OrderClass::Independent);
  CHECK(order_class(TxnIdKey{3, Channel::Read}, TxnIdKey{3, Channel::Write}) == OrderClass::Independent);
  CHECK(order_class(TxnIdKey{3, Channel::Read}, TxnIdKey{3, Channel::Read}) == OrderClass::SameStream);
}

TEST_CASE("order_class rejects keys of different families") {
  try {
    order_class(ThreadKey{0}, TxnIdKey{0, Channel::Read});
    FAIL("expected a fault");
  } catch (const Fault& f) {
    CHECK(f.kind() == FaultKind::HeterogeneousOrderKeys);
  }
}

TEST_CASE("order_class is reflexive and symmetric; SAME_STREAM follows the per-family rule") {
  const auto keys = small_key_universe();
  for (const auto& a : keys) {
    CHECK(order_class(a, a) == OrderClass::SameStream);
    for (const auto& b : keys) {
      if (a.index() != b.index()) continue;
      CHECK(order_class(a, b) == order_class(b, a));
      // Rule written out per family.
      bool same = false;
      if (std::holds_alternative<SingleKey>(a)) same = true;
      if (auto* ta = std::get_if<ThreadKey>(&a)) same = ta->thread_id == std::get<ThreadKey>(b).thread_id;
      if (auto* ia = std::get_if<TxnIdKey>(&a)) {
        const auto& ib = std::get<TxnIdKey>(b);
        same = ia->tid == ib.tid && ia->channel == ib.channel;
      }
      CHECK((order_class(a, b) == OrderClass::SameStream) == same);
    }
  }
}

TEST_CASE("stream_index is dense and injective within a family") {
  CHECK(stream_index(SingleKey{}) == 0);
  CHECK(stream_index(ThreadKey{5}) == 5);
  CHECK(stream_index(TxnIdKey{2, Channel::Read}) == 4);
  CHECK(stream_index(TxnIdKey{2, Channel::Write}) == 5);
  const auto keys = small_key_universe();
  for (const auto& a : keys) {
    for (const auto& b : keys) {
      if (a.index() == b.index() && !(a == b)) CHECK(stream_index(a) != stream_index(b));
    }
  }
}

TEST_CASE("text forms round trip") {
  for (Opcode op : kAllOpcodes) CHECK(parse_opcode(to_string(op)) == op);
  for (Status st : {Status::Okay, Status::ExOkay, Status::ExFail, Status::ErrorDecode, Status::ErrorSlave}) {
    CHECK(parse_status(to_string(st)) == st);
  }
  for (const auto& k : small_key_universe()) CHECK(parse_key(to_string(k)) == k);
  CHECK(to_string(SocketOrderKey{TxnIdKey{3, Channel::Write}}) == "id:3:write");
  CHECK_FALSE(parse_key("thread:").has_value());
  CHECK_FALSE(parse_key("id:1:sideways").has_value());
  CHECK_FALSE(parse_opcode("LOAD_LINKED").has_value());
}
