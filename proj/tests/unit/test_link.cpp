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

#include <random>

#include "nocsim/error.hpp"
#include "nocsim/link.hpp"

using namespace nocsim;

namespace {

Packet make_packet(std::size_t payload, std::uint64_t id = 7) {
  Packet p;
  p.header.slv_addr = {3, 0x40};
  p.header.mst_addr = 1;
  p.header.tag = 2;
  p.header.opcode = Opcode::Store;
  p.header.payload_len = static_cast<std::uint32_t>(payload);
  p.header.packet_id = id;
  for (std::size_t i = 0; i < payload; ++i) p.payload.push_back(static_cast<std::uint8_t>(i * 3 + 1));
  return p;
}

template <typename F>
FaultKind fault_of(F&& f) {
  try {
    f();
  } catch (const Fault& e) {
    return e.kind();
  }
  FAIL("expected a fault");
  return FaultKind::InvalidRequest;
}

}  // namespace

TEST_CASE("flit framing") {
  SUBCASE("empty payload is one HEAD_TAIL flit") {
    auto flits = serialize(make_packet(0), LinkParams{});
    REQUIRE(flits.size() == 1);
    CHECK(flits[0].type == FlitType::HeadTail);
  }
  SUBCASE("20 bytes over width 8") {
    auto flits = serialize(make_packet(20), LinkParams{8, 1, 1});
    REQUIRE(flits.size() == 4);
    CHECK(flits[0].type == FlitType::Head);
    CHECK(flits[1].type == FlitType::Body);
    CHECK(flits[2].type == FlitType::Body);
    CHECK(flits[3].type == FlitType::Tail);
    CHECK(flits[0].payload.empty());
    CHECK(flits[1].payload.size() == 8);
    CHECK(flits[2].payload.size() == 8);
    CHECK(flits[3].payload.size() == 4);
  }
  SUBCASE("flit_count") {
    CHECK(flit_count(0, 8) == 1);
    CHECK(flit_count(1, 8) == 2);
    CHECK(flit_count(8, 8) == 2);
    CHECK(flit_count(9, 8) == 3);
    CHECK(flit_count(32, 4) == 9);
  }
}

TEST_CASE("deserialize inverts serialize") {
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 33u}) {
    for (std::uint32_t w : {1u, 4u, 8u, 16u}) {
      auto p = make_packet(n);
      CHECK(deserialize(serialize(p, LinkParams{w, 1, 1})) == p);
    }
  }
}

TEST_CASE("deserialize rejects malformed framing") {
  auto flits = serialize(make_packet(20), LinkParams{8, 1, 1});
  SUBCASE("head then head") {
    std::vector<Flit> bad{flits[0], flits[0]};
    CHECK(fault_of([&] { deserialize(bad); }) == FaultKind::FramingViolation);
  }
  SUBCASE("missing tail") {
    std::vector<Flit> bad(flits.begin(), flits.end() - 1);
    CHECK(fault_of([&] { deserialize(bad); }) == FaultKind::FramingViolation);
  }
  SUBCASE("foreign flit") {
    auto other = serialize(make_packet(20, 99), LinkParams{8, 1, 1});
    std::vector<Flit> bad{flits[0], other[1], flits[2], flits[3]};
    CHECK(fault_of([&] { deserialize(bad); }) == FaultKind::FramingViolation);
  }
  SUBCASE("no head") {
    std::vector<Flit> bad(flits.begin() + 1, flits.end());
    CHECK(fault_of([&] { deserialize(bad); }) == FaultKind::FramingViolation);
  }
  SUBCASE("empty") { CHECK(fault_of([&] { deserialize({}); }) == FaultKind::FramingViolation); }
}

TEST_CASE("credit counter") {
  CreditCounter c(2);
  c.consume();
  c.consume();
  CHECK_FALSE(c.can_send());
  c.give_back();
  CHECK(c.can_send());
  c.give_back();
  CHECK(fault_of([&] { c.give_back(); }) == FaultKind::CreditAccounting);
  CreditCounter empty(1);
  empty.consume();
  CHECK(fault_of([&] { empty.consume(); }) == FaultKind::CreditAccounting);
}

TEST_CASE("credit counter tracks a model counter over a random schedule") {
  std::mt19937_64 rng(42);
  const std::uint32_t depth = 5;
  CreditCounter c(depth);
  int model = static_cast<int>(depth);
  for (int step = 0; step < 10000; ++step) {
    const bool consume = rng() % 2 == 0;
    if (consume && model > 0) {
      c.consume();
      --model;
    } else if (!consume && model < static_cast<int>(depth)) {
      c.give_back();
      ++model;
    }
    REQUIRE(static_cast<int>(c.credits()) == model);
    REQUIRE(c.can_send() == (model > 0));
  }
}

TEST_CASE("link channel timing") {
  LinkChannel ch(LinkParams{8, 3, 2}, 2);
  Flit f = serialize(make_packet(0), LinkParams{})[0];
  REQUIRE(ch.can_send(10));
  ch.send(f, 10);
  CHECK_FALSE(ch.can_send(11));  // rate_ratio 2
  CHECK(ch.can_send(12));
  CHECK_FALSE(ch.receive(12).has_value());
  CHECK(ch.receive(13).has_value());  // latency 3
  ch.send(f, 12);
  CHECK_FALSE(ch.can_send(14));  // out of credits
  ch.return_credit(15);
  ch.settle(17);
  CHECK_FALSE(ch.can_send(17));
  ch.settle(18);
  CHECK(ch.can_send(18));
  CHECK(ch.flits_sent() == 2);
}
