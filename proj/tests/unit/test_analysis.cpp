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

#include "nocsim/analysis.hpp"
#include "nocsim/engine.hpp"
#include "nocsim/scenario.hpp"

using namespace nocsim;

namespace {

bool any_starts(const std::vector<std::string>& v, const std::string& prefix) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.rfind(prefix, 0) == 0; });
}

std::size_t index_of(const Trace& t, TraceKind kind, std::size_t nth = 0) {
  for (std::size_t i = 0; i < t.events().size(); ++i) {
    if (t.events()[i].kind == kind && nth-- == 0) return i;
  }
  FAIL("event not found");
  return 0;
}

struct Fixture {
  Scenario scenario = load_scenario(NOCSIM_SCENARIO_DIR "/minimal.scn");
  RunResult result = run(scenario);
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "projection keeps socket events only") {
  REQUIRE(result.clean());
  auto p = transaction_projection(result.trace);
  REQUIRE(p.size() == 1);
  const auto& m = p.at(0);
  REQUIRE(m.issued.size() == 3);
  CHECK(m.issued[0].opcode == Opcode::Store);
  CHECK(m.issued[2].address == Address{0x20000});
  const auto& resp = m.responses.at(SingleKey{});
  REQUIRE(resp.size() == 3);
  CHECK(resp[0].status == Status::Okay);
  CHECK_FALSE(resp[0].digest.has_value());
  CHECK(resp[1].digest == data_digest(Bytes{1, 2, 3, 4, 5, 6, 7, 8}));
  CHECK(resp[2].status == Status::ErrorDecode);
}

TEST_CASE("data digest is FNV-1a") {
  CHECK(data_digest({}) == 2166136261u);
  CHECK(data_digest(Bytes{'a'}) == 0xE40C292Cu);
  CHECK(data_digest(Bytes{'f', 'o', 'o', 'b', 'a', 'r'}) == 0xBF9CF968u);
}

TEST_CASE_FIXTURE(Fixture, "projection comparison reports the first divergence") {
  auto a = transaction_projection(result.trace);
  CHECK_FALSE(first_divergence(a, a).has_value());
  Trace altered = result.trace;
  altered.events()[index_of(altered, TraceKind::RespEmitted, 1)].status = Status::ErrorSlave;
  auto b = transaction_projection(altered);
  auto d = first_divergence(a, b);
  REQUIRE(d.has_value());
  CHECK(d->find("ERROR_SLAVE") != std::string::npos);
  CHECK(d->find("N0") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "invariant checker accepts a real run") {
  CHECK(check_invariants(result.trace, scenario).empty());
}

TEST_CASE_FIXTURE(Fixture, "invariant checker catches injected faults") {
  SUBCASE("swapped responses of one stream") {
    Trace t = result.trace;
    auto& ev = t.events();
    const std::size_t a = index_of(t, TraceKind::RespEmitted, 1), b = index_of(t, TraceKind::RespEmitted, 2);
    std::swap(ev[a].txn, ev[b].txn);
    std::swap(ev[a].opcode, ev[b].opcode);
    std::swap(ev[a].address, ev[b].address);
    CHECK(any_starts(check_invariants(t, scenario), "stream order violation"));
  }
  SUBCASE("response without a request") {
    Trace t = result.trace;
    t.events().erase(t.events().begin() + static_cast<long>(index_of(t, TraceKind::ReqIssued, 1)));
    CHECK(any_starts(check_invariants(t, scenario), "conservation violation"));
  }
  SUBCASE("duplicated response") {
    Trace t = result.trace;
    t.record(t.events()[index_of(t, TraceKind::RespEmitted, 0)]);
    t.events().back().cycle = t.events()[t.events().size() - 2].cycle;
    CHECK(any_starts(check_invariants(t, scenario), "conservation violation"));
  }
  SUBCASE("missing response") {
    Trace t = result.trace;
    t.events().erase(t.events().begin() + static_cast<long>(index_of(t, TraceKind::RespEmitted, 2)));
    CHECK(any_starts(check_invariants(t, scenario), "conservation violation"));
    CHECK(check_invariants(t, scenario, false).empty());
  }
  SUBCASE("time running backwards") {
    Trace t = result.trace;
    t.events().back().cycle = 0;
    CHECK(any_starts(check_invariants(t, scenario), "cycle order violation"));
  }
  SUBCASE("buffer overrun") {
    Trace t = result.trace;
    t.events()[index_of(t, TraceKind::PktForwarded)].aux = 16;
    CHECK(any_starts(check_invariants(t, scenario), "credit bound violation"));
  }
}

TEST_CASE("invariant checker catches a foreign traversal of a locked port") {
  auto s = parse_scenario(R"(
[topology]
switch S0 ports=3
attach N0 S0.0
attach N1 S0.1
attach N2 S0.2
routes auto
[nius]
initiator N0 family=ordered policy=single
initiator N1 family=ordered policy=single
target N2 base=0x10000 size=0x1000 service=4
[workload]
op N0 READEX 0x10000
op N0 STORE_LOCKED_RELEASE 0x10000 data=01000000
op N1 STORE 0x10040 data=AABBCCDD
)");
  auto r = run(s);
  REQUIRE(r.clean());
  REQUIRE(check_invariants(r.trace, s).empty());
  Trace t = r.trace;
  const std::size_t set = index_of(t, TraceKind::LockSet);
  TraceEvent intruder = t.events()[set];
  intruder.kind = TraceKind::PktForwarded;
  intruder.master = 1;
  intruder.opcode = Opcode::Load;
  intruder.aux = 15;
  t.events().insert(t.events().begin() + static_cast<long>(set) + 1, intruder);
  CHECK(any_starts(check_invariants(t, s), "lock"));
}

TEST_CASE("invariant checker catches an exclusive win without a monitor") {
  auto s = parse_scenario(R"(
[topology]
switch S0 ports=2
attach N0 S0.0
attach N1 S0.1
routes auto
[nius]
initiator N0 family=ordered policy=single
target N1 base=0x10000 size=0x1000
[workload]
op N0 STORE_EXCLUSIVE 0x10000 data=01000000
)");
  auto r = run(s);
  REQUIRE(r.clean());
  REQUIRE(check_invariants(r.trace, s).empty());
  Trace t = r.trace;
  int forged = 0;
  for (auto& e : t.events()) {
    if (e.status == Status::ExFail) {
      e.status = Status::ExOkay;
      ++forged;
    }
  }
  REQUIRE(forged > 0);
  CHECK(any_starts(check_invariants(t, s), "exclusive safety violation"));
}

TEST_CASE("sequential oracle") {
  auto s = load_scenario(NOCSIM_SCENARIO_DIR "/minimal.scn");
  auto mem = sequential_oracle(s);
  REQUIRE(mem.contains(1));
  CHECK(Bytes(mem.at(1).begin(), mem.at(1).begin() + 8) == Bytes{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(mem == run(s).memory);
}
