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
 * @file scenario.hpp
 * @brief Declarative description of one simulation run and its text format.
 *
 * A scenario file has four sections: [run], [topology], [nius] and
 * [workload]. The grammar is documented in docs/scenario-format.md. One file
 * (plus an optional seed override) fully determines a run.
 */

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "nocsim/fabric.hpp"
#include "nocsim/niu.hpp"

namespace nocsim {

struct ScriptStep {
  TransactionRequest request;
  bool fence = false;  // wait until the initiator has nothing outstanding
};

using Script = std::vector<ScriptStep>;

/// Relative weights of the operation kinds a random master draws from. A
/// "lock" draw emits a READEX / STORE_LOCKED_RELEASE pair and an "excl" draw
/// a LOAD_EXCLUSIVE / STORE_EXCLUSIVE pair; "miss" aims outside the map.
struct OpMix {
  std::uint32_t load = 30;
  std::uint32_t store = 25;
  std::uint32_t posted = 10;
  std::uint32_t excl = 15;
  std::uint32_t lock = 5;
  std::uint32_t miss = 5;

  std::uint32_t total() const { return load + store + posted + excl + lock + miss; }
  bool operator==(const OpMix&) const = default;
};

struct RandomWorkload {
  std::uint32_t count = 200;
  OpMix mix;
  std::uint32_t max_burst = 8;
  bool operator==(const RandomWorkload&) const = default;
};

struct ExclusiveLoop {
  Address counter = 0;
  std::uint32_t iterations = 50;
  bool operator==(const ExclusiveLoop&) const = default;
};

struct LockLoop {
  Address counter = 0;
  std::uint32_t iterations = 50;
  bool operator==(const LockLoop&) const = default;
};

using Workload = std::variant<Script, RandomWorkload, ExclusiveLoop, LockLoop>;

struct RunSettings {
  TransportMode mode = TransportMode::Wormhole;
  Cycle max_cycles = 100000;
  std::uint64_t seed = 1;
};

struct Scenario {
  RunSettings run;
  Topology topology;
  bool auto_routes = true;
  RoutingTable routes;  // filled from the topology when auto_routes is set
  std::map<NiuId, InitiatorConfig> initiators;
  std::map<NiuId, TargetConfig> targets;
  std::map<NiuId, Workload> workloads;  // keyed by initiator NIU

  AddressMap address_map() const;
  /// Largest packet payload any NIU can emit, in bytes.
  std::uint32_t max_packet_payload() const;
  /// Every semantic problem; empty means the scenario can run.
  std::vector<std::string> check() const;
  /// Recomputes auto routes after a topology edit.
  void refresh_routes();
  /// Sets every link and attachment to `params`, raising buffer depths to the
  /// minimum that still holds a whole packet.
  void set_all_link_params(const LinkParams& params);
};

/// Throws ScenarioError with a line/field diagnostic on syntax or semantic
/// errors.
Scenario parse_scenario(std::istream& in);
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical text form; parse_scenario(format_scenario(s)) reproduces s.
std::string format_scenario(const Scenario& scenario);

}  // namespace nocsim
