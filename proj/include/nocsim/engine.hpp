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
 * @file engine.hpp
 * @brief Deterministic cycle-driven simulation of one scenario.
 *
 * Every cycle runs the same phases in the same order:
 *
 *   1. credit returns that have reached their sender become usable;
 *   2. masters present requests to initiator NIUs (ascending NIU id);
 *   3. initiator NIUs inject at most one request flit each;
 *   4. switches (ascending id) take arrived flits into their input buffers,
 *      then arbitrate and forward, request class before response class;
 *   5. target NIUs (ascending id) absorb request flits, execute packets whose
 *      service time has elapsed, and inject at most one response flit each;
 *   6. initiator NIUs (ascending id) absorb response flits, complete
 *      transactions and release responses to their masters.
 *
 * This order is part of the simulator's contract: traces depend on it.
 */

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nocsim/scenario.hpp"
#include "nocsim/trace.hpp"

namespace nocsim {

struct StuckTransaction {
  MasterId master = 0;
  std::uint64_t txn = 0;
  SocketOrderKey key;
  Opcode opcode = Opcode::Load;
  Address address = 0;
  Tag tag = 0;
  Cycle issue_cycle = 0;
};

struct MasterStats {
  std::uint64_t issued = 0;
  std::uint64_t responses = 0;  // socket-visible responses
  std::uint64_t posted = 0;
  std::uint64_t exfail = 0;
  std::uint64_t stall_cycles = 0;
  std::uint32_t loop_iterations = 0;
  Cycle latency_min = 0;
  Cycle latency_max = 0;
  double latency_mean = 0.0;
  std::uint64_t latency_sum = 0;
};

struct LinkStats {
  std::string name;  // "S0.1>S1.0/req", "N3>S0.2/resp", ...
  std::uint64_t flits = 0;
  double utilization = 0.0;
};

struct RunStats {
  Cycle cycles = 0;
  std::uint64_t completed = 0;  // response-bearing transactions answered
  std::uint64_t posted = 0;
  std::uint64_t lock_stalls = 0;
  std::map<MasterId, MasterStats> masters;
  std::vector<LinkStats> links;
};

struct RunResult {
  bool timed_out = false;
  std::optional<std::string> fault;  // a model invariant broke mid-run
  std::vector<StuckTransaction> stuck;
  std::map<NiuId, Bytes> memory;  // final image per target, fabric byte order
  Trace trace;
  RunStats stats;

  bool clean() const { return !timed_out && !fault; }
};

/// Runs `scenario` to completion or to its cycle budget. The scenario must
/// pass Scenario::check().
RunResult run(const Scenario& scenario);

/// Key-value report: one "key = value" line per statistic.
std::string format_stats(const RunResult& result, const Scenario& scenario);

std::string format_stuck(const std::vector<StuckTransaction>& stuck);

/// FNV-1a over response data; carried in RESP_EMITTED events.
std::uint32_t data_digest(const Bytes& data);

}  // namespace nocsim
