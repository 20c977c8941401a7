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
 * @file analysis.hpp
 * @brief Trace projection, trace invariant checking and the sequential
 * reference model.
 */

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nocsim/scenario.hpp"
#include "nocsim/trace.hpp"

namespace nocsim {

struct ProjectedOp {
  SocketOrderKey key;
  Opcode opcode = Opcode::Load;
  Address address = 0;
  std::optional<Status> status;        // responses only
  std::optional<std::uint32_t> digest;  // digest of response data

  bool operator==(const ProjectedOp&) const = default;
};

std::string to_string(const ProjectedOp& op);

struct MasterProjection {
  std::vector<ProjectedOp> issued;
  /// Socket-visible responses grouped by stream. Emission order is kept
  /// within a stream; the relative order of different streams is timing and
  /// is not part of the projection.
  std::map<SocketOrderKey, std::vector<ProjectedOp>> responses;

  bool operator==(const MasterProjection&) const = default;
};

using Projection = std::map<MasterId, MasterProjection>;

/// Keeps REQ_ISSUED and RESP_EMITTED events and drops everything else.
Projection transaction_projection(const Trace& trace);

/// First difference between two projections, described as a pair of events;
/// std::nullopt when equal.
std::optional<std::string> first_divergence(const Projection& a, const Projection& b);

/// Violations found in a trace; empty means clean. `complete` says the run
/// finished, which turns missing responses into violations.
std::vector<std::string> check_invariants(const Trace& trace, const Scenario& scenario, bool complete = true);

/// Final memory images from a zero-latency single-bus execution. Scripted
/// and random masters run one transaction at a time in round-robin order;
/// increment loops contribute their arithmetic total.
std::map<NiuId, Bytes> sequential_oracle(const Scenario& scenario);

}  // namespace nocsim
