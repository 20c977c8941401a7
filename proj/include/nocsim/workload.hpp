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
 * @file workload.hpp
 * @brief Traffic sources that sit behind an initiator socket.
 *
 * Random workloads are expanded into scripts up front so that a run is a pure
 * function of (scenario, seed). Each random master gets a private window in
 * every target, which keeps final memory images independent of how the
 * fabric interleaves masters. Loop workloads are closed-loop: the next
 * request depends on the previous response.
 */

#pragma once

#include <memory>
#include <optional>
#include <random>

#include "nocsim/scenario.hpp"

namespace nocsim {

/// Identifier recorded in run statistics.
inline constexpr const char* kRngAlgorithm = "mt19937_64";

/// Byte window [base, base + size) a random master may touch in one target.
struct Window {
  Address base = 0;
  std::uint32_t size = 0;
};

/// Window of random master `slot` (0-based, out of `slots`) in target `t`.
Window private_window(const TargetConfig& t, std::size_t slot, std::size_t slots);

/// An address no target decodes, if the map leaves any gap of 64 bytes.
std::optional<Address> unmapped_address(const AddressMap& map);

/// Deterministic expansion of a random workload. Lock pairs are fenced on
/// both sides so a locked path is never held across unrelated traffic.
Script expand_random(const RandomWorkload& workload, const InitiatorConfig& cfg, const Scenario& scenario,
                     std::size_t slot, std::size_t slots, std::uint64_t seed);

/// Random master slot of each initiator that runs a random workload.
std::map<NiuId, std::size_t> random_slots(const Scenario& scenario);

/// Little or big endian 32-bit counter value carried by socket data.
std::uint32_t decode_u32(const Bytes& data, Endianness e);
Bytes encode_u32(std::uint32_t value, Endianness e);

/// Behaviour behind one initiator socket, as seen by the engine.
class MasterProgram {
 public:
  virtual ~MasterProgram() = default;

  /// Step the master wants to present now, or nullptr while it waits.
  virtual const ScriptStep* current() = 0;
  /// The initiator NIU took the current step.
  virtual void accepted() = 0;
  /// A socket-visible response arrived.
  virtual void on_response(Opcode opcode, const TransactionResponse& response) = 0;
  virtual bool finished() const = 0;

  /// Completed loop iterations; 0 for scripted masters.
  virtual std::uint32_t iterations() const { return 0; }
  virtual std::uint64_t exfails() const { return 0; }
};

/// Program for `initiator`, or a finished no-op program when it has no
/// workload.
std::unique_ptr<MasterProgram> make_program(const Scenario& scenario, NiuId initiator);

}  // namespace nocsim
