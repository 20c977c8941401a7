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

#pragma once

#include <stdexcept>
#include <string>

namespace nocsim {

/// Categories of simulation faults. A fault is never a flow-control outcome;
/// it means a model invariant was broken or a configuration cannot be honoured.
enum class FaultKind {
  HeterogeneousOrderKeys,
  OrphanResponse,
  FramingViolation,
  LockProtocolViolation,
  CreditAccounting,
  RaggedBeat,
  UnroutablePacket,
  InvalidRequest,
};

const char* to_string(FaultKind kind);

class Fault : public std::runtime_error {
 public:
  Fault(FaultKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  FaultKind kind() const { return kind_; }

 private:
  FaultKind kind_;
};

/// Raised by the scenario loader. `line` is 1-based; 0 when the problem is not
/// tied to a single line (e.g. a whole-topology connectivity check).
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(int line, const std::string& field, const std::string& what)
      : std::runtime_error(format(line, field, what)), line_(line), field_(field) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(int line, const std::string& field, const std::string& what) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += "field '" + field + "': ";
    return out + what;
  }

  int line_;
  std::string field_;
};

}  // namespace nocsim
