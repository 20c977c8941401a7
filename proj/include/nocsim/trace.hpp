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

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nocsim/packet.hpp"
#include "nocsim/transaction.hpp"

namespace nocsim {

enum class TraceKind : std::uint8_t {
  ReqIssued,
  PktInjected,
  PktForwarded,
  PktDelivered,
  RespEmitted,
  LockSet,
  LockCleared,
  MonitorArmed,
  MonitorCleared,
  Stall,
};

std::string_view to_string(TraceKind kind);
std::optional<TraceKind> parse_trace_kind(std::string_view text);

/// Where an event happened: an NIU ("N3") or a switch output port ("S1.p2").
struct Site {
  enum class Kind : std::uint8_t { Niu, SwitchPort };
  Kind kind = Kind::Niu;
  std::uint16_t id = 0;
  std::uint16_t port = 0;

  static Site niu(std::uint16_t id) { return {Kind::Niu, id, 0}; }
  static Site switch_port(std::uint16_t sw, std::uint16_t port) { return {Kind::SwitchPort, sw, port}; }
  std::string str() const;
  static std::optional<Site> parse(std::string_view text);
  auto operator<=>(const Site&) const = default;
};

/// One trace line. Which optional columns are filled depends on the kind;
/// see docs/trace-format.md.
struct TraceEvent {
  Cycle cycle = 0;
  Site site;
  TraceKind kind = TraceKind::ReqIssued;
  std::optional<MasterId> master;
  std::optional<SocketOrderKey> key;
  std::optional<Tag> tag;
  std::optional<Opcode> opcode;
  std::optional<Status> status;
  std::optional<Address> address;
  std::optional<std::uint64_t> txn;
  std::optional<std::uint64_t> aux;

  bool operator==(const TraceEvent&) const = default;
};

inline constexpr const char* kTraceHeader = "cycle,site,kind,master,key,tag,opcode,status,address,txn,aux";

class Trace {
 public:
  void record(TraceEvent event) { events_.push_back(std::move(event)); }
  const std::vector<TraceEvent>& events() const { return events_; }
  std::vector<TraceEvent>& events() { return events_; }
  bool empty() const { return events_.empty(); }

  void write_csv(std::ostream& out) const;
  std::string to_csv() const;
  /// Throws std::runtime_error naming the offending line.
  static Trace read_csv(std::istream& in);

 private:
  std::vector<TraceEvent> events_;
};

std::string format_event(const TraceEvent& event);

}  // namespace nocsim
