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

#include "nocsim/trace.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nocsim {

namespace {

constexpr std::string_view kKindNames[] = {
    "REQ_ISSUED",     "PKT_INJECTED",  "PKT_FORWARDED",  "PKT_DELIVERED",   "RESP_EMITTED",
    "LOCK_SET",       "LOCK_CLEARED",  "MONITOR_ARMED",  "MONITOR_CLEARED", "STALL",
};

template <typename T>
bool parse_number(std::string_view text, T& out, int base = 10) {
  if (base == 16) {
    if (!text.starts_with("0x")) return false;
    text.remove_prefix(2);
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out, base);
  return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(TraceKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<TraceKind> parse_trace_kind(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == text) return static_cast<TraceKind>(i);
  }
  return std::nullopt;
}

std::string Site::str() const {
  if (kind == Kind::Niu) return "N" + std::to_string(id);
  return "S" + std::to_string(id) + ".p" + std::to_string(port);
}

std::optional<Site> Site::parse(std::string_view text) {
  if (text.size() < 2) return std::nullopt;
  if (text[0] == 'N') {
    std::uint16_t id = 0;
    if (!parse_number(text.substr(1), id)) return std::nullopt;
    return Site::niu(id);
  }
  if (text[0] == 'S') {
    auto dot = text.find(".p");
    if (dot == std::string_view::npos) return std::nullopt;
    std::uint16_t sw = 0, port = 0;
    if (!parse_number(text.substr(1, dot - 1), sw) || !parse_number(text.substr(dot + 2), port)) return std::nullopt;
    return Site::switch_port(sw, port);
  }
  return std::nullopt;
}

std::string format_event(const TraceEvent& e) {
  std::string line;
  line.reserve(96);
  line += std::to_string(e.cycle);
  line += ',';
  line += e.site.str();
  line += ',';
  line += to_string(e.kind);
  line += ',';
  if (e.master) line += std::to_string(*e.master);
  line += ',';
  if (e.key) line += to_string(*e.key);
  line += ',';
  if (e.tag) line += std::to_string(*e.tag);
  line += ',';
  if (e.opcode) line += to_string(*e.opcode);
  line += ',';
  if (e.status) line += to_string(*e.status);
  line += ',';
  if (e.address) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", static_cast<unsigned>(*e.address));
    line += buf;
  }
  line += ',';
  if (e.txn) line += std::to_string(*e.txn);
  line += ',';
  if (e.aux) line += std::to_string(*e.aux);
  return line;
}

void Trace::write_csv(std::ostream& out) const {
  out << kTraceHeader << '\n';
  for (const auto& e : events_) out << format_event(e) << '\n';
}

std::string Trace::to_csv() const {
  std::ostringstream out;
  write_csv(out);
  return out.str();
}

Trace Trace::read_csv(std::istream& in) {
  Trace trace;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kTraceHeader) fail("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 11) fail("expected 11 fields");
    TraceEvent e;
    if (!parse_number(f[0], e.cycle)) fail("bad cycle");
    auto site = Site::parse(f[1]);
    if (!site) fail("bad site");
    e.site = *site;
    auto kind = parse_trace_kind(f[2]);
    if (!kind) fail("bad kind");
    e.kind = *kind;
    if (!f[3].empty()) {
      MasterId m = 0;
      if (!parse_number(f[3], m)) fail("bad master");
      e.master = m;
    }
    if (!f[4].empty()) {
      e.key = parse_key(f[4]);
      if (!e.key) fail("bad key");
    }
    if (!f[5].empty()) {
      unsigned t = 0;
      if (!parse_number(f[5], t) || t > 255) fail("bad tag");
      e.tag = static_cast<Tag>(t);
    }
    if (!f[6].empty()) {
      e.opcode = parse_opcode(f[6]);
      if (!e.opcode) fail("bad opcode");
    }
    if (!f[7].empty()) {
      e.status = parse_status(f[7]);
      if (!e.status) fail("bad status");
    }
    if (!f[8].empty()) {
      Address a = 0;
      if (!parse_number(f[8], a, 16)) fail("bad address");
      e.address = a;
    }
    if (!f[9].empty()) {
      std::uint64_t v = 0;
      if (!parse_number(f[9], v)) fail("bad txn");
      e.txn = v;
    }
    if (!f[10].empty()) {
      std::uint64_t v = 0;
      if (!parse_number(f[10], v)) fail("bad aux");
      e.aux = v;
    }
    trace.record(std::move(e));
  }
  return trace;
}

}  // namespace nocsim
