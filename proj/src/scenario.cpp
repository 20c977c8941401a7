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

#include "nocsim/scenario.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nocsim/error.hpp"

namespace nocsim {

namespace {

// ---------------------------------------------------------------------------
// Tokenizing

struct Line {
  int number = 0;
  std::vector<std::string> words;              // positional tokens
  std::map<std::string, std::string> fields;   // key=value tokens
  std::set<std::string> used;
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

Line tokenize(int number, const std::string& text) {
  Line line;
  line.number = number;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) {
      line.words.push_back(tok);
      continue;
    }
    auto key = tok.substr(0, eq);
    if (key.empty()) throw ScenarioError(number, "", "empty field name in '" + tok + "'");
    if (line.fields.contains(key)) throw ScenarioError(number, key, "given twice");
    line.fields[key] = tok.substr(eq + 1);
  }
  return line;
}

bool parse_u64(std::string_view text, std::uint64_t& out) {
  int base = 10;
  if (text.starts_with("0x") || text.starts_with("0X")) {
    text.remove_prefix(2);
    base = 16;
  }
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out, base);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::uint64_t number(const Line& line, const std::string& field, const std::string& text, std::uint64_t max) {
  std::uint64_t v = 0;
  if (!parse_u64(text, v)) throw ScenarioError(line.number, field, "expected a number, got '" + text + "'");
  if (v > max) throw ScenarioError(line.number, field, "value " + text + " out of range");
  return v;
}

template <typename T>
T take(Line& line, const std::string& key, T fallback) {
  auto it = line.fields.find(key);
  if (it == line.fields.end()) return fallback;
  line.used.insert(key);
  return static_cast<T>(number(line, key, it->second, std::numeric_limits<T>::max()));
}

std::optional<std::string> take_text(Line& line, const std::string& key) {
  auto it = line.fields.find(key);
  if (it == line.fields.end()) return std::nullopt;
  line.used.insert(key);
  return it->second;
}

void finish(const Line& line) {
  for (const auto& [k, v] : line.fields) {
    if (!line.used.contains(k)) throw ScenarioError(line.number, k, "unknown field");
  }
}

void expect_words(const Line& line, std::size_t n, const char* usage) {
  if (line.words.size() != n) throw ScenarioError(line.number, "", std::string("expected: ") + usage);
}

std::uint16_t prefixed_id(const Line& line, const std::string& text, char prefix, const char* what) {
  if (text.size() < 2 || text[0] != prefix) {
    throw ScenarioError(line.number, what, "expected " + std::string(1, prefix) + "<n>, got '" + text + "'");
  }
  return static_cast<std::uint16_t>(number(line, what, text.substr(1), 0xffff));
}

PortRef port_ref(const Line& line, const std::string& text) {
  auto dot = text.find('.');
  if (dot == std::string::npos) throw ScenarioError(line.number, "port", "expected S<n>.<port>, got '" + text + "'");
  PortRef p;
  p.sw = prefixed_id(line, text.substr(0, dot), 'S', "port");
  p.port = static_cast<PortId>(number(line, "port", text.substr(dot + 1), 0xffff));
  return p;
}

Bytes hex_bytes(const Line& line, const std::string& text) {
  if (text.size() % 2 != 0) throw ScenarioError(line.number, "data", "odd number of hex digits");
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + i + 2, v, 16);
    if (ec != std::errc() || ptr != text.data() + i + 2) {
      throw ScenarioError(line.number, "data", "bad hex digit near '" + text.substr(i, 2) + "'");
    }
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string hex_string(const Bytes& data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out += kDigits[b >> 4];
    out += kDigits[b & 15];
  }
  return out;
}

std::string hex32(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

SocketOrderKey default_key(SocketFamily family, Opcode op) {
  switch (family) {
    case SocketFamily::FullyOrdered: return SingleKey{};
    case SocketFamily::Threaded: return ThreadKey{0};
    case SocketFamily::IdBased: return TxnIdKey{0, natural_channel(op)};
  }
  return SingleKey{};
}

// ---------------------------------------------------------------------------
// Section parsers

struct LinkDefaults {
  std::uint32_t depth = 16;
  LinkParams params;
};

void link_fields(Line& line, std::uint32_t& depth, LinkParams& params) {
  depth = take<std::uint32_t>(line, "depth", depth);
  params.flit_payload_width = take<std::uint32_t>(line, "width", params.flit_payload_width);
  params.latency = take<std::uint32_t>(line, "latency", params.latency);
  params.rate_ratio = take<std::uint32_t>(line, "rate", params.rate_ratio);
  if (depth == 0) throw ScenarioError(line.number, "depth", "must be at least 1");
  if (params.flit_payload_width == 0) throw ScenarioError(line.number, "width", "must be at least 1");
  if (params.latency == 0) throw ScenarioError(line.number, "latency", "must be at least 1");
  if (params.rate_ratio == 0) throw ScenarioError(line.number, "rate", "must be at least 1");
}

class Parser {
 public:
  Scenario parse(std::istream& in) {
    std::string raw;
    int number = 0;
    std::string section;
    std::set<std::string> seen_sections;
    while (std::getline(in, raw)) {
      ++number;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      auto text = trim(raw);
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') throw ScenarioError(number, "", "unterminated section header");
        section = text.substr(1, text.size() - 2);
        if (section != "run" && section != "topology" && section != "nius" && section != "workload") {
          throw ScenarioError(number, "", "unknown section [" + section + "]");
        }
        if (!seen_sections.insert(section).second) {
          throw ScenarioError(number, "", "section [" + section + "] repeated");
        }
        continue;
      }
      if (section.empty()) throw ScenarioError(number, "", "content before the first section");
      if (section == "run") {
        run_line(number, text);
      } else {
        Line line = tokenize(number, text);
        if (section == "topology") topology_line(line);
        else if (section == "nius") niu_line(line);
        else workload_lines_.push_back(std::move(line));
      }
    }
    // Workload lines need the NIU table, which may be declared later in the
    // file.
    for (auto& line : workload_lines_) workload_line(line);

    if (explicit_routes_ && auto_line_) {
      throw ScenarioError(auto_line_, "routes", "'routes auto' combined with explicit route lines");
    }
    s_.auto_routes = !explicit_routes_;
    if (s_.auto_routes && s_.topology.check().empty()) s_.refresh_routes();

    auto problems = s_.check();
    if (!problems.empty()) throw ScenarioError(0, "", problems.front());
    return std::move(s_);
  }

 private:
  void run_line(int number, const std::string& text) {
    auto eq = text.find('=');
    if (eq == std::string::npos) throw ScenarioError(number, "", "expected key = value");
    auto key = trim(std::string_view(text).substr(0, eq));
    auto value = trim(std::string_view(text).substr(eq + 1));
    Line line;
    line.number = number;
    if (key == "mode") {
      auto m = parse_mode(value);
      if (!m) throw ScenarioError(number, key, "expected wormhole or store_and_forward, got '" + value + "'");
      s_.run.mode = *m;
    } else if (key == "max_cycles") {
      s_.run.max_cycles = number_of(line, key, value);
      if (s_.run.max_cycles == 0) throw ScenarioError(number, key, "must be at least 1");
    } else if (key == "seed") {
      s_.run.seed = number_of(line, key, value);
    } else {
      throw ScenarioError(number, key, "unknown field");
    }
  }

  static std::uint64_t number_of(const Line& line, const std::string& key, const std::string& value) {
    return number(line, key, value, std::numeric_limits<std::uint64_t>::max());
  }

  void topology_line(Line& line) {
    if (line.words.empty()) throw ScenarioError(line.number, "", "empty statement");
    const auto& kw = line.words[0];
    if (kw == "defaults") {
      expect_words(line, 1, "defaults depth=<n> width=<n> latency=<n> rate=<n>");
      link_fields(line, defaults_.depth, defaults_.params);
    } else if (kw == "switch") {
      expect_words(line, 2, "switch S<n> ports=<n>");
      SwitchDesc sw;
      sw.id = prefixed_id(line, line.words[1], 'S', "switch");
      if (!line.fields.contains("ports")) throw ScenarioError(line.number, "ports", "missing");
      sw.ports = take<PortId>(line, "ports", 0);
      s_.topology.switches.push_back(sw);
    } else if (kw == "link") {
      expect_words(line, 3, "link S<a>.<port> S<b>.<port> [depth= width= latency= rate=]");
      LinkDesc l;
      l.a = port_ref(line, line.words[1]);
      l.b = port_ref(line, line.words[2]);
      l.depth = defaults_.depth;
      l.params = defaults_.params;
      link_fields(line, l.depth, l.params);
      s_.topology.links.push_back(l);
    } else if (kw == "attach") {
      expect_words(line, 3, "attach N<n> S<s>.<port> [depth= width= latency= rate=]");
      NiuId niu = prefixed_id(line, line.words[1], 'N', "niu");
      Attachment a;
      a.at = port_ref(line, line.words[2]);
      a.depth = defaults_.depth;
      a.params = defaults_.params;
      link_fields(line, a.depth, a.params);
      if (!s_.topology.niu_attachments.emplace(niu, a).second) {
        throw ScenarioError(line.number, "niu", "N" + std::to_string(niu) + " attached twice");
      }
    } else if (kw == "routes") {
      expect_words(line, 2, "routes auto");
      if (line.words[1] != "auto") throw ScenarioError(line.number, "routes", "only 'auto' is accepted");
      auto_line_ = line.number;
    } else if (kw == "route") {
      expect_words(line, 4, "route S<n> N<target> <port>");
      auto sw = prefixed_id(line, line.words[1], 'S', "switch");
      auto target = prefixed_id(line, line.words[2], 'N', "target");
      auto port = static_cast<PortId>(number(line, "port", line.words[3], 0xffff));
      s_.routes.set(sw, target, port);
      explicit_routes_ = true;
    } else {
      throw ScenarioError(line.number, "", "unknown topology statement '" + kw + "'");
    }
    finish(line);
  }

  void niu_line(Line& line) {
    if (line.words.size() != 2) throw ScenarioError(line.number, "", "expected: initiator|target N<n> fields...");
    NiuId id = prefixed_id(line, line.words[1], 'N', "niu");
    if (s_.initiators.contains(id) || s_.targets.contains(id)) {
      throw ScenarioError(line.number, "niu", "N" + std::to_string(id) + " declared twice");
    }
    if (line.words[0] == "initiator") {
      InitiatorConfig cfg;
      cfg.id = id;
      if (auto f = take_text(line, "family")) {
        auto fam = parse_family(*f);
        if (!fam) throw ScenarioError(line.number, "family", "expected ordered, threaded or id, got '" + *f + "'");
        cfg.family = *fam;
      }
      auto capacity = take<std::uint32_t>(line, "capacity", 4);
      if (auto p = take_text(line, "policy")) {
        if (*p == "single") cfg.policy = TagPolicy::single_outstanding();
        else if (*p == "per_stream") cfg.policy = TagPolicy::per_stream(capacity);
        else if (*p == "pooled") cfg.policy = TagPolicy::pooled(capacity);
        else throw ScenarioError(line.number, "policy", "expected single, per_stream or pooled, got '" + *p + "'");
      }
      cfg.priority = take<std::uint8_t>(line, "priority", 0);
      if (cfg.priority > 7) throw ScenarioError(line.number, "priority", "must be 0..7");
      cfg.max_payload = take<std::uint32_t>(line, "max_payload", cfg.max_payload);
      cfg.tag_bits = take<std::uint32_t>(line, "tag_bits", cfg.tag_bits);
      if (auto e = take_text(line, "endianness")) {
        auto en = parse_endianness(*e);
        if (!en) throw ScenarioError(line.number, "endianness", "expected little or big, got '" + *e + "'");
        cfg.endianness = *en;
      }
      niu_lines_[id] = line.number;
      s_.initiators[id] = cfg;
    } else if (line.words[0] == "target") {
      TargetConfig cfg;
      cfg.id = id;
      if (!line.fields.contains("base")) throw ScenarioError(line.number, "base", "missing");
      cfg.base = take<Address>(line, "base", 0);
      cfg.size = take<std::uint32_t>(line, "size", cfg.size);
      cfg.memory_size = take<std::uint32_t>(line, "memory", cfg.size);
      cfg.granule = take<std::uint32_t>(line, "granule", cfg.granule);
      cfg.service_cycles = take<std::uint32_t>(line, "service", cfg.service_cycles);
      niu_lines_[id] = line.number;
      s_.targets[id] = cfg;
    } else {
      throw ScenarioError(line.number, "", "unknown NIU kind '" + line.words[0] + "'");
    }
    finish(line);
  }

  const InitiatorConfig& initiator_for(const Line& line) {
    if (line.words.size() < 2) throw ScenarioError(line.number, "", "missing initiator id");
    NiuId id = prefixed_id(line, line.words[1], 'N', "initiator");
    auto it = s_.initiators.find(id);
    if (it == s_.initiators.end()) {
      throw ScenarioError(line.number, "initiator", "N" + std::to_string(id) + " is not a declared initiator");
    }
    return it->second;
  }

  void workload_line(Line& line) {
    if (line.words.empty()) throw ScenarioError(line.number, "", "empty statement");
    const auto& kw = line.words[0];
    const auto& cfg = initiator_for(line);
    auto existing = s_.workloads.find(cfg.id);
    auto clash = [&](std::size_t wanted) {
      if (existing != s_.workloads.end() && existing->second.index() != wanted) {
        throw ScenarioError(line.number, "initiator",
                            "N" + std::to_string(cfg.id) + " already has a different kind of workload");
      }
      if (existing != s_.workloads.end() && wanted != 0) {
        throw ScenarioError(line.number, "initiator", "N" + std::to_string(cfg.id) + " already has a workload");
      }
    };

    if (kw == "op") {
      clash(0);
      if (line.words.size() < 4 || line.words.size() > 5) {
        throw ScenarioError(line.number, "", "expected: op N<n> OPCODE <address> [fence] fields...");
      }
      ScriptStep step;
      auto op = parse_opcode(line.words[2]);
      if (!op) throw ScenarioError(line.number, "opcode", "unknown opcode '" + line.words[2] + "'");
      auto& r = step.request;
      r.master_id = cfg.id;
      r.opcode = *op;
      r.exclusive_flag = is_exclusive(*op);
      r.address = static_cast<Address>(number(line, "address", line.words[3], 0xffffffffu));
      if (line.words.size() == 5) {
        if (line.words[4] != "fence") throw ScenarioError(line.number, "", "unexpected token '" + line.words[4] + "'");
        step.fence = true;
      }
      r.burst_len = take<std::uint32_t>(line, "burst", 1);
      r.beat_size = take<std::uint32_t>(line, "beat", 4);
      r.socket_order_key = default_key(cfg.family, *op);
      if (auto k = take_text(line, "key")) {
        auto key = parse_key(*k);
        if (!key) throw ScenarioError(line.number, "key", "malformed key '" + *k + "'");
        r.socket_order_key = *key;
      }
      if (auto d = take_text(line, "data")) r.data = hex_bytes(line, *d);
      if (writes_memory(*op) && r.data.empty()) throw ScenarioError(line.number, "data", "missing for a write");
      finish(line);
      if (auto v = validate_request(r); !v.empty()) throw ScenarioError(line.number, "", v.front());
      if (family_of(r.socket_order_key) != cfg.family) {
        throw ScenarioError(line.number, "key", "key does not belong to the initiator's socket family");
      }
      if (existing == s_.workloads.end()) existing = s_.workloads.emplace(cfg.id, Script{}).first;
      std::get<Script>(existing->second).push_back(std::move(step));
      return;
    }

    expect_words(line, 2, "<workload kind> N<n> fields...");
    if (kw == "random") {
      clash(1);
      RandomWorkload w;
      w.count = take<std::uint32_t>(line, "count", w.count);
      w.max_burst = take<std::uint32_t>(line, "max_burst", w.max_burst);
      if (w.max_burst == 0) throw ScenarioError(line.number, "max_burst", "must be at least 1");
      if (auto m = take_text(line, "mix")) w.mix = parse_mix(line, *m);
      s_.workloads.emplace(cfg.id, w);
    } else if (kw == "exclusive_loop" || kw == "lock_loop") {
      clash(kw == "exclusive_loop" ? 2 : 3);
      if (!line.fields.contains("counter")) throw ScenarioError(line.number, "counter", "missing");
      auto counter = take<Address>(line, "counter", 0);
      auto iterations = take<std::uint32_t>(line, "iterations", 50);
      if (kw == "exclusive_loop") s_.workloads.emplace(cfg.id, ExclusiveLoop{counter, iterations});
      else s_.workloads.emplace(cfg.id, LockLoop{counter, iterations});
    } else {
      throw ScenarioError(line.number, "", "unknown workload statement '" + kw + "'");
    }
    finish(line);
  }

  static OpMix parse_mix(const Line& line, const std::string& text) {
    OpMix mix{0, 0, 0, 0, 0, 0};
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw ScenarioError(line.number, "mix", "expected kind:weight, got '" + item + "'");
      auto name = item.substr(0, colon);
      auto w = static_cast<std::uint32_t>(number(line, "mix", item.substr(colon + 1), 1000000));
      if (name == "load") mix.load = w;
      else if (name == "store") mix.store = w;
      else if (name == "posted") mix.posted = w;
      else if (name == "excl") mix.excl = w;
      else if (name == "lock") mix.lock = w;
      else if (name == "miss") mix.miss = w;
      else throw ScenarioError(line.number, "mix", "unknown operation kind '" + name + "'");
    }
    if (mix.total() == 0) throw ScenarioError(line.number, "mix", "all weights are zero");
    return mix;
  }

  Scenario s_;
  LinkDefaults defaults_;
  bool explicit_routes_ = false;
  int auto_line_ = 0;
  std::map<NiuId, int> niu_lines_;
  std::vector<Line> workload_lines_;
};

void check_script(const Scenario& s, const InitiatorConfig& cfg, const Script& script,
                  std::vector<std::string>& problems) {
  const std::string who = "workload of N" + std::to_string(cfg.id);
  bool locked = false;
  Address lock_address = 0;
  for (std::size_t i = 0; i < script.size(); ++i) {
    const auto& r = script[i].request;
    const std::string at = who + " op " + std::to_string(i + 1) + ": ";
    if (r.master_id != cfg.id) problems.push_back(at + "master id differs from the initiator");
    for (const auto& v : validate_request(r)) problems.push_back(at + v);
    if (family_of(r.socket_order_key) != cfg.family) problems.push_back(at + "key of the wrong socket family");
    if (cfg.policy.kind == TagPolicy::Kind::PerStream && stream_index(r.socket_order_key) >= cfg.policy.count) {
      problems.push_back(at + "stream " + std::to_string(stream_index(r.socket_order_key)) +
                         " exceeds the per-stream tag count");
    }
    if (r.opcode == Opcode::ReadEx) {
      if (locked) problems.push_back(at + "READEX while a lock is already open");
      locked = true;
      lock_address = r.address;
    } else if (r.opcode == Opcode::StoreLockedRelease) {
      if (!locked) problems.push_back(at + "STORE_LOCKED_RELEASE without a preceding READEX");
      else if (lock_address != r.address) problems.push_back(at + "STORE_LOCKED_RELEASE address differs from READEX");
      locked = false;
    }
  }
  if (locked) problems.push_back(who + ": READEX never released");
  (void)s;
}

}  // namespace

// ---------------------------------------------------------------------------

AddressMap Scenario::address_map() const {
  std::vector<AddressRegion> regions;
  for (const auto& [id, t] : targets) regions.push_back({t.base, t.size, id});
  return AddressMap(std::move(regions));
}

std::uint32_t Scenario::max_packet_payload() const {
  std::uint32_t biggest = 0;
  for (const auto& [id, cfg] : initiators) {
    biggest = std::max(biggest, cfg.max_payload);
    auto w = workloads.find(id);
    if (w == workloads.end()) continue;
    if (const auto* script = std::get_if<Script>(&w->second)) {
      for (const auto& step : *script) biggest = std::max(biggest, step.request.beat_size);
    }
  }
  return biggest;
}

void Scenario::refresh_routes() {
  if (auto_routes) routes = RoutingTable::shortest_paths(topology);
}

void Scenario::set_all_link_params(const LinkParams& params) {
  const auto need = static_cast<std::uint32_t>(flit_count(max_packet_payload(), params.flit_payload_width));
  for (auto& l : topology.links) {
    l.params = params;
    l.depth = std::max(l.depth, need);
  }
  for (auto& [id, a] : topology.niu_attachments) {
    a.params = params;
    a.depth = std::max(a.depth, need);
  }
}

std::vector<std::string> Scenario::check() const {
  std::vector<std::string> problems = topology.check();
  if (!problems.empty()) return problems;

  for (const auto& [id, a] : topology.niu_attachments) {
    if (!initiators.contains(id) && !targets.contains(id)) {
      problems.push_back("N" + std::to_string(id) + " is attached but not declared in [nius]");
    }
  }
  auto attached = [&](NiuId id) {
    if (!topology.niu_attachments.contains(id)) {
      problems.push_back("N" + std::to_string(id) + " is declared but not attached to any switch");
    }
  };
  for (const auto& [id, cfg] : initiators) attached(id);
  for (const auto& [id, cfg] : targets) attached(id);

  for (const auto& p : routes.check(topology)) problems.push_back(p);

  // One flit width throughout: a width change inside the fabric would need
  // re-framing at the switch, which the switches do not model.
  std::set<std::uint32_t> widths;
  for (const auto& l : topology.links) widths.insert(l.params.flit_payload_width);
  for (const auto& [id, a] : topology.niu_attachments) widths.insert(a.params.flit_payload_width);
  if (widths.size() > 1) problems.emplace_back("links disagree on flit width");

  const auto biggest = max_packet_payload();
  auto depth_ok = [&](const std::string& who, std::uint32_t depth, const LinkParams& p) {
    auto need = flit_count(biggest, p.flit_payload_width);
    if (depth < need) {
      problems.push_back(who + " buffer depth " + std::to_string(depth) + " cannot hold a " +
                         std::to_string(need) + "-flit packet");
    }
  };
  for (const auto& l : topology.links) {
    depth_ok("link S" + std::to_string(l.a.sw) + "." + std::to_string(l.a.port), l.depth, l.params);
  }
  for (const auto& [id, a] : topology.niu_attachments) depth_ok("attachment of N" + std::to_string(id), a.depth, a.params);

  std::optional<AddressMap> map;
  try {
    map.emplace(address_map());
  } catch (const std::invalid_argument& e) {
    problems.push_back(std::string("address map: ") + e.what());
  }

  for (const auto& [id, t] : targets) {
    const std::string who = "target N" + std::to_string(id);
    if (t.granule == 0 || !std::has_single_bit(t.granule) || t.granule < 4) {
      problems.push_back(who + ": granule must be a power of two of at least 4");
    }
    if (t.service_cycles == 0) problems.push_back(who + ": service must be at least 1");
    if (t.memory_size > (1u << 24)) problems.push_back(who + ": memory larger than 16 MiB");
  }

  std::size_t random_masters = 0;
  for (const auto& [id, w] : workloads) random_masters += std::holds_alternative<RandomWorkload>(w);

  for (const auto& [id, cfg] : initiators) {
    const std::string who = "initiator N" + std::to_string(id);
    if (cfg.tag_bits == 0 || cfg.tag_bits > 8) problems.push_back(who + ": tag_bits must be 1..8");
    else if (cfg.policy.capacity() > (1u << cfg.tag_bits)) problems.push_back(who + ": capacity exceeds the tag space");
    if (cfg.policy.capacity() == 0) problems.push_back(who + ": capacity must be at least 1");
    if (cfg.family == SocketFamily::IdBased && cfg.policy.kind == TagPolicy::Kind::PerStream &&
        cfg.policy.count < 2) {
      problems.push_back(who + ": per_stream on an id socket needs capacity of at least 2");
    }
    if (cfg.max_payload < 4) problems.push_back(who + ": max_payload must be at least 4");
    if (cfg.priority > 7) problems.push_back(who + ": priority must be 0..7");
  }

  for (const auto& [id, w] : workloads) {
    auto it = initiators.find(id);
    if (it == initiators.end()) {
      problems.push_back("workload references N" + std::to_string(id) + ", which is not an initiator");
      continue;
    }
    const auto& cfg = it->second;
    const std::string who = "workload of N" + std::to_string(id);
    if (const auto* script = std::get_if<Script>(&w)) {
      check_script(*this, cfg, *script, problems);
    } else if (const auto* r = std::get_if<RandomWorkload>(&w)) {
      if (targets.empty()) problems.push_back(who + ": random traffic needs at least one target");
      if (r->mix.total() == 0) problems.push_back(who + ": empty operation mix");
      if (r->max_burst == 0) problems.push_back(who + ": max_burst must be at least 1");
      for (const auto& [tid, t] : targets) {
        // Each random master owns a private window of every target.
        auto slice = std::min(t.size, t.memory_size) / random_masters / 64 * 64;
        if (slice < 64) {
          problems.push_back(who + ": target N" + std::to_string(tid) + " too small to give " +
                             std::to_string(random_masters) + " masters a 64-byte window each");
        }
      }
    } else {
      Address counter = std::holds_alternative<ExclusiveLoop>(w) ? std::get<ExclusiveLoop>(w).counter
                                                                 : std::get<LockLoop>(w).counter;
      if (counter % 4 != 0) problems.push_back(who + ": counter must be 4-byte aligned");
      if (map) {
        auto d = address_decode(counter, *map);
        if (!d) {
          problems.push_back(who + ": counter address does not decode");
        } else if (std::uint64_t{d->offset} + 4 > targets.at(d->target).memory_size) {
          problems.push_back(who + ": counter lies outside target memory");
        }
      }
    }
  }
  return problems;
}

Scenario parse_scenario(std::istream& in) { return Parser().parse(in); }

Scenario parse_scenario(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(0, "", "cannot open " + path.string());
  return parse_scenario(in);
}

// ---------------------------------------------------------------------------

namespace {

std::string link_suffix(std::uint32_t depth, const LinkParams& p) {
  return " depth=" + std::to_string(depth) + " width=" + std::to_string(p.flit_payload_width) +
         " latency=" + std::to_string(p.latency) + " rate=" + std::to_string(p.rate_ratio);
}

std::string mix_string(const OpMix& m) {
  return "load:" + std::to_string(m.load) + ",store:" + std::to_string(m.store) + ",posted:" +
         std::to_string(m.posted) + ",excl:" + std::to_string(m.excl) + ",lock:" + std::to_string(m.lock) +
         ",miss:" + std::to_string(m.miss);
}

}  // namespace

std::string format_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "[run]\n";
  out << "mode = " << to_string(s.run.mode) << '\n';
  out << "max_cycles = " << s.run.max_cycles << '\n';
  out << "seed = " << s.run.seed << "\n\n";

  out << "[topology]\n";
  for (const auto& sw : s.topology.switches) out << "switch S" << sw.id << " ports=" << sw.ports << '\n';
  for (const auto& l : s.topology.links) {
    out << "link S" << l.a.sw << '.' << l.a.port << " S" << l.b.sw << '.' << l.b.port
        << link_suffix(l.depth, l.params) << '\n';
  }
  for (const auto& [id, a] : s.topology.niu_attachments) {
    out << "attach N" << id << " S" << a.at.sw << '.' << a.at.port << link_suffix(a.depth, a.params) << '\n';
  }
  if (s.auto_routes) {
    out << "routes auto\n";
  } else {
    for (const auto& [sw, row] : s.routes.entries()) {
      for (const auto& [target, port] : row) out << "route S" << sw << " N" << target << ' ' << port << '\n';
    }
  }

  out << "\n[nius]\n";
  for (const auto& [id, c] : s.initiators) {
    out << "initiator N" << id << " family=" << to_string(c.family) << " policy=" << to_string(c.policy.kind);
    if (c.policy.kind != TagPolicy::Kind::SingleOutstanding) out << " capacity=" << c.policy.count;
    out << " priority=" << unsigned{c.priority} << " max_payload=" << c.max_payload
        << " endianness=" << to_string(c.endianness) << " tag_bits=" << c.tag_bits << '\n';
  }
  for (const auto& [id, t] : s.targets) {
    out << "target N" << id << " base=" << hex32(t.base) << " size=" << hex32(t.size)
        << " memory=" << hex32(t.memory_size) << " granule=" << t.granule << " service=" << t.service_cycles
        << '\n';
  }

  out << "\n[workload]\n";
  for (const auto& [id, w] : s.workloads) {
    if (const auto* script = std::get_if<Script>(&w)) {
      for (const auto& step : *script) {
        const auto& r = step.request;
        out << "op N" << id << ' ' << to_string(r.opcode) << ' ' << hex32(r.address);
        if (step.fence) out << " fence";
        out << " burst=" << r.burst_len << " beat=" << r.beat_size << " key=" << to_string(r.socket_order_key);
        if (!r.data.empty()) out << " data=" << hex_string(r.data);
        out << '\n';
      }
    } else if (const auto* r = std::get_if<RandomWorkload>(&w)) {
      out << "random N" << id << " count=" << r->count << " max_burst=" << r->max_burst
          << " mix=" << mix_string(r->mix) << '\n';
    } else if (const auto* e = std::get_if<ExclusiveLoop>(&w)) {
      out << "exclusive_loop N" << id << " counter=" << hex32(e->counter) << " iterations=" << e->iterations << '\n';
    } else if (const auto* l = std::get_if<LockLoop>(&w)) {
      out << "lock_loop N" << id << " counter=" << hex32(l->counter) << " iterations=" << l->iterations << '\n';
    }
  }
  return out.str();
}

}  // namespace nocsim
