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

#include "nocsim/generate.hpp"

#include <algorithm>
#include <random>

namespace nocsim {

namespace {

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  std::uint32_t pick(std::uint32_t lo, std::uint32_t hi) {
    return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng_);
  }

  Scenario build(std::uint64_t seed, const GeneratorBounds& b) {
    Scenario s;
    s.run.seed = seed;
    s.run.mode = TransportMode::Wormhole;
    s.run.max_cycles = 400000;

    const std::uint32_t n_sw = pick(b.min_switches, b.max_switches);
    const std::uint32_t n_m = pick(b.min_masters, b.max_masters);
    const std::uint32_t n_t = pick(b.min_targets, b.max_targets);

    std::vector<PortId> next_port(n_sw, 0);
    std::vector<LinkDesc> links;
    for (std::uint32_t i = 1; i < n_sw; ++i) {
      const std::uint32_t parent = pick(0, i - 1);
      LinkDesc l;
      l.a = PortRef{static_cast<SwitchId>(parent), next_port[parent]++};
      l.b = PortRef{static_cast<SwitchId>(i), next_port[i]++};
      links.push_back(l);
    }

    auto attach = [&](NiuId id) {
      const std::uint32_t sw = pick(0, n_sw - 1);
      Attachment a;
      a.at = PortRef{static_cast<SwitchId>(sw), next_port[sw]++};
      s.topology.niu_attachments[id] = a;
    };

    std::vector<SocketFamily> families;
    for (std::uint32_t m = 0; m < n_m; ++m) families.push_back(static_cast<SocketFamily>(pick(0, 2)));
    if (std::all_of(families.begin(), families.end(), [&](auto f) { return f == families[0]; })) {
      families.back() = static_cast<SocketFamily>((static_cast<int>(families[0]) + 1) % 3);
    }

    for (std::uint32_t m = 0; m < n_m; ++m) {
      const NiuId id = static_cast<NiuId>(m);
      InitiatorConfig c;
      c.id = id;
      c.family = families[m];
      switch (pick(0, 2)) {
        case 0: c.policy = TagPolicy::single_outstanding(); break;
        case 1:
          c.policy = TagPolicy::per_stream(c.family == SocketFamily::IdBased ? pick(2, 8)
                                           : c.family == SocketFamily::Threaded ? pick(1, 4) : 1);
          break;
        default: c.policy = TagPolicy::pooled(pick(2, 8)); break;
      }
      static constexpr std::uint32_t kPayloads[] = {8, 16, 32};
      c.max_payload = kPayloads[pick(0, 2)];
      c.endianness = pick(0, 1) ? Endianness::Big : Endianness::Little;
      c.priority = static_cast<std::uint8_t>(pick(0, 3));
      s.initiators[id] = c;
      attach(id);

      RandomWorkload w;
      w.count = pick(b.min_ops, b.max_ops);
      w.max_burst = pick(1, 8);
      s.workloads[id] = w;
    }

    for (std::uint32_t t = 0; t < n_t; ++t) {
      const NiuId id = static_cast<NiuId>(100 + t);
      TargetConfig c;
      c.id = id;
      c.base = 0x10000 * (t + 1);
      c.size = 0x4000;
      c.memory_size = 0x4000;
      c.granule = 4u << pick(0, 2);
      c.service_cycles = pick(1, 3);
      s.targets[id] = c;
      attach(id);
    }

    for (std::uint32_t i = 0; i < n_sw; ++i) {
      s.topology.switches.push_back(SwitchDesc{static_cast<SwitchId>(i), std::max<PortId>(next_port[i], 1)});
    }
    s.topology.links = std::move(links);
    s.auto_routes = true;
    s.refresh_routes();
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

Scenario random_scenario(std::uint64_t seed, const GeneratorBounds& bounds) {
  return Builder(seed).build(seed, bounds);
}

}  // namespace nocsim
