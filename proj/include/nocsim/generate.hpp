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
 * @file generate.hpp
 * @brief Seeded random scenarios for property and equivalence testing.
 *
 * Topologies are trees of switches, so the shortest-path routes toward any
 * target form a tree as well.
 */

#pragma once

#include "nocsim/scenario.hpp"

namespace nocsim {

struct GeneratorBounds {
  std::uint32_t min_switches = 2, max_switches = 6;
  std::uint32_t min_masters = 2, max_masters = 8;
  std::uint32_t min_targets = 1, max_targets = 3;
  std::uint32_t min_ops = 200, max_ops = 1000;
};

Scenario random_scenario(std::uint64_t seed, const GeneratorBounds& bounds = {});

}  // namespace nocsim
