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

// nocsim: batch front-end for the NoC simulator.
//
// Exit codes: 0 clean, 1 configuration error, 2 timeout, 3 invariant
// violation, 4 comparison mismatch.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nocsim/analysis.hpp"
#include "nocsim/engine.hpp"
#include "nocsim/error.hpp"
#include "nocsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace nocsim;

namespace {

enum Exit : int { kClean = 0, kConfig = 1, kTimeout = 2, kViolation = 3, kMismatch = 4 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<Cycle> max_cycles;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Scenario load(const fs::path& path, const Overrides& o) {
  if (!fs::exists(path)) throw ConfigError("scenario " + path.string() + " does not exist");
  Scenario s;
  try {
    s = load_scenario(path);
  } catch (const ScenarioError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (o.seed) s.run.seed = *o.seed;
  if (o.max_cycles) {
    if (*o.max_cycles == 0) throw ConfigError("--max-cycles must be at least 1");
    s.run.max_cycles = *o.max_cycles;
  }
  if (o.mode) {
    auto m = parse_mode(*o.mode);
    if (!m) throw ConfigError("--mode: expected wormhole or store_and_forward, got '" + *o.mode + "'");
    s.run.mode = *m;
  }
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

/// Exit code of a finished run, printing the reason.
int judge(const std::string& label, const RunResult& r, const Scenario& s) {
  if (r.fault) {
    std::cerr << label << ": fault: " << *r.fault << '\n';
    return kViolation;
  }
  if (r.timed_out) {
    std::cerr << label << ": timeout after " << r.stats.cycles << " cycles, " << r.stuck.size()
              << " transactions stuck\n"
              << format_stuck(r.stuck);
    return kTimeout;
  }
  auto v = check_invariants(r.trace, s);
  if (!v.empty()) {
    std::cerr << label << ": " << v.size() << " invariant violations\n";
    for (const auto& line : v) std::cerr << "  " << line << '\n';
    return kViolation;
  }
  return kClean;
}

/// Scenarios whose final memory the sequential model predicts exactly.
bool oracle_applies(const Scenario& s) {
  for (const auto& [id, cfg] : s.initiators) {
    auto w = s.workloads.find(id);
    if (w == s.workloads.end()) continue;
    const bool loop = std::holds_alternative<ExclusiveLoop>(w->second) || std::holds_alternative<LockLoop>(w->second);
    const bool random = std::holds_alternative<RandomWorkload>(w->second);
    if (!loop && !random && cfg.policy.kind != TagPolicy::Kind::SingleOutstanding) return false;
  }
  return true;
}

int cmd_run(const fs::path& scenario, const Overrides& o, const fs::path& out) {
  Scenario s = load(scenario, o);
  RunResult r = run(s);
  fs::create_directories(out);
  write_file(out / "trace.csv", r.trace.to_csv());
  write_file(out / "stats.txt", format_stats(r, s));
  const int code = judge(scenario.filename().string(), r, s);
  if (code == kClean) {
    std::cout << scenario.filename().string() << ": ok, " << r.stats.completed << " responses in " << r.stats.cycles
              << " cycles\n";
  }
  return code;
}

int cmd_verify(const fs::path& dir, const Overrides& o) {
  if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".scn") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .scn files in " + dir.string());

  bool config = false, violation = false, timeout = false;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    Scenario s;
    try {
      s = load(f, o);
    } catch (const ConfigError& e) {
      std::cout << "FAIL " << name << ": " << e.what() << '\n';
      config = true;
      continue;
    }
    RunResult r = run(s);
    int code = judge(name, r, s);
    if (code == kClean && oracle_applies(s) && r.memory != sequential_oracle(s)) {
      std::cerr << name << ": final memory differs from the sequential model\n";
      code = kViolation;
    }
    std::cout << (code == kClean ? "PASS " : "FAIL ") << name << '\n';
    violation |= code == kViolation;
    timeout |= code == kTimeout;
  }
  if (config) return kConfig;
  if (violation) return kViolation;
  if (timeout) return kTimeout;
  return kClean;
}

struct Leg {
  std::string label;
  Scenario scenario;
  RunResult result;
};

/// Runs the legs (in parallel), judges each, then compares every leg against
/// the first.
int compare(std::vector<Leg>& legs, bool corrupt, const std::optional<fs::path>& out) {
  std::vector<std::future<RunResult>> futures;
  for (auto& leg : legs) futures.push_back(std::async(std::launch::async, [&leg] { return run(leg.scenario); }));
  for (std::size_t i = 0; i < legs.size(); ++i) legs[i].result = futures[i].get();

  if (corrupt && legs.size() > 1) {
    // Test hook: flip the status of the first response of the second leg.
    for (auto& e : legs[1].result.trace.events()) {
      if (e.kind == TraceKind::RespEmitted && e.status) {
        e.status = *e.status == Status::Okay ? Status::ErrorSlave : Status::Okay;
        break;
      }
    }
  }

  for (auto& leg : legs) {
    if (out) {
      fs::create_directories(*out);
      write_file(*out / ("trace-" + leg.label + ".csv"), leg.result.trace.to_csv());
      write_file(*out / ("stats-" + leg.label + ".txt"), format_stats(leg.result, leg.scenario));
    }
    if (leg.result.fault || leg.result.timed_out) return judge(leg.label, leg.result, leg.scenario);
  }
  if (!corrupt) {
    for (auto& leg : legs) {
      if (int code = judge(leg.label, leg.result, leg.scenario); code != kClean) return code;
    }
  }

  const Projection reference = transaction_projection(legs[0].result.trace);
  for (std::size_t i = 1; i < legs.size(); ++i) {
    if (auto d = first_divergence(reference, transaction_projection(legs[i].result.trace))) {
      std::cout << "MISMATCH " << legs[0].label << " vs " << legs[i].label << ": " << *d << '\n';
      return kMismatch;
    }
    if (legs[i].result.memory != legs[0].result.memory) {
      std::cout << "MISMATCH " << legs[0].label << " vs " << legs[i].label << ": final memory images differ\n";
      return kMismatch;
    }
  }
  std::cout << "EQUAL across " << legs.size() << " runs\n";
  return kClean;
}

int cmd_compare_modes(const fs::path& scenario, const Overrides& o, std::optional<std::uint64_t> wh_seed,
                      std::optional<std::uint64_t> saf_seed, bool corrupt, const std::optional<fs::path>& out) {
  Scenario s = load(scenario, o);
  const std::uint64_t a = wh_seed.value_or(s.run.seed);
  const std::uint64_t b = saf_seed.value_or(s.run.seed);
  if (a != b) throw ConfigError("both legs must use the same seed (got " + std::to_string(a) + " and " +
                                std::to_string(b) + ")");
  std::vector<Leg> legs(2);
  legs[0].label = "wormhole";
  legs[0].scenario = s;
  legs[0].scenario.run.mode = TransportMode::Wormhole;
  legs[1].label = "store_and_forward";
  legs[1].scenario = s;
  legs[1].scenario.run.mode = TransportMode::StoreAndForward;
  return compare(legs, corrupt, out);
}

int cmd_compare_links(const fs::path& scenario, const Overrides& o, const std::optional<fs::path>& out) {
  Scenario s = load(scenario, o);
  std::vector<Leg> legs;
  for (std::uint32_t width : {4u, 8u, 16u}) {
    for (std::uint32_t latency : {1u, 3u}) {
      for (std::uint32_t rate : {1u, 2u}) {
        Leg leg;
        leg.label = "w" + std::to_string(width) + "-l" + std::to_string(latency) + "-r" + std::to_string(rate);
        leg.scenario = s;
        leg.scenario.set_all_link_params(LinkParams{width, latency, rate});
        legs.push_back(std::move(leg));
      }
    }
  }
  return compare(legs, false, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nocsim: network-on-chip transaction/transport simulator"};
  app.require_subcommand(1);

  Overrides o;
  std::string out_dir = "nocsim-out";
  std::string path;
  std::optional<std::uint64_t> wh_seed, saf_seed;
  bool corrupt = false;
  bool out_given = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Override the scenario seed");
    sub->add_option("--mode", o.mode, "Override the transport mode (wormhole | store_and_forward)");
    sub->add_option("--max-cycles", o.max_cycles, "Override the cycle budget");
  };

  auto* run_cmd = app.add_subcommand("run", "Run one scenario; write trace.csv and stats.txt");
  run_cmd->add_option("scenario", path, "Scenario file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory");
  add_common(run_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "Run and check every .scn file in a directory");
  verify_cmd->add_option("directory", path, "Scenario directory")->required();
  add_common(verify_cmd);

  auto* modes_cmd = app.add_subcommand("compare-modes", "Compare wormhole and store-and-forward projections");
  modes_cmd->add_option("scenario", path, "Scenario file")->required();
  modes_cmd->add_option("--out", out_dir, "Write per-leg traces here")->each([&](const std::string&) { out_given = true; });
  modes_cmd->add_option("--wormhole-seed", wh_seed, "Seed of the wormhole leg");
  modes_cmd->add_option("--saf-seed", saf_seed, "Seed of the store-and-forward leg");
  modes_cmd->add_flag("--corrupt-second-leg", corrupt, "Test hook: perturb one response of the second leg")
      ->group("");
  add_common(modes_cmd);

  auto* links_cmd = app.add_subcommand("compare-links", "Sweep link parameters and compare projections");
  links_cmd->add_option("scenario", path, "Scenario file")->required();
  links_cmd->add_option("--out", out_dir, "Write per-leg traces here")->each([&](const std::string&) { out_given = true; });
  add_common(links_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  std::optional<fs::path> out;
  if (out_given) out = out_dir;
  try {
    if (run_cmd->parsed()) return cmd_run(path, o, out_dir);
    if (verify_cmd->parsed()) return cmd_verify(path, o);
    if (modes_cmd->parsed()) return cmd_compare_modes(path, o, wh_seed, saf_seed, corrupt, out);
    if (links_cmd->parsed()) return cmd_compare_links(path, o, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  return kConfig;
}
