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

#include "nocsim/workload.hpp"

#include <algorithm>

namespace nocsim {

Window private_window(const TargetConfig& t, std::size_t slot, std::size_t slots) {
  const std::uint32_t usable = std::min(t.size, t.memory_size);
  const auto slice = static_cast<std::uint32_t>(usable / std::max<std::size_t>(slots, 1) / 64 * 64);
  return Window{static_cast<Address>(t.base + slot * slice), slice};
}

std::optional<Address> unmapped_address(const AddressMap& map) {
  constexpr std::uint64_t kGap = 64;
  std::uint64_t cursor = 0;
  for (const auto& r : map.regions()) {
    if (r.base >= cursor + kGap) return static_cast<Address>(cursor);
    cursor = std::uint64_t{r.base} + r.size;
  }
  if (cursor + kGap <= (std::uint64_t{1} << kAddressBits)) return static_cast<Address>(cursor);
  return std::nullopt;
}

std::map<NiuId, std::size_t> random_slots(const Scenario& scenario) {
  std::map<NiuId, std::size_t> slots;
  for (const auto& [id, w] : scenario.workloads) {
    if (std::holds_alternative<RandomWorkload>(w)) slots.emplace(id, slots.size());
  }
  return slots;
}

std::uint32_t decode_u32(const Bytes& data, Endianness e) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4 && i < data.size(); ++i) {
    const std::size_t shift = e == Endianness::Little ? i : 3 - i;
    v |= std::uint32_t{data[i]} << (8 * shift);
  }
  return v;
}

Bytes encode_u32(std::uint32_t value, Endianness e) {
  Bytes out(4);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t shift = e == Endianness::Little ? i : 3 - i;
    out[i] = static_cast<std::uint8_t>(value >> (8 * shift));
  }
  return out;
}

namespace {

class Generator {
 public:
  Generator(const RandomWorkload& w, const InitiatorConfig& cfg, const Scenario& s, std::size_t slot,
            std::size_t slots, std::uint64_t seed)
      : w_(w), cfg_(cfg), rng_(seed ^ (0x9E3779B97F4A7C15ull * (cfg.id + 1ull))) {
    for (const auto& [id, t] : s.targets) windows_.push_back(private_window(t, slot, slots));
    miss_ = unmapped_address(s.address_map());
    for (std::uint32_t b : {1u, 2u, 4u, 8u}) {
      if (b <= cfg.max_payload) beats_.push_back(b);
    }
    const bool per_stream = cfg.policy.kind == TagPolicy::Kind::PerStream;
    switch (cfg.family) {
      case SocketFamily::FullyOrdered: streams_ = 1; break;
      case SocketFamily::Threaded: streams_ = per_stream ? cfg.policy.count : 4; break;
      case SocketFamily::IdBased: streams_ = per_stream ? cfg.policy.count / 2 : 4; break;
    }
    streams_ = std::clamp<std::uint32_t>(streams_, 1, 256);
  }

  Script run() {
    Script out;
    out.reserve(w_.count);
    bool fence_next = false;
    while (out.size() < w_.count) {
      const std::size_t left = w_.count - out.size();
      auto kind = draw_kind();
      if ((kind == Kind::Lock || kind == Kind::Excl) && left < 2) kind = Kind::Load;
      if (kind == Kind::Miss && !miss_) kind = Kind::Load;

      std::vector<ScriptStep> steps;
      switch (kind) {
        case Kind::Load: steps.push_back(plain(Opcode::Load)); break;
        case Kind::Store: steps.push_back(plain(Opcode::Store)); break;
        case Kind::Posted: steps.push_back(plain(Opcode::StorePosted)); break;
        case Kind::Miss: steps.push_back(miss()); break;
        case Kind::Excl: exclusive(steps); break;
        case Kind::Lock: lock(steps); break;
      }
      if (fence_next) steps.front().fence = true;
      fence_next = kind == Kind::Lock;
      for (auto& s : steps) out.push_back(std::move(s));
    }
    return out;
  }

 private:
  enum class Kind { Load, Store, Posted, Excl, Lock, Miss };

  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
  }

  Kind draw_kind() {
    auto r = uniform(0, w_.mix.total() - 1);
    const std::uint32_t weights[] = {w_.mix.load, w_.mix.store, w_.mix.posted, w_.mix.excl, w_.mix.lock, w_.mix.miss};
    for (std::size_t i = 0; i < std::size(weights); ++i) {
      if (r < weights[i]) return static_cast<Kind>(i);
      r -= weights[i];
    }
    return Kind::Load;
  }

  SocketOrderKey key(Opcode op) {
    const auto s = static_cast<std::uint8_t>(uniform(0, streams_ - 1));
    switch (cfg_.family) {
      case SocketFamily::FullyOrdered: return SingleKey{};
      case SocketFamily::Threaded: return ThreadKey{s};
      case SocketFamily::IdBased: return TxnIdKey{s, natural_channel(op)};
    }
    return SingleKey{};
  }

  Bytes random_bytes(std::size_t n) {
    Bytes out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(uniform(0, 255));
    return out;
  }

  TransactionRequest base(Opcode op) {
    TransactionRequest r;
    r.master_id = cfg_.id;
    r.opcode = op;
    r.exclusive_flag = is_exclusive(op);
    r.socket_order_key = key(op);
    return r;
  }

  const Window& window() { return windows_[uniform(0, windows_.size() - 1)]; }

  ScriptStep plain(Opcode op) {
    auto r = base(op);
    const Window& win = window();
    r.beat_size = beats_[uniform(0, beats_.size() - 1)];
    const std::uint32_t max_burst = std::min<std::uint32_t>(w_.max_burst, win.size / r.beat_size);
    r.burst_len = static_cast<std::uint32_t>(uniform(1, max_burst));
    const std::uint32_t bytes = r.byte_count();
    r.address = win.base + static_cast<Address>(uniform(0, (win.size - bytes) / r.beat_size) * r.beat_size);
    if (writes_memory(op)) r.data = random_bytes(bytes);
    return {std::move(r), false};
  }

  ScriptStep miss() {
    auto r = base(uniform(0, 1) ? Opcode::Store : Opcode::Load);
    r.address = *miss_ + static_cast<Address>(uniform(0, 15) * 4);
    if (writes_memory(r.opcode)) r.data = random_bytes(4);
    return {std::move(r), false};
  }

  Address word_in(const Window& win) {
    return win.base + static_cast<Address>(uniform(0, win.size / 4 - 1) * 4);
  }

  void exclusive(std::vector<ScriptStep>& steps) {
    const Window& win = window();
    const Address a = word_in(win);
    // Now and then an exclusive store with no matching load, which must fail.
    if (uniform(0, 7) != 0) {
      auto ld = base(Opcode::LoadExclusive);
      ld.address = a;
      steps.push_back({std::move(ld), false});
    }
    auto st = base(Opcode::StoreExclusive);
    st.address = a;
    st.data = random_bytes(4);
    steps.push_back({std::move(st), false});
    if (steps.size() == 1) steps.push_back(plain(Opcode::Load));
  }

  void lock(std::vector<ScriptStep>& steps) {
    const Window& win = window();
    const Address a = word_in(win);
    auto rd = base(Opcode::ReadEx);
    rd.address = a;
    auto rel = base(Opcode::StoreLockedRelease);
    rel.address = a;
    rel.data = random_bytes(4);
    steps.push_back({std::move(rd), true});
    steps.push_back({std::move(rel), true});
  }

  const RandomWorkload& w_;
  const InitiatorConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<Window> windows_;
  std::vector<std::uint32_t> beats_;
  std::optional<Address> miss_;
  std::uint32_t streams_ = 1;
};

class ScriptProgram final : public MasterProgram {
 public:
  explicit ScriptProgram(Script script) : script_(std::move(script)) {}

  const ScriptStep* current() override { return next_ < script_.size() ? &script_[next_] : nullptr; }
  void accepted() override { ++next_; }
  void on_response(Opcode, const TransactionResponse&) override {}
  bool finished() const override { return next_ >= script_.size(); }

 private:
  Script script_;
  std::size_t next_ = 0;
};

/// Read-modify-write increment loop. `exclusive` selects the
/// LOAD_EXCLUSIVE / STORE_EXCLUSIVE retry loop, otherwise READEX /
/// STORE_LOCKED_RELEASE.
class LoopProgram final : public MasterProgram {
 public:
  LoopProgram(const InitiatorConfig& cfg, Address counter, std::uint32_t iterations, bool exclusive)
      : cfg_(cfg), counter_(counter), target_(iterations), exclusive_(exclusive) {
    if (target_ > 0) load();
  }

  const ScriptStep* current() override { return state_ == State::Ready ? &step_ : nullptr; }
  void accepted() override { state_ = State::Waiting; }

  void on_response(Opcode opcode, const TransactionResponse& r) override {
    if (opcode == read_op()) {
      if (r.status == Status::ErrorDecode || r.status == Status::ErrorSlave) return abort();
      store(decode_u32(r.data, cfg_.endianness) + 1);
      return;
    }
    if (r.status == Status::ExFail) {
      ++exfails_;
      load();
      return;
    }
    if (r.status == Status::ErrorDecode || r.status == Status::ErrorSlave) return abort();
    if (++done_ == target_) {
      state_ = State::Done;
    } else {
      load();
    }
  }

  bool finished() const override { return state_ == State::Done; }
  std::uint32_t iterations() const override { return done_; }
  std::uint64_t exfails() const override { return exfails_; }

 private:
  enum class State { Ready, Waiting, Done };

  Opcode read_op() const { return exclusive_ ? Opcode::LoadExclusive : Opcode::ReadEx; }
  Opcode write_op() const { return exclusive_ ? Opcode::StoreExclusive : Opcode::StoreLockedRelease; }

  SocketOrderKey key(Opcode op) const {
    switch (cfg_.family) {
      case SocketFamily::FullyOrdered: return SingleKey{};
      case SocketFamily::Threaded: return ThreadKey{0};
      case SocketFamily::IdBased: return TxnIdKey{0, natural_channel(op)};
    }
    return SingleKey{};
  }

  void prepare(Opcode op) {
    step_ = ScriptStep{};
    auto& r = step_.request;
    r.master_id = cfg_.id;
    r.opcode = op;
    r.address = counter_;
    r.beat_size = 4;
    r.exclusive_flag = is_exclusive(op);
    r.socket_order_key = key(op);
    state_ = State::Ready;
  }

  void load() { prepare(read_op()); }

  void store(std::uint32_t value) {
    prepare(write_op());
    step_.request.data = encode_u32(value, cfg_.endianness);
  }

  void abort() { state_ = State::Done; }

  InitiatorConfig cfg_;
  Address counter_;
  std::uint32_t target_;
  bool exclusive_;
  State state_ = State::Done;
  ScriptStep step_;
  std::uint32_t done_ = 0;
  std::uint64_t exfails_ = 0;
};

}  // namespace

Script expand_random(const RandomWorkload& workload, const InitiatorConfig& cfg, const Scenario& scenario,
                     std::size_t slot, std::size_t slots, std::uint64_t seed) {
  return Generator(workload, cfg, scenario, slot, slots, seed).run();
}

std::unique_ptr<MasterProgram> make_program(const Scenario& scenario, NiuId initiator) {
  const auto& cfg = scenario.initiators.at(initiator);
  auto it = scenario.workloads.find(initiator);
  if (it == scenario.workloads.end()) return std::make_unique<ScriptProgram>(Script{});
  const Workload& w = it->second;
  if (const auto* script = std::get_if<Script>(&w)) return std::make_unique<ScriptProgram>(*script);
  if (const auto* r = std::get_if<RandomWorkload>(&w)) {
    auto slots = random_slots(scenario);
    return std::make_unique<ScriptProgram>(
        expand_random(*r, cfg, scenario, slots.at(initiator), slots.size(), scenario.run.seed));
  }
  if (const auto* e = std::get_if<ExclusiveLoop>(&w)) {
    return std::make_unique<LoopProgram>(cfg, e->counter, e->iterations, true);
  }
  const auto& l = std::get<LockLoop>(w);
  return std::make_unique<LoopProgram>(cfg, l.counter, l.iterations, false);
}

}  // namespace nocsim
