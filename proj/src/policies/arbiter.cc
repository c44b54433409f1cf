// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/policies/arbiter.h"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "schedlab/logging.h"
#include "schedlab/wire.h"

namespace schedlab::policies {

std::vector<uint8_t> ArbiterRequest::Encode() const {
  wire::ByteWriter w;
  w.U32(kind);
  w.U32(app);
  w.U64(arg);
  return w.Take();
}

std::optional<ArbiterRequest> ArbiterRequest::Decode(
    std::span<const uint8_t> bytes) {
  if (bytes.size() != kWireSize) return std::nullopt;
  wire::ByteReader r(bytes);
  ArbiterRequest req;
  req.kind = r.U32();
  req.app = r.U32();
  req.arg = r.U64();
  return req;
}

std::vector<uint8_t> ArbiterReclaim::Encode() const {
  wire::ByteWriter w;
  w.U32(app);
  w.U32(core);
  return w.Take();
}

std::optional<ArbiterReclaim> ArbiterReclaim::Decode(
    std::span<const uint8_t> bytes) {
  if (bytes.size() != kWireSize) return std::nullopt;
  wire::ByteReader r(bytes);
  ArbiterReclaim rec;
  rec.app = r.U32();
  rec.core = r.U32();
  return rec;
}

ArbiterScheduler::ArbiterScheduler(Params params, LockFactory& locks)
    : params_(params),
      tag_(CapsuleTag("arbiter-state-v1")),
      lock_(locks.CreateLock()),
      cores_(params.num_cores),
      owner_(params.num_cores),
      last_owner_(params.num_cores) {
  CHECK_GT(params_.num_cores, 0u);
  CHECK_LT(params_.reserved_cores, params_.num_cores);
  CHECK_GT(params_.reserved_cores, 0u);
}

bool ArbiterScheduler::EligibleOn(TaskId task, uint32_t core) const {
  auto bound = task_app_.find(task.id);
  const bool reserved = core < params_.reserved_cores;
  if (bound == task_app_.end()) return reserved;  // unbound -> reserved only
  auto app = apps_.find(bound->second);
  const bool has_grants = app != apps_.end() && !app->second.granted.empty();
  if (!has_grants) return reserved;
  return owner_[core].has_value() && *owner_[core] == bound->second;
}

size_t ArbiterScheduler::LoadOn(uint32_t core) const {
  const CoreSlot& slot = cores_[core];
  return slot.fifo.size() + (slot.current.has_value() ? 1 : 0);
}

void ArbiterScheduler::Recompute() {
  const uint32_t grantable = grantable_cores();

  // Water-fill: apps whose request fits under the fair share take it
  // entirely; the rest split the remainder, extra cores to the later
  // requesters.
  std::vector<std::pair<uint64_t, uint32_t>> order;  // (first_seen, app)
  for (const auto& [app, state] : apps_) {
    if (state.requested > 0) order.emplace_back(state.first_seen, app);
  }
  std::sort(order.begin(), order.end());

  std::map<uint32_t, uint32_t> target;
  uint32_t pool = grantable;
  std::vector<uint32_t> open;
  for (const auto& [seen, app] : order) open.push_back(app);
  bool changed = true;
  while (changed && !open.empty()) {
    changed = false;
    const uint32_t fair = pool / static_cast<uint32_t>(open.size());
    for (auto it = open.begin(); it != open.end();) {
      const uint32_t want = apps_[*it].requested;
      if (want <= fair) {
        target[*it] = want;
        pool -= want;
        it = open.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  if (!open.empty()) {
    const uint32_t base = pool / static_cast<uint32_t>(open.size());
    uint32_t extra = pool % static_cast<uint32_t>(open.size());
    for (auto it = open.rbegin(); it != open.rend(); ++it) {
      uint32_t t = base + (extra > 0 ? 1 : 0);
      if (extra > 0) --extra;
      target[*it] = std::min(t, apps_[*it].requested);
    }
  }

  // Reclaim overages, newest grants first.
  for (auto& [app, state] : apps_) {
    const uint32_t want = target.contains(app) ? target[app] : 0;
    while (state.granted.size() > want) {
      const uint32_t core = *state.granted.rbegin();
      state.granted.erase(std::prev(state.granted.end()));
      owner_[core].reset();
      last_owner_[core] = app;
      if (outbox_ != nullptr) {
        ArbiterReclaim note{app, core};
        outbox_->Push(note.Encode());  // full outbox drops the notice
      }
    }
  }

  // Grant shortfalls from the free pool, warm cores first.
  for (const auto& [seen, app] : order) {
    AppState& state = apps_[app];
    const uint32_t want = target.contains(app) ? target[app] : 0;
    while (state.granted.size() < want) {
      std::optional<uint32_t> chosen;
      for (uint32_t c = params_.reserved_cores; c < params_.num_cores; ++c) {
        if (owner_[c].has_value()) continue;
        if (last_owner_[c] == app) {
          chosen = c;
          break;
        }
        if (!chosen.has_value()) chosen = c;
      }
      CHECK(chosen.has_value());
      owner_[*chosen] = app;
      state.granted.insert(*chosen);
    }
  }
}

PickDecision ArbiterScheduler::PickNextTask(CoreId core,
                                            std::optional<Schedulable> current,
                                            uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  CoreSlot& slot = cores_[core.index];

  auto take_eligible = [&]() -> std::optional<Schedulable> {
    for (auto it = slot.fifo.begin(); it != slot.fifo.end(); ++it) {
      if (EligibleOn(it->first, core.index)) {
        Schedulable token = std::move(it->second);
        slot.fifo.erase(it);
        return token;
      }
    }
    return std::nullopt;
  };

  if (current.has_value()) {
    const TaskId cur = current->task();
    const bool cur_ok = EligibleOn(cur, core.index);
    std::optional<Schedulable> next;
    if (cur_ok && slot.fifo.empty()) {
      slot.current = cur;
      return PickDecision{std::move(current)};
    }
    slot.fifo.emplace_back(cur, std::move(*current));
    next = take_eligible();
    if (!next.has_value()) {
      slot.current.reset();
      return PickDecision{};
    }
    slot.current = next->task();
    return PickDecision{std::move(next)};
  }

  std::optional<Schedulable> next = take_eligible();
  if (!next.has_value()) {
    slot.current.reset();
    return PickDecision{};
  }
  slot.current = next->task();
  return PickDecision{std::move(next)};
}

void ArbiterScheduler::PntErr(CoreId core, Schedulable rejected) {
  FrameworkLockGuard guard(*lock_);
  (void)core;
  CoreSlot& slot = cores_[rejected.core().index];
  if (slot.current == rejected.task()) slot.current.reset();
  slot.fifo.emplace_back(rejected.task(), std::move(rejected));
}

void ArbiterScheduler::TaskNew(TaskId task, Nice nice, Schedulable token) {
  FrameworkLockGuard guard(*lock_);
  (void)nice;
  cores_[token.core().index].fifo.emplace_back(task, std::move(token));
}

void ArbiterScheduler::TaskWakeup(TaskId task, Schedulable token,
                                  uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  cores_[token.core().index].fifo.emplace_back(task, std::move(token));
}

std::optional<Schedulable> ArbiterScheduler::Remove(TaskId task) {
  for (CoreSlot& slot : cores_) {
    if (slot.current == task) {
      slot.current.reset();
      return std::nullopt;
    }
    auto it = std::find_if(slot.fifo.begin(), slot.fifo.end(),
                           [task](const auto& e) { return e.first == task; });
    if (it != slot.fifo.end()) {
      Schedulable token = std::move(it->second);
      slot.fifo.erase(it);
      return token;
    }
  }
  return std::nullopt;
}

std::optional<Schedulable> ArbiterScheduler::TaskBlocked(
    TaskId task, uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  return Remove(task);
}

std::optional<Schedulable> ArbiterScheduler::TaskDead(
    TaskId task, uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  std::optional<Schedulable> out = Remove(task);
  task_app_.erase(task.id);
  return out;
}

TickDecision ArbiterScheduler::TaskTick(CoreId core, TaskId task,
                                        uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  // Grants are whole cores: the only preemption is eviction after a
  // reclaim.
  return TickDecision{!EligibleOn(task, core.index)};
}

CoreId ArbiterScheduler::SelectTaskRq(TaskId task, Nice nice) {
  FrameworkLockGuard guard(*lock_);
  (void)nice;
  std::optional<uint32_t> best;
  size_t best_load = SIZE_MAX;
  for (uint32_t c = 0; c < params_.num_cores; ++c) {
    if (!EligibleOn(task, c)) continue;
    const size_t load = LoadOn(c);
    if (load < best_load) {
      best_load = load;
      best = c;
    }
  }
  return CoreId{best.value_or(0)};
}

std::optional<Schedulable> ArbiterScheduler::MigrateTaskRq(
    TaskId task, Schedulable new_token) {
  FrameworkLockGuard guard(*lock_);
  for (CoreSlot& slot : cores_) {
    auto it = std::find_if(slot.fifo.begin(), slot.fifo.end(),
                           [task](const auto& e) { return e.first == task; });
    if (it != slot.fifo.end()) {
      Schedulable old = std::move(it->second);
      slot.fifo.erase(it);
      cores_[new_token.core().index].fifo.emplace_back(task,
                                                       std::move(new_token));
      return old;
    }
  }
  throw std::runtime_error("arbiter: unqueued migrate");
}

std::optional<BalanceDecision> ArbiterScheduler::Balance(CoreId idle_core) {
  FrameworkLockGuard guard(*lock_);
  // Pull the oldest stray that belongs here: a task queued on a core
  // where it is no longer eligible (typically after a reclaim).
  for (uint32_t c = 0; c < params_.num_cores; ++c) {
    if (c == idle_core.index) continue;
    for (const auto& [task, token] : cores_[c].fifo) {
      if (!EligibleOn(task, c) && EligibleOn(task, idle_core.index)) {
        return BalanceDecision{task, CoreId{c}, idle_core};
      }
    }
  }
  return std::nullopt;
}

void ArbiterScheduler::BalanceErr(CoreId core, TaskId task,
                                  std::optional<Schedulable> token) {
  FrameworkLockGuard guard(*lock_);
  (void)core;
  (void)task;
  if (token.has_value()) {
    const TaskId id = token->task();
    cores_[token->core().index].fifo.emplace_back(id, std::move(*token));
  }
}

bool ArbiterScheduler::RegisterQueue(const QueueSpec& spec) {
  FrameworkLockGuard guard(*lock_);
  if (spec.direction == HintDirection::kUserToSched) {
    return spec.record_width == ArbiterRequest::kWireSize;
  }
  if (spec.record_width != ArbiterReclaim::kWireSize || spec.queue == nullptr) {
    return false;
  }
  outbox_ = spec.queue;
  return true;
}

void ArbiterScheduler::ParseHint(uint64_t queue_id,
                                 std::span<const uint8_t> record) {
  FrameworkLockGuard guard(*lock_);
  (void)queue_id;
  std::optional<ArbiterRequest> req = ArbiterRequest::Decode(record);
  if (!req.has_value()) return;
  if (req->kind == ArbiterRequest::kBindTask) {
    task_app_[req->arg] = req->app;
    return;
  }
  AppState& state = apps_[req->app];
  if (state.first_seen == 0) state.first_seen = ++hint_seq_;
  state.requested =
      static_cast<uint32_t>(std::min<uint64_t>(req->arg, grantable_cores()));
  Recompute();
}

UpgradeCapsule ArbiterScheduler::ReregisterPrep() {
  FrameworkLockGuard guard(*lock_);
  UpgradeCapsule capsule(tag_);
  wire::ByteWriter w;
  w.U32(params_.num_cores);
  for (CoreSlot& slot : cores_) {
    w.Bool(slot.current.has_value());
    w.U64(slot.current.has_value() ? slot.current->id : 0);
    w.U32(static_cast<uint32_t>(slot.fifo.size()));
    for (auto& [task, token] : slot.fifo) {
      w.U64(task.id);
      capsule.tokens.push_back(std::move(token));
    }
    slot.fifo.clear();
    slot.current.reset();
  }
  for (uint32_t c = 0; c < params_.num_cores; ++c) {
    w.Bool(owner_[c].has_value());
    w.U32(owner_[c].value_or(0));
    w.Bool(last_owner_[c].has_value());
    w.U32(last_owner_[c].value_or(0));
  }
  w.U32(static_cast<uint32_t>(apps_.size()));
  for (const auto& [app, state] : apps_) {
    w.U32(app);
    w.U32(state.requested);
    w.U64(state.first_seen);
    w.U32(static_cast<uint32_t>(state.granted.size()));
    for (uint32_t c : state.granted) w.U32(c);
  }
  std::vector<std::pair<uint64_t, uint32_t>> bindings(task_app_.begin(),
                                                      task_app_.end());
  std::sort(bindings.begin(), bindings.end());
  w.U32(static_cast<uint32_t>(bindings.size()));
  for (const auto& [task, app] : bindings) {
    w.U64(task);
    w.U32(app);
  }
  w.U64(hint_seq_);
  if (outbox_ != nullptr) capsule.queues.push_back(outbox_);
  apps_.clear();
  task_app_.clear();
  for (auto& o : owner_) o.reset();
  capsule.bytes = w.Take();
  return capsule;
}

bool ArbiterScheduler::ReregisterInit(UpgradeCapsule& capsule) {
  FrameworkLockGuard guard(*lock_);
  if (capsule.format_tag != tag_) return false;
  wire::ByteReader r(capsule.bytes);
  if (r.U32() != params_.num_cores) return false;
  size_t cursor = 0;
  for (CoreSlot& slot : cores_) {
    const bool has = r.Bool();
    const uint64_t cur = r.U64();
    slot.current = has ? std::optional<TaskId>(TaskId{cur}) : std::nullopt;
    const uint32_t depth = r.U32();
    for (uint32_t i = 0; i < depth; ++i) {
      const TaskId id{r.U64()};
      if (cursor >= capsule.tokens.size()) return false;
      if (capsule.tokens[cursor].task() != id) return false;
      slot.fifo.emplace_back(id, std::move(capsule.tokens[cursor]));
      ++cursor;
    }
  }
  for (uint32_t c = 0; c < params_.num_cores; ++c) {
    const bool has_owner = r.Bool();
    const uint32_t app = r.U32();
    owner_[c] = has_owner ? std::optional<uint32_t>(app) : std::nullopt;
    const bool has_last = r.Bool();
    const uint32_t last = r.U32();
    last_owner_[c] = has_last ? std::optional<uint32_t>(last) : std::nullopt;
  }
  const uint32_t n_apps = r.U32();
  for (uint32_t i = 0; i < n_apps; ++i) {
    const uint32_t app = r.U32();
    AppState state;
    state.requested = r.U32();
    state.first_seen = r.U64();
    const uint32_t n_granted = r.U32();
    for (uint32_t g = 0; g < n_granted; ++g) state.granted.insert(r.U32());
    apps_.emplace(app, std::move(state));
  }
  const uint32_t n_bind = r.U32();
  for (uint32_t i = 0; i < n_bind; ++i) {
    const uint64_t task = r.U64();
    task_app_[task] = r.U32();
  }
  hint_seq_ = r.U64();
  if (!r.ok()) return false;
  if (!capsule.queues.empty()) outbox_ = capsule.queues.front();
  capsule.tokens.clear();
  capsule.bytes.clear();
  capsule.queues.clear();
  return true;
}

std::optional<uint32_t> ArbiterScheduler::OwnerOf(CoreId core) const {
  FrameworkLockGuard guard(*lock_);
  return owner_[core.index];
}

std::vector<uint32_t> ArbiterScheduler::GrantsOf(uint32_t app) const {
  FrameworkLockGuard guard(*lock_);
  auto it = apps_.find(app);
  if (it == apps_.end()) return {};
  return std::vector<uint32_t>(it->second.granted.begin(),
                               it->second.granted.end());
}

uint32_t ArbiterScheduler::RequestOf(uint32_t app) const {
  FrameworkLockGuard guard(*lock_);
  auto it = apps_.find(app);
  return it == apps_.end() ? 0 : it->second.requested;
}

std::optional<uint32_t> ArbiterScheduler::AppOf(TaskId task) const {
  FrameworkLockGuard guard(*lock_);
  auto it = task_app_.find(task.id);
  if (it == task_app_.end()) return std::nullopt;
  return it->second;
}

}  // namespace schedlab::policies
