// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/policies/locality.h"

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>

#include "schedlab/logging.h"
#include "schedlab/wire.h"

namespace schedlab::policies {

std::vector<uint8_t> LocalityHint::Encode() const {
  wire::ByteWriter w;
  w.U64(task);
  w.U32(group);
  w.U32(reserved);
  return w.Take();
}

std::optional<LocalityHint> LocalityHint::Decode(
    std::span<const uint8_t> bytes) {
  if (bytes.size() != kWireSize) return std::nullopt;
  wire::ByteReader r(bytes);
  LocalityHint h;
  h.task = r.U64();
  h.group = r.U32();
  h.reserved = r.U32();
  return h;
}

LocalityScheduler::LocalityScheduler(Params params, LockFactory& locks)
    : params_(params),
      tag_(CapsuleTag("locality-state-v1")),
      lock_(locks.CreateLock()),
      cores_(params.num_cores),
      rng_(params.seed) {
  CHECK_GT(params_.num_cores, 0u);
}

size_t LocalityScheduler::LoadOn(uint32_t core) const {
  const CoreSlot& slot = cores_[core];
  return slot.fifo.size() + (slot.current.has_value() ? 1 : 0);
}

uint32_t LocalityScheduler::LeastLoadedCore() const {
  uint32_t best = 0;
  size_t best_load = SIZE_MAX;
  for (uint32_t i = 0; i < params_.num_cores; ++i) {
    const size_t load = LoadOn(i);
    if (load < best_load) {
      best_load = load;
      best = i;
    }
  }
  return best;
}

PickDecision LocalityScheduler::PickNextTask(CoreId core,
                                             std::optional<Schedulable> current,
                                             uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  CoreSlot& slot = cores_[core.index];
  if (current.has_value()) {
    const TaskId cur = current->task();
    if (slot.fifo.empty()) {
      slot.current = cur;
      return PickDecision{std::move(current)};
    }
    slot.fifo.emplace_back(cur, std::move(*current));
  }
  if (slot.fifo.empty()) {
    slot.current.reset();
    return PickDecision{};
  }
  auto [task, token] = std::move(slot.fifo.front());
  slot.fifo.pop_front();
  slot.current = task;
  return PickDecision{std::move(token)};
}

void LocalityScheduler::PntErr(CoreId core, Schedulable rejected) {
  FrameworkLockGuard guard(*lock_);
  (void)core;
  CoreSlot& slot = cores_[rejected.core().index];
  if (slot.current == rejected.task()) slot.current.reset();
  slot.fifo.emplace_back(rejected.task(), std::move(rejected));
}

void LocalityScheduler::TaskNew(TaskId task, Nice nice, Schedulable token) {
  FrameworkLockGuard guard(*lock_);
  (void)nice;
  cores_[token.core().index].fifo.emplace_back(task, std::move(token));
}

void LocalityScheduler::TaskWakeup(TaskId task, Schedulable token,
                                   uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  cores_[token.core().index].fifo.emplace_back(task, std::move(token));
}

std::optional<Schedulable> LocalityScheduler::Remove(TaskId task) {
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

std::optional<Schedulable> LocalityScheduler::TaskBlocked(
    TaskId task, uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  return Remove(task);
}

std::optional<Schedulable> LocalityScheduler::TaskDead(
    TaskId task, uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  std::optional<Schedulable> out = Remove(task);
  task_group_.erase(task.id);
  return out;
}

TickDecision LocalityScheduler::TaskTick(CoreId core, TaskId task,
                                         uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)core;
  (void)task;
  (void)runtime_delta_ns;
  return TickDecision{false};  // run to block
}

CoreId LocalityScheduler::SelectTaskRq(TaskId task, Nice nice) {
  FrameworkLockGuard guard(*lock_);
  (void)nice;
  auto hint = task_group_.find(task.id);
  if (hint != task_group_.end()) {
    const uint32_t group = hint->second;
    auto core_it = group_core_.find(group);
    if (core_it == group_core_.end()) {
      core_it = group_core_.emplace(group, LeastLoadedCore()).first;
    }
    const uint32_t core = core_it->second;
    // Ignore the hint when the group core is swamped.
    if (LoadOn(core) > params_.overload_threshold) {
      return CoreId{LeastLoadedCore()};
    }
    return CoreId{core};
  }
  std::uniform_int_distribution<uint32_t> pick(0, params_.num_cores - 1);
  return CoreId{pick(rng_)};
}

std::optional<Schedulable> LocalityScheduler::MigrateTaskRq(
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
  throw std::runtime_error("locality: unqueued migrate");
}

std::optional<BalanceDecision> LocalityScheduler::Balance(CoreId idle_core) {
  FrameworkLockGuard guard(*lock_);
  (void)idle_core;
  return std::nullopt;  // placement is the whole policy
}

void LocalityScheduler::BalanceErr(CoreId core, TaskId task,
                                   std::optional<Schedulable> token) {
  FrameworkLockGuard guard(*lock_);
  (void)core;
  (void)task;
  if (token.has_value()) {
    const TaskId id = token->task();
    cores_[token->core().index].fifo.emplace_back(id, std::move(*token));
  }
}

bool LocalityScheduler::RegisterQueue(const QueueSpec& spec) {
  FrameworkLockGuard guard(*lock_);
  return spec.direction == HintDirection::kUserToSched &&
         spec.record_width == LocalityHint::kWireSize;
}

void LocalityScheduler::EnterQueue(uint64_t queue_id) {
  FrameworkLockGuard guard(*lock_);
  (void)queue_id;
}

void LocalityScheduler::UnregisterQueue(uint64_t queue_id) {
  FrameworkLockGuard guard(*lock_);
  (void)queue_id;
}

void LocalityScheduler::ParseHint(uint64_t queue_id,
                                  std::span<const uint8_t> record) {
  FrameworkLockGuard guard(*lock_);
  (void)queue_id;
  std::optional<LocalityHint> hint = LocalityHint::Decode(record);
  if (!hint.has_value()) return;  // malformed hints are dropped
  task_group_[hint->task] = hint->group;
}

UpgradeCapsule LocalityScheduler::ReregisterPrep() {
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
  w.U32(static_cast<uint32_t>(task_group_.size()));
  std::vector<std::pair<uint64_t, uint32_t>> groups(task_group_.begin(),
                                                    task_group_.end());
  std::sort(groups.begin(), groups.end());
  for (const auto& [task, group] : groups) {
    w.U64(task);
    w.U32(group);
  }
  w.U32(static_cast<uint32_t>(group_core_.size()));
  std::vector<std::pair<uint32_t, uint32_t>> assignments(group_core_.begin(),
                                                         group_core_.end());
  std::sort(assignments.begin(), assignments.end());
  for (const auto& [group, core] : assignments) {
    w.U32(group);
    w.U32(core);
  }
  std::ostringstream rng_state;
  rng_state << rng_;
  const std::string rng_str = rng_state.str();
  w.U32(static_cast<uint32_t>(rng_str.size()));
  w.Bytes(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(rng_str.data()), rng_str.size()));
  task_group_.clear();
  group_core_.clear();
  capsule.bytes = w.Take();
  return capsule;
}

bool LocalityScheduler::ReregisterInit(UpgradeCapsule& capsule) {
  FrameworkLockGuard guard(*lock_);
  if (capsule.format_tag != tag_) return false;
  wire::ByteReader r(capsule.bytes);
  if (r.U32() != params_.num_cores) return false;
  size_t token_cursor = 0;
  for (CoreSlot& slot : cores_) {
    const bool has = r.Bool();
    const uint64_t cur = r.U64();
    slot.current = has ? std::optional<TaskId>(TaskId{cur}) : std::nullopt;
    const uint32_t depth = r.U32();
    for (uint32_t i = 0; i < depth; ++i) {
      const TaskId id{r.U64()};
      if (token_cursor >= capsule.tokens.size()) return false;
      if (capsule.tokens[token_cursor].task() != id) return false;
      slot.fifo.emplace_back(id, std::move(capsule.tokens[token_cursor]));
      ++token_cursor;
    }
  }
  const uint32_t n_groups = r.U32();
  for (uint32_t i = 0; i < n_groups; ++i) {
    const uint64_t task = r.U64();
    task_group_[task] = r.U32();
  }
  const uint32_t n_assign = r.U32();
  for (uint32_t i = 0; i < n_assign; ++i) {
    const uint32_t group = r.U32();
    group_core_[group] = r.U32();
  }
  const uint32_t rng_len = r.U32();
  std::vector<uint8_t> rng_bytes = r.Bytes(rng_len);
  if (!r.ok()) return false;
  std::istringstream rng_state(
      std::string(rng_bytes.begin(), rng_bytes.end()));
  rng_state >> rng_;
  capsule.tokens.clear();
  capsule.bytes.clear();
  return true;
}

std::optional<CoreId> LocalityScheduler::GroupCore(uint32_t group) const {
  FrameworkLockGuard guard(*lock_);
  auto it = group_core_.find(group);
  if (it == group_core_.end()) return std::nullopt;
  return CoreId{it->second};
}

std::optional<uint32_t> LocalityScheduler::GroupOf(TaskId task) const {
  FrameworkLockGuard guard(*lock_);
  auto it = task_group_.find(task.id);
  if (it == task_group_.end()) return std::nullopt;
  return it->second;
}

}  // namespace schedlab::policies
