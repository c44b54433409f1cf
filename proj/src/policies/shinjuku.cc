// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/policies/shinjuku.h"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "schedlab/logging.h"
#include "schedlab/wire.h"

namespace schedlab::policies {

ShinjukuScheduler::ShinjukuScheduler(Params params, LockFactory& locks)
    : params_(params),
      tag_(CapsuleTag("shinjuku-state-v1")),
      lock_(locks.CreateLock()) {
  CHECK_GT(params_.num_cores, 0u);
  slots_.resize(params_.num_cores);
}

std::deque<ShinjukuScheduler::Entry>::iterator ShinjukuScheduler::FindEntry(
    TaskId task) {
  return std::find_if(fifo_.begin(), fifo_.end(),
                      [task](const Entry& e) { return e.task == task; });
}

bool ShinjukuScheduler::HasEntryFor(CoreId core) const {
  for (const Entry& e : fifo_) {
    if (e.token.core() == core) return true;
  }
  return false;
}

PickDecision ShinjukuScheduler::PickNextTask(CoreId core,
                                             std::optional<Schedulable> current,
                                             uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;  // FCFS ignores runtimes
  CoreSlot& slot = slots_[core.index];

  auto take_local = [&]() -> std::optional<Schedulable> {
    for (auto it = fifo_.begin(); it != fifo_.end(); ++it) {
      if (it->token.core() == core) {
        Schedulable token = std::move(it->token);
        fifo_.erase(it);
        return token;
      }
    }
    return std::nullopt;
  };

  if (current.has_value()) {
    const TaskId cur = current->task();
    if (!HasEntryFor(core)) {
      // Nothing else to run here; keep the current task going.
      slot.current = cur;
      return PickDecision{std::move(current)};
    }
    fifo_.push_back(Entry{cur, std::move(*current)});  // back of the line
    std::optional<Schedulable> next = take_local();
    slot.current = next->task();
    slot.ran_ns = 0;
    return PickDecision{std::move(next)};
  }

  std::optional<Schedulable> next = take_local();
  if (!next.has_value()) {
    slot.current.reset();
    return PickDecision{};
  }
  slot.current = next->task();
  slot.ran_ns = 0;
  return PickDecision{std::move(next)};
}

void ShinjukuScheduler::PntErr(CoreId core, Schedulable rejected) {
  FrameworkLockGuard guard(*lock_);
  (void)core;
  const TaskId task = rejected.task();
  if (slots_[rejected.core().index].current == task) {
    slots_[rejected.core().index].current.reset();
  }
  fifo_.push_back(Entry{task, std::move(rejected)});
}

void ShinjukuScheduler::TaskNew(TaskId task, Nice nice, Schedulable token) {
  FrameworkLockGuard guard(*lock_);
  (void)nice;  // single class, no weights
  fifo_.push_back(Entry{task, std::move(token)});
}

void ShinjukuScheduler::TaskWakeup(TaskId task, Schedulable token,
                                   uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  fifo_.push_back(Entry{task, std::move(token)});
}

std::optional<Schedulable> ShinjukuScheduler::TaskBlocked(
    TaskId task, uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  (void)runtime_delta_ns;
  for (CoreSlot& slot : slots_) {
    if (slot.current == task) {
      slot.current.reset();
      slot.ran_ns = 0;
      return std::nullopt;
    }
  }
  auto it = FindEntry(task);
  if (it != fifo_.end()) {
    Schedulable token = std::move(it->token);
    fifo_.erase(it);
    return token;
  }
  return std::nullopt;
}

std::optional<Schedulable> ShinjukuScheduler::TaskDead(
    TaskId task, uint64_t runtime_delta_ns) {
  return TaskBlocked(task, runtime_delta_ns);
}

TickDecision ShinjukuScheduler::TaskTick(CoreId core, TaskId task,
                                         uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  CoreSlot& slot = slots_[core.index];
  if (slot.current != task) return TickDecision{false};
  slot.ran_ns += runtime_delta_ns;
  if (slot.ran_ns < params_.preemption_slice_ns) return TickDecision{false};
  // Preempt only if someone is actually waiting for this core.
  return TickDecision{HasEntryFor(core)};
}

CoreId ShinjukuScheduler::SelectTaskRq(TaskId task, Nice nice) {
  FrameworkLockGuard guard(*lock_);
  (void)task;
  (void)nice;
  std::vector<size_t> load(params_.num_cores, 0);
  for (const Entry& e : fifo_) load[e.token.core().index]++;
  for (uint32_t i = 0; i < params_.num_cores; ++i) {
    if (slots_[i].current.has_value()) load[i]++;
  }
  uint32_t best = 0;
  size_t best_load = SIZE_MAX;
  for (uint32_t i = 0; i < params_.num_cores; ++i) {
    if (load[i] < best_load) {
      best_load = load[i];
      best = i;
    }
  }
  return CoreId{best};
}

std::optional<Schedulable> ShinjukuScheduler::MigrateTaskRq(
    TaskId task, Schedulable new_token) {
  FrameworkLockGuard guard(*lock_);
  auto it = FindEntry(task);
  if (it == fifo_.end()) throw std::runtime_error("shinjuku: unqueued migrate");
  // Swap tokens in place so the queue position survives the move.
  Schedulable old = std::move(it->token);
  it->token = std::move(new_token);
  return old;
}

std::optional<BalanceDecision> ShinjukuScheduler::Balance(CoreId idle_core) {
  FrameworkLockGuard guard(*lock_);
  if (fifo_.empty()) return std::nullopt;
  const Entry& head = fifo_.front();
  if (head.token.core() == idle_core) return std::nullopt;  // pick takes it
  return BalanceDecision{head.task, head.token.core(), idle_core};
}

void ShinjukuScheduler::BalanceErr(CoreId core, TaskId task,
                                   std::optional<Schedulable> token) {
  FrameworkLockGuard guard(*lock_);
  (void)core;
  (void)task;
  if (token.has_value()) {
    const TaskId id = token->task();
    fifo_.push_back(Entry{id, std::move(*token)});
  }
}

UpgradeCapsule ShinjukuScheduler::ReregisterPrep() {
  FrameworkLockGuard guard(*lock_);
  UpgradeCapsule capsule(tag_);
  wire::ByteWriter w;
  w.U32(static_cast<uint32_t>(slots_.size()));
  for (const CoreSlot& slot : slots_) {
    w.Bool(slot.current.has_value());
    w.U64(slot.current.has_value() ? slot.current->id : 0);
    w.U64(slot.ran_ns);
  }
  w.U32(static_cast<uint32_t>(fifo_.size()));
  for (Entry& e : fifo_) {
    w.U64(e.task.id);
    capsule.tokens.push_back(std::move(e.token));
  }
  fifo_.clear();
  for (CoreSlot& slot : slots_) slot = CoreSlot{};
  capsule.bytes = w.Take();
  return capsule;
}

bool ShinjukuScheduler::ReregisterInit(UpgradeCapsule& capsule) {
  FrameworkLockGuard guard(*lock_);
  if (capsule.format_tag != tag_) return false;
  wire::ByteReader r(capsule.bytes);
  const uint32_t n_cores = r.U32();
  if (n_cores != slots_.size()) return false;
  for (CoreSlot& slot : slots_) {
    const bool has = r.Bool();
    const uint64_t id = r.U64();
    slot.current = has ? std::optional<TaskId>(TaskId{id}) : std::nullopt;
    slot.ran_ns = r.U64();
  }
  const uint32_t n = r.U32();
  if (!r.ok() || n != capsule.tokens.size()) return false;
  for (uint32_t i = 0; i < n; ++i) {
    const TaskId id{r.U64()};
    if (capsule.tokens[i].task() != id) return false;
    fifo_.push_back(Entry{id, std::move(capsule.tokens[i])});
  }
  if (!r.ok()) return false;
  capsule.tokens.clear();
  capsule.bytes.clear();
  return true;
}

size_t ShinjukuScheduler::QueueDepth() const {
  FrameworkLockGuard guard(*lock_);
  return fifo_.size();
}

}  // namespace schedlab::policies
