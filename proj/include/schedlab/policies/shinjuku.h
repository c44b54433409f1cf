// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_POLICIES_SHINJUKU_H_
#define SCHEDLAB_POLICIES_SHINJUKU_H_

#include <deque>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "schedlab/locks.h"
#include "schedlab/policy.h"

namespace schedlab::policies {

// Centralized first-come-first-serve queue with microsecond-scale
// preemption. One global FIFO holds every runnable task; a preempted
// task re-enters at the back. Picks honor per-core token validity by
// taking the earliest entry whose token matches the asking core, and
// an idling core pulls the global head over through balance, which
// preserves its queue position across the migration.
class ShinjukuScheduler : public SchedulerPolicy {
 public:
  static constexpr uint64_t kDefaultSliceNs = 10'000;  // 10us preemption

  struct Params {
    uint32_t num_cores = 1;
    uint64_t preemption_slice_ns = kDefaultSliceNs;
  };

  ShinjukuScheduler(Params params, LockFactory& locks);

  std::string_view name() const override { return "shinjuku"; }
  uint64_t capsule_format_tag() const override { return tag_; }

  PickDecision PickNextTask(CoreId core, std::optional<Schedulable> current,
                            uint64_t runtime_delta_ns) override;
  void PntErr(CoreId core, Schedulable rejected) override;
  void TaskNew(TaskId task, Nice nice, Schedulable token) override;
  void TaskWakeup(TaskId task, Schedulable token,
                  uint64_t runtime_delta_ns) override;
  std::optional<Schedulable> TaskBlocked(TaskId task,
                                         uint64_t runtime_delta_ns) override;
  std::optional<Schedulable> TaskDead(TaskId task,
                                      uint64_t runtime_delta_ns) override;
  TickDecision TaskTick(CoreId core, TaskId task,
                        uint64_t runtime_delta_ns) override;
  CoreId SelectTaskRq(TaskId task, Nice nice) override;
  std::optional<Schedulable> MigrateTaskRq(TaskId task,
                                           Schedulable new_token) override;
  std::optional<BalanceDecision> Balance(CoreId idle_core) override;
  void BalanceErr(CoreId core, TaskId task,
                  std::optional<Schedulable> token) override;

  UpgradeCapsule ReregisterPrep() override;
  bool ReregisterInit(UpgradeCapsule& capsule) override;

  uint64_t preemption_slice_ns() const { return params_.preemption_slice_ns; }
  size_t QueueDepth() const;

 private:
  struct Entry {
    TaskId task;
    Schedulable token;
  };
  struct CoreSlot {
    std::optional<TaskId> current;
    uint64_t ran_ns = 0;
  };

  std::deque<Entry>::iterator FindEntry(TaskId task);
  bool HasEntryFor(CoreId core) const;

  const Params params_;
  const uint64_t tag_;
  std::shared_ptr<FrameworkLock> lock_;
  std::deque<Entry> fifo_;
  std::vector<CoreSlot> slots_;
};

}  // namespace schedlab::policies

#endif  // SCHEDLAB_POLICIES_SHINJUKU_H_
