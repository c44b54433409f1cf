// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_POLICIES_WFQ_H_
#define SCHEDLAB_POLICIES_WFQ_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "schedlab/locks.h"
#include "schedlab/policy.h"

namespace schedlab::policies {

// Weighted fair queuing over per-core run-queues.
//
// Each task accrues vruntime at a rate inversely proportional to the
// weight of its nice value; every pick takes the lowest (vruntime, id)
// key of the core's ordered map. Placement is least-occupancy, and the
// only rebalancing is stealing from the longest queue when a core is
// about to idle.
class WfqScheduler : public SchedulerPolicy {
 public:
  static constexpr uint64_t kBaseWeight = 1024;
  static constexpr uint64_t kDefaultMinPeriodNs = 6'000'000;
  static constexpr uint64_t kDefaultMinSliceNs = 750'000;
  static constexpr uint64_t kDefaultWakeClampNs = 6'000'000;

  struct Params {
    uint32_t num_cores = 1;
    uint64_t min_period_ns = kDefaultMinPeriodNs;
    uint64_t min_slice_ns = kDefaultMinSliceNs;
    uint64_t wake_clamp_ns = kDefaultWakeClampNs;
    // Capsule compatibility is keyed off this string.
    std::string capsule_version = "wfq-state-v1";
    // Equal-vruntime picks normally prefer the lower task id; flipping
    // this is the canonical one-line divergence for replay testing.
    bool reverse_tie_break = false;
    int version = 1;
  };

  WfqScheduler(Params params, LockFactory& locks);

  std::string_view name() const override { return name_; }
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

  // weight(nice) = 1024 * 1.25^(-nice), rounded to nearest.
  static uint64_t WeightForNice(Nice nice);
  // vruntime advance for `delta_ns` of runtime at `nice`.
  static uint64_t VruntimeDeltaNs(uint64_t delta_ns, Nice nice);
  // slice = max(period / runnable, min_slice) with
  // period = max(min_period, min_slice * runnable).
  uint64_t SliceNs(size_t runnable) const;

  // Introspection for benches and tests.
  uint64_t TotalVruntimeNs() const;
  std::vector<uint64_t> AttachedTaskIds() const;
  uint64_t VruntimeOf(TaskId task) const;
  uint64_t MinVruntimeOf(CoreId core) const;
  int version() const { return params_.version; }

 private:
  struct TaskInfo {
    Nice nice = 0;
    uint64_t weight = kBaseWeight;
    uint64_t vruntime = 0;
    CoreId core{};
    bool queued = false;  // policy holds its token in a queue
  };

  using QueueKey = std::pair<uint64_t, uint64_t>;  // (vruntime, task id)

  struct CoreQueue {
    std::map<QueueKey, Schedulable> queue;
    uint64_t min_vruntime = 0;
    std::optional<TaskId> current;
    uint64_t current_ran_ns = 0;
  };

  TaskInfo& Info(TaskId task);
  CoreQueue& Queue(CoreId core);
  void Account(TaskId task, uint64_t delta_ns);
  void Enqueue(CoreQueue& cq, TaskId task, Schedulable token);
  Schedulable Extract(CoreQueue& cq, TaskId task);
  void RefreshMinVruntime(CoreQueue& cq);
  size_t RunnableOn(const CoreQueue& cq) const;

  const Params params_;
  const std::string name_;
  const uint64_t tag_;
  std::shared_ptr<FrameworkLock> lock_;
  std::vector<CoreQueue> cores_;
  std::unordered_map<TaskId, TaskInfo> tasks_;
};

}  // namespace schedlab::policies

#endif  // SCHEDLAB_POLICIES_WFQ_H_
