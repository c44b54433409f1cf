// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_POLICIES_LOCALITY_H_
#define SCHEDLAB_POLICIES_LOCALITY_H_

#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "schedlab/locks.h"
#include "schedlab/policy.h"

namespace schedlab::policies {

// Hint record sent user->scheduler: co-locate `task` with everything
// else sharing `group`.
struct LocalityHint {
  uint64_t task = 0;
  uint32_t group = 0;
  uint32_t reserved = 0;

  std::vector<uint8_t> Encode() const;
  static std::optional<LocalityHint> Decode(std::span<const uint8_t> bytes);
  static constexpr uint32_t kWireSize = 16;
};

// Co-locates tasks of the same user-declared group on one core. A group
// binds to meet the least-loaded core the first time one of its tasks
// is placed; unhinted tasks land uniformly at random (seeded). When a
// group's core is overloaded the placement falls back to the
// least-loaded core instead of honoring the hint.
class LocalityScheduler : public SchedulerPolicy {
 public:
  static constexpr uint32_t kDefaultOverloadThreshold = 8;

  struct Params {
    uint32_t num_cores = 1;
    uint64_t seed = 1;
    uint32_t overload_threshold = kDefaultOverloadThreshold;
  };

  LocalityScheduler(Params params, LockFactory& locks);

  std::string_view name() const override { return "locality"; }
  uint64_t capsule_format_tag() const override { return tag_; }
  uint32_t hint_record_width(HintDirection direction) const override {
    return direction == HintDirection::kUserToSched ? LocalityHint::kWireSize
                                                    : 0;
  }

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

  bool RegisterQueue(const QueueSpec& spec) override;
  void EnterQueue(uint64_t queue_id) override;
  void UnregisterQueue(uint64_t queue_id) override;
  void ParseHint(uint64_t queue_id, std::span<const uint8_t> record) override;

  UpgradeCapsule ReregisterPrep() override;
  bool ReregisterInit(UpgradeCapsule& capsule) override;

  std::optional<CoreId> GroupCore(uint32_t group) const;
  std::optional<uint32_t> GroupOf(TaskId task) const;

 private:
  struct CoreSlot {
    std::deque<std::pair<TaskId, Schedulable>> fifo;
    std::optional<TaskId> current;
  };

  size_t LoadOn(uint32_t core) const;
  uint32_t LeastLoadedCore() const;
  std::optional<Schedulable> Remove(TaskId task);

  const Params params_;
  const uint64_t tag_;
  std::shared_ptr<FrameworkLock> lock_;
  std::vector<CoreSlot> cores_;
  std::unordered_map<uint64_t, uint32_t> task_group_;
  std::unordered_map<uint32_t, uint32_t> group_core_;
  std::mt19937_64 rng_;
};

}  // namespace schedlab::policies

#endif  // SCHEDLAB_POLICIES_LOCALITY_H_
