// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_POLICIES_ARBITER_H_
#define SCHEDLAB_POLICIES_ARBITER_H_

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "schedlab/locks.h"
#include "schedlab/policy.h"

namespace schedlab::policies {

// User->scheduler record: request a core count for an application, or
// bind a task to one.
struct ArbiterRequest {
  enum Kind : uint32_t { kRequestCores = 0, kBindTask = 1 };
  uint32_t kind = kRequestCores;
  uint32_t app = 0;
  uint64_t arg = 0;  // core count or task id

  std::vector<uint8_t> Encode() const;
  static std::optional<ArbiterRequest> Decode(std::span<const uint8_t> bytes);
  static constexpr uint32_t kWireSize = 16;
};

// Scheduler->user record: the named core has been reclaimed from the
// application and must be vacated.
struct ArbiterReclaim {
  uint32_t app = 0;
  uint32_t core = 0;

  std::vector<uint8_t> Encode() const;
  static std::optional<ArbiterReclaim> Decode(std::span<const uint8_t> bytes);
  static constexpr uint32_t kWireSize = 8;
};

// Two-level scheduling: applications request whole cores over the
// user->scheduler hint queue; reclamation notices flow back on the
// scheduler->user queue. A granted core dispatches only its owner's
// tasks; reserved cores run everything else. When demand exceeds
// supply each active application gets floor(grantable / active), with
// the remainder biased to the later requesters, matching the
// fair-share arithmetic the tests pin down.
class ArbiterScheduler : public SchedulerPolicy {
 public:
  struct Params {
    uint32_t num_cores = 2;
    uint32_t reserved_cores = 1;
  };

  ArbiterScheduler(Params params, LockFactory& locks);

  std::string_view name() const override { return "arbiter"; }
  uint64_t capsule_format_tag() const override { return tag_; }
  uint32_t hint_record_width(HintDirection direction) const override {
    return direction == HintDirection::kUserToSched ? ArbiterRequest::kWireSize
                                                    : ArbiterReclaim::kWireSize;
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
  void ParseHint(uint64_t queue_id, std::span<const uint8_t> record) override;

  UpgradeCapsule ReregisterPrep() override;
  bool ReregisterInit(UpgradeCapsule& capsule) override;

  // Introspection for safety checks.
  std::optional<uint32_t> OwnerOf(CoreId core) const;
  std::vector<uint32_t> GrantsOf(uint32_t app) const;
  uint32_t RequestOf(uint32_t app) const;
  std::optional<uint32_t> AppOf(TaskId task) const;
  uint32_t grantable_cores() const {
    return params_.num_cores - params_.reserved_cores;
  }

 private:
  struct AppState {
    uint32_t requested = 0;
    uint64_t first_seen = 0;  // stable request order
    std::set<uint32_t> granted;
  };
  struct CoreSlot {
    std::deque<std::pair<TaskId, Schedulable>> fifo;
    std::optional<TaskId> current;
  };

  bool EligibleOn(TaskId task, uint32_t core) const;
  void Recompute();
  size_t LoadOn(uint32_t core) const;
  std::optional<Schedulable> Remove(TaskId task);

  const Params params_;
  const uint64_t tag_;
  std::shared_ptr<FrameworkLock> lock_;
  std::vector<CoreSlot> cores_;
  std::vector<std::optional<uint32_t>> owner_;       // grantable cores only
  std::vector<std::optional<uint32_t>> last_owner_;  // warm preference
  std::map<uint32_t, AppState> apps_;
  std::unordered_map<uint64_t, uint32_t> task_app_;
  uint64_t hint_seq_ = 0;
  QueueHandle outbox_;  // sched->user reclamation notices
};

}  // namespace schedlab::policies

#endif  // SCHEDLAB_POLICIES_ARBITER_H_
