// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_POLICY_H_
#define SCHEDLAB_POLICY_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "schedlab/capsule.h"
#include "schedlab/message.h"
#include "schedlab/types.h"

namespace schedlab {

// Pick outcome: a token authorizes running that task on the asking
// core; an empty decision idles the core. Returning the current-task
// token that rode in with the message means "keep running current".
struct PickDecision {
  std::optional<Schedulable> token;
};

struct TickDecision {
  bool resched = false;
};

// The contract every scheduling policy implements: one entry point per
// message kind. A policy manages only its own state in response to
// these calls; the framework owns cores, run-queue membership and token
// validation, and decides when each entry point fires.
//
// Concurrency: calls for distinct cores may arrive concurrently. Every
// entry point must guard shared policy state with locks obtained from
// the framework's LockFactory; that discipline is what makes recorded
// runs replayable.
class SchedulerPolicy {
 public:
  virtual ~SchedulerPolicy() = default;

  virtual std::string_view name() const = 0;

  // Tag of the state capsule this build exports/imports in an upgrade.
  virtual uint64_t capsule_format_tag() const = 0;

  // Width in bytes of this policy's hint records per direction.
  // Zero means the direction is unsupported.
  virtual uint32_t hint_record_width(HintDirection /*direction*/) const {
    return 0;
  }

  virtual PickDecision PickNextTask(CoreId core,
                                    std::optional<Schedulable> current,
                                    uint64_t runtime_delta_ns) = 0;
  virtual void PntErr(CoreId core, Schedulable rejected) = 0;
  virtual void TaskNew(TaskId task, Nice nice, Schedulable token) = 0;
  // Also the hand-back path for a task preempted by a higher-priority
  // policy; `runtime_delta_ns` carries its unreported runtime then.
  virtual void TaskWakeup(TaskId task, Schedulable token,
                          uint64_t runtime_delta_ns) = 0;
  // Blocked/dead may arrive when the policy holds no token for the
  // task (it was consumed at dispatch); the returned token is optional.
  virtual std::optional<Schedulable> TaskBlocked(TaskId task,
                                                 uint64_t runtime_delta_ns) = 0;
  virtual std::optional<Schedulable> TaskDead(TaskId task,
                                              uint64_t runtime_delta_ns) = 0;
  virtual TickDecision TaskTick(CoreId core, TaskId task,
                                uint64_t runtime_delta_ns) = 0;
  virtual CoreId SelectTaskRq(TaskId task, Nice nice) = 0;
  virtual std::optional<Schedulable> MigrateTaskRq(TaskId task,
                                                   Schedulable new_token) = 0;
  virtual std::optional<BalanceDecision> Balance(CoreId idle_core) = 0;
  virtual void BalanceErr(CoreId core, TaskId task,
                          std::optional<Schedulable> token) = 0;

  virtual bool RegisterQueue(const QueueSpec& /*spec*/) { return false; }
  virtual void EnterQueue(uint64_t /*queue_id*/) {}
  virtual void UnregisterQueue(uint64_t /*queue_id*/) {}
  virtual void ParseHint(uint64_t /*queue_id*/,
                         std::span<const uint8_t> /*record*/) {}

  // Export state for an upgrade. The capsule's tag must match
  // capsule_format_tag().
  virtual UpgradeCapsule ReregisterPrep() {
    return UpgradeCapsule(capsule_format_tag());
  }
  // Import state from the outgoing instance, claiming some or all of
  // it. Returning false must leave the capsule intact so the upgrade
  // can be rolled back.
  virtual bool ReregisterInit(UpgradeCapsule& capsule) {
    return capsule.format_tag == capsule_format_tag();
  }
};

// Raised when a policy entry point throws. Simulation-fatal; names the
// message kind that was being delivered.
class PolicyPanic : public std::runtime_error {
 public:
  PolicyPanic(MessageKind kind, const std::string& what);

  MessageKind kind() const { return kind_; }

 private:
  MessageKind kind_;
};

// Translation layer: unpacks a message, invokes the matching entry
// point, and repacks the result. The switch is total over MessageKind.
SchedResponse PolicyCall(SchedulerPolicy& policy, SchedMessage msg);

}  // namespace schedlab

#endif  // SCHEDLAB_POLICY_H_
