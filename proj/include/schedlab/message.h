// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_MESSAGE_H_
#define SCHEDLAB_MESSAGE_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "schedlab/capsule.h"
#include "schedlab/hints.h"
#include "schedlab/token.h"
#include "schedlab/types.h"

namespace schedlab {

// A balance nomination: move `task`, currently enqueued on `source`,
// onto `destination` (the core being balanced).
struct BalanceDecision {
  TaskId task;
  CoreId source;
  CoreId destination;

  bool operator==(const BalanceDecision&) const = default;
};

// One framework->policy call. Each kind carries exactly the fields its
// entry point requires; the factory functions below are the only
// sanctioned constructors. Move-only because a token may ride inside.
struct SchedMessage {
  MessageKind kind{};
  std::optional<TaskId> task;
  std::optional<CoreId> core;
  uint64_t runtime_delta_ns = 0;
  Nice nice = 0;
  std::optional<Schedulable> token;
  uint64_t queue_id = 0;
  std::vector<uint8_t> hint;
  std::optional<QueueSpec> queue_spec;
  std::optional<UpgradeCapsule> capsule;

  SchedMessage() = default;
  SchedMessage(SchedMessage&&) = default;
  SchedMessage& operator=(SchedMessage&&) = default;
  SchedMessage(const SchedMessage&) = delete;
  SchedMessage& operator=(const SchedMessage&) = delete;

  static SchedMessage PickNextTask(CoreId core,
                                   std::optional<Schedulable> current,
                                   uint64_t runtime_delta_ns);
  static SchedMessage PntErr(CoreId core, Schedulable rejected);
  static SchedMessage TaskNew(TaskId task, Nice nice, Schedulable token);
  // A preempted task is handed back through the wakeup path; its
  // not-yet-reported runtime rides along as the delta.
  static SchedMessage TaskWakeup(TaskId task, Schedulable token,
                                 uint64_t runtime_delta_ns = 0);
  static SchedMessage TaskBlocked(TaskId task, uint64_t runtime_delta_ns);
  static SchedMessage TaskDead(TaskId task, uint64_t runtime_delta_ns);
  static SchedMessage TaskTick(CoreId core, TaskId task,
                               uint64_t runtime_delta_ns);
  static SchedMessage SelectTaskRq(TaskId task, Nice nice);
  static SchedMessage MigrateTaskRq(TaskId task, Schedulable new_token);
  static SchedMessage Balance(CoreId idle_core);
  static SchedMessage BalanceErr(CoreId core, TaskId task,
                                 std::optional<Schedulable> token);
  static SchedMessage RegisterQueue(QueueSpec spec);
  static SchedMessage EnterQueue(uint64_t queue_id);
  static SchedMessage UnregisterQueue(uint64_t queue_id);
  static SchedMessage ParseHint(uint64_t queue_id, std::vector<uint8_t> record);
  static SchedMessage ReregisterPrep();
  static SchedMessage ReregisterInit(UpgradeCapsule capsule);
};

enum class ResponseKind : uint8_t {
  kAck = 0,            // void entry points
  kPick = 1,           // token present = run it, absent = idle the core
  kCoreSelected = 2,   // select_task_rq
  kTokenBack = 3,      // blocked/dead/migrate, optionally carrying a token
  kTick = 4,           // flag = reschedule the core
  kBalance = 5,        // optional nomination
  kQueueDecision = 6,  // flag = queue accepted
  kCapsule = 7,        // reregister_prep
  kInit = 8,           // flag = state imported
};

struct SchedResponse {
  ResponseKind kind = ResponseKind::kAck;
  std::optional<Schedulable> token;
  std::optional<CoreId> core;
  std::optional<BalanceDecision> balance;
  std::optional<UpgradeCapsule> capsule;
  bool flag = false;

  SchedResponse() = default;
  SchedResponse(SchedResponse&&) = default;
  SchedResponse& operator=(SchedResponse&&) = default;
  SchedResponse(const SchedResponse&) = delete;
  SchedResponse& operator=(const SchedResponse&) = delete;

  static SchedResponse Ack();
  static SchedResponse Pick(std::optional<Schedulable> token);
  static SchedResponse CoreSelected(CoreId core);
  static SchedResponse TokenBack(std::optional<Schedulable> token);
  static SchedResponse Tick(bool resched);
  static SchedResponse Balance(std::optional<BalanceDecision> decision);
  static SchedResponse QueueDecision(bool accepted);
  static SchedResponse Capsule(UpgradeCapsule capsule);
  static SchedResponse Init(bool ok);
};

}  // namespace schedlab

#endif  // SCHEDLAB_MESSAGE_H_
