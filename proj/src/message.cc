// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/message.h"

#include <utility>

namespace schedlab {

std::string_view MessageKindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kPickNextTask:
      return "pick_next_task";
    case MessageKind::kPntErr:
      return "pnt_err";
    case MessageKind::kTaskNew:
      return "task_new";
    case MessageKind::kTaskWakeup:
      return "task_wakeup";
    case MessageKind::kTaskBlocked:
      return "task_blocked";
    case MessageKind::kTaskDead:
      return "task_dead";
    case MessageKind::kTaskTick:
      return "task_tick";
    case MessageKind::kSelectTaskRq:
      return "select_task_rq";
    case MessageKind::kMigrateTaskRq:
      return "migrate_task_rq";
    case MessageKind::kBalance:
      return "balance";
    case MessageKind::kBalanceErr:
      return "balance_err";
    case MessageKind::kRegisterQueue:
      return "register_queue";
    case MessageKind::kEnterQueue:
      return "enter_queue";
    case MessageKind::kUnregisterQueue:
      return "unregister_queue";
    case MessageKind::kParseHint:
      return "parse_hint";
    case MessageKind::kReregisterPrep:
      return "reregister_prep";
    case MessageKind::kReregisterInit:
      return "reregister_init";
  }
  return "unknown";
}

SchedMessage SchedMessage::PickNextTask(CoreId core,
                                        std::optional<Schedulable> current,
                                        uint64_t runtime_delta_ns) {
  SchedMessage m;
  m.kind = MessageKind::kPickNextTask;
  m.core = core;
  m.token = std::move(current);
  if (m.token.has_value()) m.task = m.token->task();
  m.runtime_delta_ns = runtime_delta_ns;
  return m;
}

SchedMessage SchedMessage::PntErr(CoreId core, Schedulable rejected) {
  SchedMessage m;
  m.kind = MessageKind::kPntErr;
  m.core = core;
  m.task = rejected.task();
  m.token = std::move(rejected);
  return m;
}

SchedMessage SchedMessage::TaskNew(TaskId task, Nice nice, Schedulable token) {
  SchedMessage m;
  m.kind = MessageKind::kTaskNew;
  m.task = task;
  m.core = token.core();
  m.nice = nice;
  m.token = std::move(token);
  return m;
}

SchedMessage SchedMessage::TaskWakeup(TaskId task, Schedulable token,
                                      uint64_t runtime_delta_ns) {
  SchedMessage m;
  m.kind = MessageKind::kTaskWakeup;
  m.task = task;
  m.core = token.core();
  m.token = std::move(token);
  m.runtime_delta_ns = runtime_delta_ns;
  return m;
}

SchedMessage SchedMessage::TaskBlocked(TaskId task, uint64_t runtime_delta_ns) {
  SchedMessage m;
  m.kind = MessageKind::kTaskBlocked;
  m.task = task;
  m.runtime_delta_ns = runtime_delta_ns;
  return m;
}

SchedMessage SchedMessage::TaskDead(TaskId task, uint64_t runtime_delta_ns) {
  SchedMessage m;
  m.kind = MessageKind::kTaskDead;
  m.task = task;
  m.runtime_delta_ns = runtime_delta_ns;
  return m;
}

SchedMessage SchedMessage::TaskTick(CoreId core, TaskId task,
                                    uint64_t runtime_delta_ns) {
  SchedMessage m;
  m.kind = MessageKind::kTaskTick;
  m.core = core;
  m.task = task;
  m.runtime_delta_ns = runtime_delta_ns;
  return m;
}

SchedMessage SchedMessage::SelectTaskRq(TaskId task, Nice nice) {
  SchedMessage m;
  m.kind = MessageKind::kSelectTaskRq;
  m.task = task;
  m.nice = nice;
  return m;
}

SchedMessage SchedMessage::MigrateTaskRq(TaskId task, Schedulable new_token) {
  SchedMessage m;
  m.kind = MessageKind::kMigrateTaskRq;
  m.task = task;
  m.core = new_token.core();
  m.token = std::move(new_token);
  return m;
}

SchedMessage SchedMessage::Balance(CoreId idle_core) {
  SchedMessage m;
  m.kind = MessageKind::kBalance;
  m.core = idle_core;
  return m;
}

SchedMessage SchedMessage::BalanceErr(CoreId core, TaskId task,
                                      std::optional<Schedulable> token) {
  SchedMessage m;
  m.kind = MessageKind::kBalanceErr;
  m.core = core;
  m.task = task;
  m.token = std::move(token);
  return m;
}

SchedMessage SchedMessage::RegisterQueue(QueueSpec spec) {
  SchedMessage m;
  m.kind = MessageKind::kRegisterQueue;
  m.queue_id = spec.queue_id;
  m.queue_spec = std::move(spec);
  return m;
}

SchedMessage SchedMessage::EnterQueue(uint64_t queue_id) {
  SchedMessage m;
  m.kind = MessageKind::kEnterQueue;
  m.queue_id = queue_id;
  return m;
}

SchedMessage SchedMessage::UnregisterQueue(uint64_t queue_id) {
  SchedMessage m;
  m.kind = MessageKind::kUnregisterQueue;
  m.queue_id = queue_id;
  return m;
}

SchedMessage SchedMessage::ParseHint(uint64_t queue_id,
                                     std::vector<uint8_t> record) {
  SchedMessage m;
  m.kind = MessageKind::kParseHint;
  m.queue_id = queue_id;
  m.hint = std::move(record);
  return m;
}

SchedMessage SchedMessage::ReregisterPrep() {
  SchedMessage m;
  m.kind = MessageKind::kReregisterPrep;
  return m;
}

SchedMessage SchedMessage::ReregisterInit(UpgradeCapsule capsule) {
  SchedMessage m;
  m.kind = MessageKind::kReregisterInit;
  m.capsule = std::move(capsule);
  return m;
}

SchedResponse SchedResponse::Ack() { return SchedResponse{}; }

SchedResponse SchedResponse::Pick(std::optional<Schedulable> token) {
  SchedResponse r;
  r.kind = ResponseKind::kPick;
  r.token = std::move(token);
  return r;
}

SchedResponse SchedResponse::CoreSelected(CoreId core) {
  SchedResponse r;
  r.kind = ResponseKind::kCoreSelected;
  r.core = core;
  return r;
}

SchedResponse SchedResponse::TokenBack(std::optional<Schedulable> token) {
  SchedResponse r;
  r.kind = ResponseKind::kTokenBack;
  r.token = std::move(token);
  return r;
}

SchedResponse SchedResponse::Tick(bool resched) {
  SchedResponse r;
  r.kind = ResponseKind::kTick;
  r.flag = resched;
  return r;
}

SchedResponse SchedResponse::Balance(std::optional<BalanceDecision> decision) {
  SchedResponse r;
  r.kind = ResponseKind::kBalance;
  r.balance = decision;
  return r;
}

SchedResponse SchedResponse::QueueDecision(bool accepted) {
  SchedResponse r;
  r.kind = ResponseKind::kQueueDecision;
  r.flag = accepted;
  return r;
}

SchedResponse SchedResponse::Capsule(UpgradeCapsule capsule) {
  SchedResponse r;
  r.kind = ResponseKind::kCapsule;
  r.capsule = std::move(capsule);
  return r;
}

SchedResponse SchedResponse::Init(bool ok) {
  SchedResponse r;
  r.kind = ResponseKind::kInit;
  r.flag = ok;
  return r;
}

}  // namespace schedlab
