// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/policy.h"

#include <utility>

#include "schedlab/logging.h"

namespace schedlab {

PolicyPanic::PolicyPanic(MessageKind kind, const std::string& what)
    : std::runtime_error("policy panic in " +
                         std::string(MessageKindName(kind)) + ": " + what),
      kind_(kind) {}

namespace {

SchedResponse Dispatch(SchedulerPolicy& policy, SchedMessage& msg) {
  switch (msg.kind) {
    case MessageKind::kPickNextTask: {
      CHECK(msg.core.has_value());
      PickDecision d = policy.PickNextTask(*msg.core, std::move(msg.token),
                                           msg.runtime_delta_ns);
      return SchedResponse::Pick(std::move(d.token));
    }
    case MessageKind::kPntErr:
      CHECK(msg.core.has_value());
      CHECK(msg.token.has_value());
      policy.PntErr(*msg.core, std::move(*msg.token));
      return SchedResponse::Ack();
    case MessageKind::kTaskNew:
      CHECK(msg.task.has_value());
      CHECK(msg.token.has_value());
      policy.TaskNew(*msg.task, msg.nice, std::move(*msg.token));
      return SchedResponse::Ack();
    case MessageKind::kTaskWakeup:
      CHECK(msg.task.has_value());
      CHECK(msg.token.has_value());
      policy.TaskWakeup(*msg.task, std::move(*msg.token),
                        msg.runtime_delta_ns);
      return SchedResponse::Ack();
    case MessageKind::kTaskBlocked:
      CHECK(msg.task.has_value());
      return SchedResponse::TokenBack(
          policy.TaskBlocked(*msg.task, msg.runtime_delta_ns));
    case MessageKind::kTaskDead:
      CHECK(msg.task.has_value());
      return SchedResponse::TokenBack(
          policy.TaskDead(*msg.task, msg.runtime_delta_ns));
    case MessageKind::kTaskTick: {
      CHECK(msg.core.has_value());
      CHECK(msg.task.has_value());
      TickDecision d =
          policy.TaskTick(*msg.core, *msg.task, msg.runtime_delta_ns);
      return SchedResponse::Tick(d.resched);
    }
    case MessageKind::kSelectTaskRq:
      CHECK(msg.task.has_value());
      return SchedResponse::CoreSelected(
          policy.SelectTaskRq(*msg.task, msg.nice));
    case MessageKind::kMigrateTaskRq:
      CHECK(msg.task.has_value());
      CHECK(msg.token.has_value());
      return SchedResponse::TokenBack(
          policy.MigrateTaskRq(*msg.task, std::move(*msg.token)));
    case MessageKind::kBalance:
      CHECK(msg.core.has_value());
      return SchedResponse::Balance(policy.Balance(*msg.core));
    case MessageKind::kBalanceErr:
      CHECK(msg.core.has_value());
      CHECK(msg.task.has_value());
      policy.BalanceErr(*msg.core, *msg.task, std::move(msg.token));
      return SchedResponse::Ack();
    case MessageKind::kRegisterQueue:
      CHECK(msg.queue_spec.has_value());
      return SchedResponse::QueueDecision(policy.RegisterQueue(*msg.queue_spec));
    case MessageKind::kEnterQueue:
      policy.EnterQueue(msg.queue_id);
      return SchedResponse::Ack();
    case MessageKind::kUnregisterQueue:
      policy.UnregisterQueue(msg.queue_id);
      return SchedResponse::Ack();
    case MessageKind::kParseHint:
      policy.ParseHint(msg.queue_id, msg.hint);
      return SchedResponse::Ack();
    case MessageKind::kReregisterPrep:
      return SchedResponse::Capsule(policy.ReregisterPrep());
    case MessageKind::kReregisterInit:
      CHECK(msg.capsule.has_value());
      return SchedResponse::Init(policy.ReregisterInit(*msg.capsule));
  }
  CHECK(false);  // unreachable: switch is total
  return SchedResponse::Ack();
}

}  // namespace

SchedResponse PolicyCall(SchedulerPolicy& policy, SchedMessage msg) {
  const MessageKind kind = msg.kind;
  try {
    return Dispatch(policy, msg);
  } catch (const PolicyPanic&) {
    throw;
  } catch (const std::exception& e) {
    throw PolicyPanic(kind, e.what());
  } catch (...) {
    throw PolicyPanic(kind, "unknown exception");
  }
}

}  // namespace schedlab
