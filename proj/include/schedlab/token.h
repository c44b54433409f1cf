// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_TOKEN_H_
#define SCHEDLAB_TOKEN_H_

#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "schedlab/types.h"

namespace schedlab {

class TokenRegistry;
namespace wire {
class TokenMinter;
}

// Proof that one task may be dispatched on one core.
//
// Tokens are affine: they are move-only, the framework issues them with
// strictly increasing serials, and consuming one (dispatching the task)
// retires its serial forever. Policy code cannot copy, clone, or forge
// one; the only producers are the registry and the replay decoder.
class Schedulable {
 public:
  Schedulable(Schedulable&& other) noexcept
      : task_(other.task_), core_(other.core_), serial_(other.serial_) {
    other.serial_ = 0;  // moved-from tokens are inert
  }
  Schedulable& operator=(Schedulable&& other) noexcept {
    task_ = other.task_;
    core_ = other.core_;
    serial_ = other.serial_;
    other.serial_ = 0;
    return *this;
  }
  Schedulable(const Schedulable&) = delete;
  Schedulable& operator=(const Schedulable&) = delete;

  TaskId task() const { return task_; }
  CoreId core() const { return core_; }
  uint64_t serial() const { return serial_; }

 private:
  friend class TokenRegistry;
  friend class wire::TokenMinter;

  Schedulable(TaskId task, CoreId core, uint64_t serial)
      : task_(task), core_(core), serial_(serial) {}

  TaskId task_;
  CoreId core_;
  uint64_t serial_;
};

enum class TokenVerdict : uint8_t {
  kOk = 0,
  kWrongCore = 1,
  kStale = 2,
};

// Result of presenting a token for dispatch. On kOk the serial is retired
// and `rejected` is empty; otherwise the token rides back out so the
// framework can return ownership to the policy through pnt_err.
struct ConsumeOutcome {
  TokenVerdict verdict;
  std::optional<Schedulable> rejected;

  bool ok() const { return verdict == TokenVerdict::kOk; }
};

enum class IssueError : uint8_t {
  kDuplicateToken = 0,  // a live token already exists for the task
};

// Framework-side serial bookkeeping for Schedulable tokens.
//
// Exactly one live serial may exist per task. Issuing replaces nothing;
// Supersede invalidates the previous serial (the migration handshake).
// All operations are atomic with respect to each other.
class TokenRegistry {
 public:
  TokenRegistry() = default;
  TokenRegistry(const TokenRegistry&) = delete;
  TokenRegistry& operator=(const TokenRegistry&) = delete;

  // Issues a fresh token for a task that has no live one.
  std::optional<Schedulable> Issue(TaskId task, CoreId core,
                                   IssueError* error = nullptr);

  // Issues a fresh token, invalidating any live serial for the task.
  // The displaced token, wherever it is physically held, will verdict
  // kStale if presented later.
  Schedulable Supersede(TaskId task, CoreId core);

  // Validates and, on success, retires a token for dispatch on
  // `expected_core`.
  ConsumeOutcome Consume(Schedulable token, CoreId expected_core);

  // Retires whatever token a policy handed back outside the dispatch
  // path (the old token of a migration, or one returned with
  // task_blocked/task_dead). Discarding the live serial simply removes
  // it; discarding a stale serial is a no-op.
  void Discard(Schedulable token);

  // True if `task` currently has a live serial.
  bool HasLive(TaskId task) const;
  // True if (task, serial) is exactly the live pairing.
  bool IsLiveSerial(TaskId task, uint64_t serial) const;
  size_t live_count() const;
  uint64_t serials_issued() const;

 private:
  Schedulable MintLocked(TaskId task, CoreId core);

  mutable std::mutex mu_;
  uint64_t next_serial_ = 1;
  std::unordered_map<TaskId, uint64_t> live_by_task_;
};

namespace wire {

// Replay-only pathway for rebuilding tokens out of a recorded log.
// Lives behind the wire namespace so policy code has no reach to it.
class TokenMinter {
 public:
  static Schedulable Mint(TaskId task, CoreId core, uint64_t serial) {
    return Schedulable(task, core, serial);
  }
};

}  // namespace wire

}  // namespace schedlab

#endif  // SCHEDLAB_TOKEN_H_
