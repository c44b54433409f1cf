// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_LOCKS_H_
#define SCHEDLAB_LOCKS_H_

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "schedlab/types.h"

namespace schedlab {

class Recorder;

// A lock handed to policy code by the framework. Policies must obtain
// every lock they use from a LockFactory; that is what lets the
// recorder observe acquisition order and the replayer re-impose it.
// Lock identity is the factory creation index, which is stable across
// runs as long as locks are created in the same order.
class FrameworkLock {
 public:
  virtual ~FrameworkLock() = default;
  virtual void Acquire() = 0;
  virtual void Release() = 0;

  uint64_t id() const { return id_; }

 protected:
  explicit FrameworkLock(uint64_t id) : id_(id) {}

 private:
  const uint64_t id_;
};

class FrameworkLockGuard {
 public:
  explicit FrameworkLockGuard(FrameworkLock& lock) : lock_(lock) {
    lock_.Acquire();
  }
  ~FrameworkLockGuard() { lock_.Release(); }
  FrameworkLockGuard(const FrameworkLockGuard&) = delete;
  FrameworkLockGuard& operator=(const FrameworkLockGuard&) = delete;

 private:
  FrameworkLock& lock_;
};

class LockFactory {
 public:
  virtual ~LockFactory() = default;
  virtual std::shared_ptr<FrameworkLock> CreateLock() = 0;
};

// Plain mutexes; the default outside record and replay.
class PlainLockFactory : public LockFactory {
 public:
  std::shared_ptr<FrameworkLock> CreateLock() override;

 private:
  uint64_t next_id_ = 0;
};

// Mutexes whose create/acquire/release events flow into the recorder.
// Acquisition is recorded while the lock is held, so the per-lock
// subsequence of the log is the true acquisition order.
class RecordingLockFactory : public LockFactory {
 public:
  RecordingLockFactory(Recorder& recorder, PolicyId policy)
      : recorder_(recorder), policy_(policy) {}

  std::shared_ptr<FrameworkLock> CreateLock() override;

 private:
  Recorder& recorder_;
  PolicyId policy_;
  uint64_t next_id_ = 0;
};

// Locks that admit acquirers only in a prerecorded per-lock worker
// order; a thread arriving before its turn blocks until the earlier
// acquirers have come and gone. Locks with no recorded turns (policy
// skew) admit freely. Cancel() demotes every lock to plain mutual
// exclusion so a wedged replay can drain instead of hanging.
class ReplayLockFactory : public LockFactory {
 public:
  explicit ReplayLockFactory(std::map<uint64_t, std::vector<WorkerId>> turns);

  std::shared_ptr<FrameworkLock> CreateLock() override;
  void Cancel();

  struct CancelState;  // shared with the turn locks it hands out

 private:
  std::map<uint64_t, std::vector<WorkerId>> turns_;
  std::shared_ptr<CancelState> cancel_;
  uint64_t next_id_ = 0;
};

}  // namespace schedlab

#endif  // SCHEDLAB_LOCKS_H_
