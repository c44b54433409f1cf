// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_REGISTRY_H_
#define SCHEDLAB_REGISTRY_H_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "schedlab/message.h"
#include "schedlab/policy.h"
#include "schedlab/recorder.h"
#include "schedlab/types.h"

namespace schedlab {

// Writer-preferring read-write gate used to quiesce one policy.
// Ordinary policy calls hold it in read mode; registration changes and
// upgrades hold it in write mode. Once a writer waits, no new readers
// are admitted, bounding the drain.
//
// The lock also self-audits: any reader observed inside a writer hold
// bumps `overlap_violations`, which correct operation keeps at zero.
class QuiesceLock {
 public:
  void ReaderAcquire();
  void ReaderRelease();
  void WriterAcquire();
  void WriterRelease();

  uint64_t overlap_violations() const {
    return violations_.load(std::memory_order_relaxed);
  }

  class ReadGuard {
   public:
    explicit ReadGuard(QuiesceLock& lock) : lock_(lock) {
      lock_.ReaderAcquire();
    }
    ~ReadGuard() { lock_.ReaderRelease(); }
    ReadGuard(const ReadGuard&) = delete;
    ReadGuard& operator=(const ReadGuard&) = delete;

   private:
    QuiesceLock& lock_;
  };

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int active_readers_ = 0;
  int writers_waiting_ = 0;
  bool writer_active_ = false;
  std::atomic<uint64_t> violations_{0};
};

enum class RegisterResult : uint8_t { kOk = 0, kIdTaken = 1 };
enum class UnregisterResult : uint8_t { kOk = 0, kBusy = 1, kUnknownId = 2 };

enum class UpgradeError : uint8_t {
  kUnknownId = 0,
  kFormatMismatch = 1,
  kPrepFailure = 2,
  kInitRejected = 3,
  kRecordingActive = 4,
};

struct UpgradeOutcome {
  bool ok = false;
  UpgradeError error = UpgradeError::kUnknownId;
  uint64_t blackout_ns = 0;  // writer-held duration, wall clock

  static UpgradeOutcome Success(uint64_t blackout_ns) {
    UpgradeOutcome o;
    o.ok = true;
    o.blackout_ns = blackout_ns;
    return o;
  }
  static UpgradeOutcome Failure(UpgradeError error) {
    UpgradeOutcome o;
    o.error = error;
    return o;
  }
};

// Policy registration and dispatch indirection. Tasks reference
// policies by id only; every framework->policy call routes through
// Call(), which holds the policy's quiesce lock in read mode, so a
// live upgrade (writer mode) observes a fully drained module.
class PolicyRegistry {
 public:
  PolicyRegistry() = default;
  PolicyRegistry(const PolicyRegistry&) = delete;
  PolicyRegistry& operator=(const PolicyRegistry&) = delete;

  RegisterResult Register(PolicyId id, std::shared_ptr<SchedulerPolicy> policy);
  UnregisterResult Unregister(PolicyId id);

  // Quiesces the policy, transfers the state capsule from the live
  // instance to `next`, and swaps the dispatch indirection. On any
  // failure the old instance keeps running with its state restored.
  UpgradeOutcome LiveUpgrade(PolicyId id,
                             std::shared_ptr<SchedulerPolicy> next);

  // The only sanctioned dispatch route into a policy.
  SchedResponse Call(PolicyId id, SchedMessage msg);

  bool AttachTask(PolicyId id);
  void DetachTask(PolicyId id);
  size_t AttachedTasks(PolicyId id) const;

  bool Registered(PolicyId id) const;
  std::shared_ptr<SchedulerPolicy> Instance(PolicyId id) const;

  // Attaching a recorder taps Call(); upgrades are refused while one
  // is attached.
  void SetRecorder(Recorder* recorder) { recorder_ = recorder; }
  Recorder* recorder() const { return recorder_; }

  uint64_t quiesce_violations() const;

 private:
  struct Slot {
    std::shared_ptr<SchedulerPolicy> instance;
    QuiesceLock quiesce;
    std::atomic<size_t> attached{0};
  };

  std::shared_ptr<Slot> FindSlot(PolicyId id) const;

  mutable std::mutex mu_;
  std::map<PolicyId, std::shared_ptr<Slot>> slots_;
  Recorder* recorder_ = nullptr;
};

}  // namespace schedlab

#endif  // SCHEDLAB_REGISTRY_H_
