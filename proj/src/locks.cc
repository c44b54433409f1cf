// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/locks.h"

#include "schedlab/logging.h"
#include "schedlab/recorder.h"
#include "schedlab/worker_context.h"

namespace schedlab {

namespace {

thread_local WorkerId tls_worker = kControlWorker;

class PlainLock : public FrameworkLock {
 public:
  explicit PlainLock(uint64_t id) : FrameworkLock(id) {}

  void Acquire() override { mu_.lock(); }
  void Release() override { mu_.unlock(); }

 private:
  std::mutex mu_;
};

class RecordingLock : public FrameworkLock {
 public:
  RecordingLock(uint64_t id, Recorder& recorder, PolicyId policy)
      : FrameworkLock(id), recorder_(recorder), policy_(policy) {
    recorder_.RecordLockEvent(RecordKind::kLockCreate, policy_, this->id());
  }

  void Acquire() override {
    mu_.lock();
    // Recorded while held: the log's per-lock order is acquisition order.
    recorder_.RecordLockEvent(RecordKind::kLockAcquire, policy_, id());
  }

  void Release() override {
    recorder_.RecordLockEvent(RecordKind::kLockRelease, policy_, id());
    mu_.unlock();
  }

 private:
  std::mutex mu_;
  Recorder& recorder_;
  PolicyId policy_;
};

}  // namespace

struct ReplayLockFactory::CancelState {
  std::atomic<bool> cancelled{false};
  std::mutex mu;
  std::vector<std::condition_variable*> cvs;
};

namespace {

// Admits acquirers in the recorded worker order, blocking early
// arrivals until their turn. Turns advance on acquire, so a release is
// cheap and exception paths cannot wedge the schedule.
class TurnLock : public FrameworkLock {
 public:
  TurnLock(uint64_t id, std::vector<WorkerId> turns,
           std::shared_ptr<ReplayLockFactory::CancelState> cancel)
      : FrameworkLock(id), turns_(std::move(turns)), cancel_(std::move(cancel)) {
    std::lock_guard<std::mutex> lock(cancel_->mu);
    cancel_->cvs.push_back(&cv_);
  }

  ~TurnLock() override {
    std::lock_guard<std::mutex> lock(cancel_->mu);
    std::erase(cancel_->cvs, &cv_);
  }

  void Acquire() override {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] {
      if (held_) return false;
      if (cancel_->cancelled.load(std::memory_order_relaxed)) return true;
      if (next_ >= turns_.size()) return true;  // past the recorded tail
      return turns_[next_] == CurrentWorker();
    });
    if (next_ < turns_.size()) ++next_;
    held_ = true;
  }

  void Release() override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      held_ = false;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<WorkerId> turns_;
  std::shared_ptr<ReplayLockFactory::CancelState> cancel_;
  size_t next_ = 0;
  bool held_ = false;
};

}  // namespace

WorkerId CurrentWorker() { return tls_worker; }

void SetCurrentWorker(WorkerId worker) { tls_worker = worker; }

std::shared_ptr<FrameworkLock> PlainLockFactory::CreateLock() {
  return std::make_shared<PlainLock>(next_id_++);
}

std::shared_ptr<FrameworkLock> RecordingLockFactory::CreateLock() {
  return std::make_shared<RecordingLock>(next_id_++, recorder_, policy_);
}

ReplayLockFactory::ReplayLockFactory(
    std::map<uint64_t, std::vector<WorkerId>> turns)
    : turns_(std::move(turns)), cancel_(std::make_shared<CancelState>()) {}

std::shared_ptr<FrameworkLock> ReplayLockFactory::CreateLock() {
  const uint64_t id = next_id_++;
  auto it = turns_.find(id);
  std::vector<WorkerId> turns;
  if (it != turns_.end()) turns = it->second;
  return std::make_shared<TurnLock>(id, std::move(turns), cancel_);
}

void ReplayLockFactory::Cancel() {
  cancel_->cancelled.store(true, std::memory_order_relaxed);
  std::lock_guard<std::mutex> lock(cancel_->mu);
  for (std::condition_variable* cv : cancel_->cvs) cv->notify_all();
}

}  // namespace schedlab
