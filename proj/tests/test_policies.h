// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_TESTS_TEST_POLICIES_H_
#define SCHEDLAB_TESTS_TEST_POLICIES_H_

#include <deque>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "schedlab/locks.h"
#include "schedlab/policy.h"

namespace schedlab::testing {

// Minimal correct policy: one global FIFO, no preemption, placement on
// the lowest-index core. Used to exercise framework plumbing without
// the reference policies' complexity.
class FifoTestPolicy : public SchedulerPolicy {
 public:
  FifoTestPolicy(uint32_t num_cores, LockFactory& locks)
      : num_cores_(num_cores), lock_(locks.CreateLock()) {}

  std::string_view name() const override { return "fifo-test"; }
  uint64_t capsule_format_tag() const override {
    return CapsuleTag("fifo-test-v1");
  }

  PickDecision PickNextTask(CoreId core, std::optional<Schedulable> current,
                            uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    if (current.has_value()) {
      fifo_.push_back(std::move(*current));
    }
    for (auto it = fifo_.begin(); it != fifo_.end(); ++it) {
      if (it->core() == core) {
        Schedulable token = std::move(*it);
        fifo_.erase(it);
        return PickDecision{std::move(token)};
      }
    }
    return PickDecision{};
  }

  void PntErr(CoreId, Schedulable rejected) override {
    FrameworkLockGuard guard(*lock_);
    pnt_errs_++;
    fifo_.push_back(std::move(rejected));
  }

  void TaskNew(TaskId, Nice, Schedulable token) override {
    FrameworkLockGuard guard(*lock_);
    fifo_.push_back(std::move(token));
  }

  void TaskWakeup(TaskId, Schedulable token, uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    fifo_.push_back(std::move(token));
  }

  std::optional<Schedulable> TaskBlocked(TaskId task, uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    return Remove(task);
  }

  std::optional<Schedulable> TaskDead(TaskId task, uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    return Remove(task);
  }

  TickDecision TaskTick(CoreId, TaskId, uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    return TickDecision{false};
  }

  CoreId SelectTaskRq(TaskId, Nice) override {
    FrameworkLockGuard guard(*lock_);
    return CoreId{0};
  }

  std::optional<Schedulable> MigrateTaskRq(TaskId task,
                                           Schedulable new_token) override {
    FrameworkLockGuard guard(*lock_);
    std::optional<Schedulable> old = Remove(task);
    fifo_.push_back(std::move(new_token));
    return old;
  }

  std::optional<BalanceDecision> Balance(CoreId) override {
    FrameworkLockGuard guard(*lock_);
    return std::nullopt;
  }

  void BalanceErr(CoreId, TaskId, std::optional<Schedulable> token) override {
    FrameworkLockGuard guard(*lock_);
    if (token.has_value()) fifo_.push_back(std::move(*token));
  }

  uint64_t pnt_errs() const { return pnt_errs_; }
  size_t queued() const {
    FrameworkLockGuard guard(*lock_);
    return fifo_.size();
  }

 private:
  std::optional<Schedulable> Remove(TaskId task) {
    for (auto it = fifo_.begin(); it != fifo_.end(); ++it) {
      if (it->task() == task) {
        Schedulable token = std::move(*it);
        fifo_.erase(it);
        return token;
      }
    }
    return std::nullopt;
  }

  uint32_t num_cores_;
  std::shared_ptr<FrameworkLock> lock_;
  std::deque<Schedulable> fifo_;
  uint64_t pnt_errs_ = 0;
};

// Deliberately clumsy policy for the token-safety fuzz. It cycles
// through offering a known-stale token (hoarded across migrations, the
// classic keep-the-wrong-Schedulable bug), a wrong-core token, and a
// valid one, so the framework faces a steady stream of bad dispatches
// while the workload still makes progress. Every tick forces a
// reschedule to maximize the decision rate.
class FaultyTestPolicy : public SchedulerPolicy {
 public:
  FaultyTestPolicy(uint32_t num_cores, LockFactory& locks)
      : num_cores_(num_cores), lock_(locks.CreateLock()) {}

  std::string_view name() const override { return "faulty-test"; }
  uint64_t capsule_format_tag() const override {
    return CapsuleTag("faulty-test-v1");
  }

  PickDecision PickNextTask(CoreId core, std::optional<Schedulable> current,
                            uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    if (current.has_value()) held_.push_back(std::move(*current));
    const uint64_t turn = pick_count_++;
    if (turn % 3 == 0 && !stale_.empty()) {
      Schedulable bad = std::move(stale_.front());
      stale_.pop_front();
      return PickDecision{std::move(bad)};
    }
    if (turn % 3 == 1) {
      for (auto it = held_.begin(); it != held_.end(); ++it) {
        if (it->core() != core) {
          Schedulable bad = std::move(*it);
          held_.erase(it);
          return PickDecision{std::move(bad)};
        }
      }
    }
    for (auto it = held_.begin(); it != held_.end(); ++it) {
      if (it->core() == core) {
        Schedulable token = std::move(*it);
        held_.erase(it);
        return PickDecision{std::move(token)};
      }
    }
    if (!held_.empty()) {
      Schedulable token = std::move(held_.front());
      held_.pop_front();
      return PickDecision{std::move(token)};
    }
    return PickDecision{};
  }

  void PntErr(CoreId, Schedulable rejected) override {
    FrameworkLockGuard guard(*lock_);
    if (stale_serials_.contains(rejected.serial())) {
      stale_.push_back(std::move(rejected));
      if (stale_.size() > 128) {
        stale_serials_.erase(stale_.front().serial());
        stale_.pop_front();  // hoard only so much garbage
      }
    } else {
      held_.push_back(std::move(rejected));
    }
  }

  void TaskNew(TaskId, Nice, Schedulable token) override {
    FrameworkLockGuard guard(*lock_);
    held_.push_back(std::move(token));
  }

  void TaskWakeup(TaskId, Schedulable token, uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    held_.push_back(std::move(token));
  }

  std::optional<Schedulable> TaskBlocked(TaskId task, uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    return Remove(task);
  }

  std::optional<Schedulable> TaskDead(TaskId task, uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    return Remove(task);
  }

  TickDecision TaskTick(CoreId, TaskId, uint64_t) override {
    FrameworkLockGuard guard(*lock_);
    return TickDecision{true};  // churn on every tick
  }

  CoreId SelectTaskRq(TaskId, Nice) override {
    FrameworkLockGuard guard(*lock_);
    return CoreId{next_core_++ % num_cores_};
  }

  std::optional<Schedulable> MigrateTaskRq(TaskId task,
                                           Schedulable new_token) override {
    FrameworkLockGuard guard(*lock_);
    // The classic bug: withhold the superseded token instead of
    // returning it. Both tokens stay in hand; the old one is now
    // stale and gets re-offered in the pick rotation.
    std::optional<Schedulable> old = Remove(task);
    if (old.has_value()) {
      stale_serials_.insert(old->serial());
      stale_.push_back(std::move(*old));
    }
    held_.push_back(std::move(new_token));
    return std::nullopt;
  }

  std::optional<BalanceDecision> Balance(CoreId idle_core) override {
    FrameworkLockGuard guard(*lock_);
    // Nominate whatever it holds for somewhere else, source claims
    // included; most of these are invalid and earn balance_err.
    for (const Schedulable& t : held_) {
      if (t.core() != idle_core) {
        return BalanceDecision{t.task(), t.core(), idle_core};
      }
    }
    return std::nullopt;
  }

  void BalanceErr(CoreId, TaskId, std::optional<Schedulable> token) override {
    FrameworkLockGuard guard(*lock_);
    if (token.has_value()) held_.push_back(std::move(*token));
  }

 private:
  std::optional<Schedulable> Remove(TaskId task) {
    for (auto it = held_.begin(); it != held_.end(); ++it) {
      if (it->task() == task) {
        Schedulable token = std::move(*it);
        held_.erase(it);
        return token;
      }
    }
    return std::nullopt;
  }

  uint32_t num_cores_;
  std::shared_ptr<FrameworkLock> lock_;
  std::deque<Schedulable> held_;
  std::deque<Schedulable> stale_;
  std::set<uint64_t> stale_serials_;
  uint64_t pick_count_ = 0;
  uint32_t next_core_ = 0;
};

}  // namespace schedlab::testing

#endif  // SCHEDLAB_TESTS_TEST_POLICIES_H_
