// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/registry.h"

#include <chrono>
#include <utility>

#include "schedlab/logging.h"

namespace schedlab {

void QuiesceLock::ReaderAcquire() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return writers_waiting_ == 0 && !writer_active_; });
  ++active_readers_;
  if (writer_active_) violations_.fetch_add(1, std::memory_order_relaxed);
}

void QuiesceLock::ReaderRelease() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    --active_readers_;
  }
  cv_.notify_all();
}

void QuiesceLock::WriterAcquire() {
  std::unique_lock<std::mutex> lock(mu_);
  ++writers_waiting_;
  cv_.wait(lock, [this] { return active_readers_ == 0 && !writer_active_; });
  --writers_waiting_;
  writer_active_ = true;
  if (active_readers_ != 0) violations_.fetch_add(1, std::memory_order_relaxed);
}

void QuiesceLock::WriterRelease() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    writer_active_ = false;
  }
  cv_.notify_all();
}

std::shared_ptr<PolicyRegistry::Slot> PolicyRegistry::FindSlot(
    PolicyId id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = slots_.find(id);
  return it == slots_.end() ? nullptr : it->second;
}

RegisterResult PolicyRegistry::Register(
    PolicyId id, std::shared_ptr<SchedulerPolicy> policy) {
  CHECK(policy != nullptr);
  std::lock_guard<std::mutex> lock(mu_);
  if (slots_.contains(id)) return RegisterResult::kIdTaken;
  auto slot = std::make_shared<Slot>();
  slot->instance = std::move(policy);
  slots_.emplace(id, std::move(slot));
  return RegisterResult::kOk;
}

UnregisterResult PolicyRegistry::Unregister(PolicyId id) {
  std::shared_ptr<Slot> slot = FindSlot(id);
  if (slot == nullptr) return UnregisterResult::kUnknownId;

  // Drain in-flight calls before deciding; a call that raced us
  // completes first.
  slot->quiesce.WriterAcquire();
  if (slot->attached.load(std::memory_order_relaxed) != 0) {
    slot->quiesce.WriterRelease();
    return UnregisterResult::kBusy;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    slots_.erase(id);
  }
  slot->quiesce.WriterRelease();
  return UnregisterResult::kOk;
}

UpgradeOutcome PolicyRegistry::LiveUpgrade(
    PolicyId id, std::shared_ptr<SchedulerPolicy> next) {
  CHECK(next != nullptr);
  if (recorder_ != nullptr) {
    return UpgradeOutcome::Failure(UpgradeError::kRecordingActive);
  }
  std::shared_ptr<Slot> slot = FindSlot(id);
  if (slot == nullptr) return UpgradeOutcome::Failure(UpgradeError::kUnknownId);
  if (next->capsule_format_tag() != slot->instance->capsule_format_tag()) {
    return UpgradeOutcome::Failure(UpgradeError::kFormatMismatch);
  }

  slot->quiesce.WriterAcquire();
  const auto t0 = std::chrono::steady_clock::now();

  UpgradeCapsule capsule;
  try {
    capsule = slot->instance->ReregisterPrep();
  } catch (...) {
    slot->quiesce.WriterRelease();
    return UpgradeOutcome::Failure(UpgradeError::kPrepFailure);
  }
  if (capsule.format_tag != slot->instance->capsule_format_tag()) {
    // The exporter misdeclared itself; put its state back and abort.
    slot->instance->ReregisterInit(capsule);
    slot->quiesce.WriterRelease();
    return UpgradeOutcome::Failure(UpgradeError::kPrepFailure);
  }

  bool imported = false;
  try {
    imported = next->ReregisterInit(capsule);
  } catch (...) {
    imported = false;
  }
  if (!imported) {
    slot->instance->ReregisterInit(capsule);
    slot->quiesce.WriterRelease();
    return UpgradeOutcome::Failure(UpgradeError::kInitRejected);
  }

  slot->instance = std::move(next);

  const auto t1 = std::chrono::steady_clock::now();
  slot->quiesce.WriterRelease();
  const uint64_t blackout_ns = static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  return UpgradeOutcome::Success(blackout_ns);
}

SchedResponse PolicyRegistry::Call(PolicyId id, SchedMessage msg) {
  std::shared_ptr<Slot> slot = FindSlot(id);
  CHECK(slot != nullptr);
  QuiesceLock::ReadGuard guard(slot->quiesce);
  if (recorder_ != nullptr) recorder_->RecordCall(id, msg);
  SchedResponse resp = PolicyCall(*slot->instance, std::move(msg));
  if (recorder_ != nullptr) recorder_->RecordResponse(id, resp);
  return resp;
}

bool PolicyRegistry::AttachTask(PolicyId id) {
  std::shared_ptr<Slot> slot = FindSlot(id);
  if (slot == nullptr) return false;
  slot->attached.fetch_add(1, std::memory_order_relaxed);
  return true;
}

void PolicyRegistry::DetachTask(PolicyId id) {
  std::shared_ptr<Slot> slot = FindSlot(id);
  if (slot == nullptr) return;
  CHECK_GT(slot->attached.load(std::memory_order_relaxed), 0u);
  slot->attached.fetch_sub(1, std::memory_order_relaxed);
}

size_t PolicyRegistry::AttachedTasks(PolicyId id) const {
  std::shared_ptr<Slot> slot = FindSlot(id);
  return slot == nullptr ? 0 : slot->attached.load(std::memory_order_relaxed);
}

bool PolicyRegistry::Registered(PolicyId id) const {
  return FindSlot(id) != nullptr;
}

std::shared_ptr<SchedulerPolicy> PolicyRegistry::Instance(PolicyId id) const {
  std::shared_ptr<Slot> slot = FindSlot(id);
  return slot == nullptr ? nullptr : slot->instance;
}

uint64_t PolicyRegistry::quiesce_violations() const {
  std::lock_guard<std::mutex> lock(mu_);
  uint64_t total = 0;
  for (const auto& [id, slot] : slots_) {
    total += slot->quiesce.overlap_violations();
  }
  return total;
}

}  // namespace schedlab
