// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/token.h"

namespace schedlab {

Schedulable TokenRegistry::MintLocked(TaskId task, CoreId core) {
  uint64_t serial = next_serial_++;
  live_by_task_[task] = serial;
  return Schedulable(task, core, serial);
}

std::optional<Schedulable> TokenRegistry::Issue(TaskId task, CoreId core,
                                                IssueError* error) {
  std::lock_guard<std::mutex> lock(mu_);
  if (live_by_task_.contains(task)) {
    if (error != nullptr) *error = IssueError::kDuplicateToken;
    return std::nullopt;
  }
  return MintLocked(task, core);
}

Schedulable TokenRegistry::Supersede(TaskId task, CoreId core) {
  std::lock_guard<std::mutex> lock(mu_);
  return MintLocked(task, core);
}

ConsumeOutcome TokenRegistry::Consume(Schedulable token, CoreId expected_core) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = live_by_task_.find(token.task());
  const bool live = it != live_by_task_.end() && it->second == token.serial();
  if (!live) {
    return ConsumeOutcome{TokenVerdict::kStale, std::move(token)};
  }
  if (token.core() != expected_core) {
    return ConsumeOutcome{TokenVerdict::kWrongCore, std::move(token)};
  }
  live_by_task_.erase(it);
  return ConsumeOutcome{TokenVerdict::kOk, std::nullopt};
}

void TokenRegistry::Discard(Schedulable token) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = live_by_task_.find(token.task());
  if (it != live_by_task_.end() && it->second == token.serial()) {
    live_by_task_.erase(it);
  }
}

bool TokenRegistry::HasLive(TaskId task) const {
  std::lock_guard<std::mutex> lock(mu_);
  return live_by_task_.contains(task);
}

bool TokenRegistry::IsLiveSerial(TaskId task, uint64_t serial) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = live_by_task_.find(task);
  return it != live_by_task_.end() && it->second == serial;
}

size_t TokenRegistry::live_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return live_by_task_.size();
}

uint64_t TokenRegistry::serials_issued() const {
  std::lock_guard<std::mutex> lock(mu_);
  return next_serial_ - 1;
}

}  // namespace schedlab
