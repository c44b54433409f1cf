// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_REPLAY_H_
#define SCHEDLAB_REPLAY_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedlab/locks.h"
#include "schedlab/policy.h"
#include "schedlab/recorder.h"

namespace schedlab {

class CorruptLog : public std::runtime_error {
 public:
  CorruptLog(size_t offset, const std::string& what)
      : std::runtime_error("corrupt log at offset " + std::to_string(offset) +
                           ": " + what),
        offset_(offset) {}

  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

struct LoadedLog {
  LogHeader header;
  std::vector<RecordEvent> events;
  uint64_t drops = 0;

  // Policies present in the log (from call events).
  std::vector<PolicyId> Policies() const;
  // Per-lock acquisition order for one policy's locks.
  std::map<uint64_t, std::vector<WorkerId>> LockTurnsFor(PolicyId policy) const;
};

// Parses a record log; throws CorruptLog on framing damage, reporting
// the offset of the first bad byte.
LoadedLog LoadLog(const std::string& path);

struct ReplayMismatch {
  uint64_t seq = 0;  // seq of the recorded response diverged from
  std::string expected;
  std::string actual;

  bool operator==(const ReplayMismatch&) const = default;
};

struct ReplayReport {
  uint64_t replayed = 0;
  std::vector<ReplayMismatch> mismatches;
  uint64_t lock_order_stalls = 0;  // watchdog incidents, not ordinary waits
  uint64_t drops = 0;
  bool refused_drops_present = false;
  bool deadlock = false;

  uint64_t FirstMismatchSeq() const {
    return mismatches.empty() ? 0 : mismatches.front().seq;
  }
  // Canonical rendering; equal replays serialize equally.
  std::string ToString() const;
};

struct ReplayOptions {
  PolicyId policy = 0;  // 0 = the single policy recorded
  size_t window = 256;  // in-flight replay workers
  std::chrono::milliseconds stall_timeout{2000};
};

// Re-runs the recorded message stream against `policy`, one replay
// worker per recorded call, each named with the recorded worker id.
// The policy must have been constructed against a ReplayLockFactory
// fed with LockTurnsFor(policy) so every lock admits acquirers in
// recorded order. Responses are validated byte-for-byte.
ReplayReport Replay(const LoadedLog& log, SchedulerPolicy& policy,
                    ReplayLockFactory& locks, ReplayOptions options = {});

}  // namespace schedlab

#endif  // SCHEDLAB_REPLAY_H_
