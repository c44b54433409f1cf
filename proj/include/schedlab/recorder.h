// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_RECORDER_H_
#define SCHEDLAB_RECORDER_H_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "schedlab/message.h"
#include "schedlab/types.h"

namespace schedlab {

enum class RecordKind : uint8_t {
  kCall = 0,
  kResponse = 1,
  kHint = 2,
  kLockCreate = 3,
  kLockAcquire = 4,
  kLockRelease = 5,
  kMeta = 6,  // trailer: drop and event totals
};

std::string_view RecordKindName(RecordKind kind);

struct RecordEvent {
  uint64_t seq = 0;
  WorkerId worker = kControlWorker;
  RecordKind kind = RecordKind::kMeta;
  PolicyId policy = 0;
  uint64_t lock_id = 0;
  uint64_t queue_id = 0;
  std::vector<uint8_t> payload;
};

// Header metadata embedded in every log so a replay can rebuild the
// same policy instance.
struct LogHeader {
  std::string policy_name;
  uint32_t num_cores = 0;
  uint64_t seed = 0;
};

// Captures every policy-bound call, response, hint and lock event.
//
// The scheduler path performs one bounded enqueue into a ring; a
// dedicated drainer thread serializes to the log file. When the ring
// overruns, events are dropped and counted rather than ever blocking
// the caller.
class Recorder {
 public:
  Recorder(std::string path, LogHeader header, size_t ring_capacity = 1 << 16);
  ~Recorder();

  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  void RecordCall(PolicyId policy, const SchedMessage& msg);
  void RecordResponse(PolicyId policy, const SchedResponse& resp);
  void RecordHint(uint64_t queue_id, std::span<const uint8_t> record);
  void RecordLockEvent(RecordKind kind, PolicyId policy, uint64_t lock_id);

  // Stops the drainer, flushes the ring and writes the trailer.
  // Idempotent; also run by the destructor.
  void Finish();

  uint64_t drops() const { return drops_.load(std::memory_order_relaxed); }
  uint64_t events_recorded() const {
    return recorded_.load(std::memory_order_relaxed);
  }

 private:
  void Enqueue(RecordEvent event);
  void DrainLoop();
  void WriteEvent(const RecordEvent& event);

  const std::string path_;
  const size_t ring_capacity_;
  std::ofstream out_;

  std::mutex ring_mu_;
  std::condition_variable ring_cv_;
  std::deque<RecordEvent> ring_;
  uint64_t next_seq_ = 0;
  bool stopping_ = false;
  bool finished_ = false;

  std::atomic<uint64_t> drops_{0};
  std::atomic<uint64_t> recorded_{0};
  std::thread drainer_;
};

}  // namespace schedlab

#endif  // SCHEDLAB_RECORDER_H_
