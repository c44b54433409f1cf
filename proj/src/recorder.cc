// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/recorder.h"

#include <utility>

#include "schedlab/logging.h"
#include "schedlab/wire.h"
#include "schedlab/worker_context.h"

namespace schedlab {

std::string_view RecordKindName(RecordKind kind) {
  switch (kind) {
    case RecordKind::kCall:
      return "call";
    case RecordKind::kResponse:
      return "response";
    case RecordKind::kHint:
      return "hint";
    case RecordKind::kLockCreate:
      return "lock_create";
    case RecordKind::kLockAcquire:
      return "lock_acquire";
    case RecordKind::kLockRelease:
      return "lock_release";
    case RecordKind::kMeta:
      return "meta";
  }
  return "unknown";
}

Recorder::Recorder(std::string path, LogHeader header, size_t ring_capacity)
    : path_(std::move(path)), ring_capacity_(ring_capacity) {
  out_.open(path_, std::ios::binary | std::ios::trunc);
  CHECK(out_.is_open());
  wire::WriteLogHeader(out_, header);
  drainer_ = std::thread([this] { DrainLoop(); });
}

Recorder::~Recorder() { Finish(); }

void Recorder::Enqueue(RecordEvent event) {
  {
    std::lock_guard<std::mutex> lock(ring_mu_);
    if (stopping_) return;
    if (ring_.size() >= ring_capacity_) {
      drops_.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    event.seq = next_seq_++;
    ring_.push_back(std::move(event));
  }
  ring_cv_.notify_one();
}

void Recorder::RecordCall(PolicyId policy, const SchedMessage& msg) {
  RecordEvent e;
  e.worker = CurrentWorker();
  e.kind = RecordKind::kCall;
  e.policy = policy;
  e.payload = wire::EncodeMessage(msg);
  Enqueue(std::move(e));
}

void Recorder::RecordResponse(PolicyId policy, const SchedResponse& resp) {
  RecordEvent e;
  e.worker = CurrentWorker();
  e.kind = RecordKind::kResponse;
  e.policy = policy;
  e.payload = wire::EncodeResponse(resp);
  Enqueue(std::move(e));
}

void Recorder::RecordHint(uint64_t queue_id, std::span<const uint8_t> record) {
  RecordEvent e;
  e.worker = CurrentWorker();
  e.kind = RecordKind::kHint;
  e.queue_id = queue_id;
  e.payload.assign(record.begin(), record.end());
  Enqueue(std::move(e));
}

void Recorder::RecordLockEvent(RecordKind kind, PolicyId policy,
                               uint64_t lock_id) {
  RecordEvent e;
  e.worker = CurrentWorker();
  e.kind = kind;
  e.policy = policy;
  e.lock_id = lock_id;
  Enqueue(std::move(e));
}

void Recorder::DrainLoop() {
  std::unique_lock<std::mutex> lock(ring_mu_);
  for (;;) {
    ring_cv_.wait(lock, [this] { return !ring_.empty() || stopping_; });
    while (!ring_.empty()) {
      RecordEvent event = std::move(ring_.front());
      ring_.pop_front();
      lock.unlock();
      WriteEvent(event);
      recorded_.fetch_add(1, std::memory_order_relaxed);
      lock.lock();
    }
    if (stopping_) return;
  }
}

void Recorder::WriteEvent(const RecordEvent& event) {
  wire::WriteLogEvent(out_, event);
}

void Recorder::Finish() {
  {
    std::lock_guard<std::mutex> lock(ring_mu_);
    if (finished_) return;
    finished_ = true;
    stopping_ = true;
  }
  ring_cv_.notify_one();
  if (drainer_.joinable()) drainer_.join();

  RecordEvent trailer;
  trailer.seq = next_seq_++;
  trailer.kind = RecordKind::kMeta;
  wire::ByteWriter w;
  w.U64(drops_.load(std::memory_order_relaxed));
  w.U64(recorded_.load(std::memory_order_relaxed));
  trailer.payload = w.Take();
  WriteEvent(trailer);
  out_.flush();
  out_.close();
}

}  // namespace schedlab
