// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_HINTS_H_
#define SCHEDLAB_HINTS_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "schedlab/types.h"

namespace schedlab {

// Bounded single-producer/single-consumer queue of fixed-width hint
// records. Records are plain bytes so they can be shared across the
// user/scheduler boundary; the queue never blocks and never drops
// silently (a full queue rejects the push).
class HintQueue {
 public:
  // `capacity` must be a power of two.
  HintQueue(uint64_t id, HintDirection direction, uint32_t capacity,
            uint32_t record_width);

  HintQueue(const HintQueue&) = delete;
  HintQueue& operator=(const HintQueue&) = delete;

  // Producer side. Returns false when the queue is full; the caller
  // decides whether to retry. `record` must match the declared width.
  bool Push(std::span<const uint8_t> record);

  // Consumer side. Empty -> nullopt, non-blocking.
  std::optional<std::vector<uint8_t>> Pop();

  uint64_t id() const { return id_; }
  HintDirection direction() const { return direction_; }
  uint32_t capacity() const { return capacity_; }
  uint32_t record_width() const { return record_width_; }
  bool Empty() const;

 private:
  const uint64_t id_;
  const HintDirection direction_;
  const uint32_t capacity_;
  const uint32_t record_width_;
  std::vector<uint8_t> cells_;
  std::atomic<uint64_t> head_{0};  // consumer cursor
  std::atomic<uint64_t> tail_{0};  // producer cursor
};

using QueueHandle = std::shared_ptr<HintQueue>;

// Descriptor handed to a policy in register_queue. For SchedToUser
// queues the handle doubles as the policy's producer endpoint; for
// UserToSched queues the framework stays the sole consumer and the
// handle is left empty.
struct QueueSpec {
  uint64_t queue_id = 0;
  HintDirection direction = HintDirection::kUserToSched;
  uint32_t capacity = 0;
  uint32_t record_width = 0;
  QueueHandle queue;
};

}  // namespace schedlab

#endif  // SCHEDLAB_HINTS_H_
