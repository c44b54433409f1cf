// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/hints.h"

#include <cstring>

#include "schedlab/logging.h"

namespace schedlab {

HintQueue::HintQueue(uint64_t id, HintDirection direction, uint32_t capacity,
                     uint32_t record_width)
    : id_(id),
      direction_(direction),
      capacity_(capacity),
      record_width_(record_width),
      cells_(static_cast<size_t>(capacity) * record_width) {
  CHECK_GT(capacity, 0u);
  CHECK_EQ(capacity & (capacity - 1), 0u);  // power of two
  CHECK_GT(record_width, 0u);
}

bool HintQueue::Push(std::span<const uint8_t> record) {
  CHECK_EQ(record.size(), record_width_);
  const uint64_t tail = tail_.load(std::memory_order_relaxed);
  const uint64_t head = head_.load(std::memory_order_acquire);
  if (tail - head == capacity_) {
    return false;  // full
  }
  const size_t slot = static_cast<size_t>(tail & (capacity_ - 1));
  std::memcpy(cells_.data() + slot * record_width_, record.data(),
              record_width_);
  tail_.store(tail + 1, std::memory_order_release);
  return true;
}

std::optional<std::vector<uint8_t>> HintQueue::Pop() {
  const uint64_t head = head_.load(std::memory_order_relaxed);
  const uint64_t tail = tail_.load(std::memory_order_acquire);
  if (head == tail) {
    return std::nullopt;  // empty
  }
  const size_t slot = static_cast<size_t>(head & (capacity_ - 1));
  std::vector<uint8_t> out(record_width_);
  std::memcpy(out.data(), cells_.data() + slot * record_width_, record_width_);
  head_.store(head + 1, std::memory_order_release);
  return out;
}

bool HintQueue::Empty() const {
  return head_.load(std::memory_order_acquire) ==
         tail_.load(std::memory_order_acquire);
}

}  // namespace schedlab
