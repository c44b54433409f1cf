// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_TYPES_H_
#define SCHEDLAB_TYPES_H_

#include <compare>
#include <cstdint>
#include <functional>
#include <string_view>

namespace schedlab {

// Identity of one simulated task. Never reused within a run.
struct TaskId {
  uint64_t id = 0;

  auto operator<=>(const TaskId&) const = default;
};

// Index of one simulated core, in [0, num_cores).
struct CoreId {
  uint32_t index = 0;

  auto operator<=>(const CoreId&) const = default;
};

// Small integer a policy registers under. Tasks reference policies by id.
using PolicyId = uint32_t;

// Tag identifying the thread that issued a framework->policy call.
// Core workers use their core index; the sentinel below marks the
// control thread. Ids are not required to be dense.
using WorkerId = uint32_t;
inline constexpr WorkerId kControlWorker = 0xFFFFFFFFu;

// Unix nice value, -20 (highest priority) to 19 (lowest).
using Nice = int;
inline constexpr Nice kMinNice = -20;
inline constexpr Nice kMaxNice = 19;

enum class HintDirection : uint8_t {
  kUserToSched = 0,
  kSchedToUser = 1,
};

// The seventeen calls a policy must answer, plus nothing else.
enum class MessageKind : uint8_t {
  kPickNextTask = 0,
  kPntErr = 1,
  kTaskNew = 2,
  kTaskWakeup = 3,
  kTaskBlocked = 4,
  kTaskDead = 5,
  kTaskTick = 6,
  kSelectTaskRq = 7,
  kMigrateTaskRq = 8,
  kBalance = 9,
  kBalanceErr = 10,
  kRegisterQueue = 11,
  kEnterQueue = 12,
  kUnregisterQueue = 13,
  kParseHint = 14,
  kReregisterPrep = 15,
  kReregisterInit = 16,
};
inline constexpr int kNumMessageKinds = 17;

std::string_view MessageKindName(MessageKind kind);

}  // namespace schedlab

template <>
struct std::hash<schedlab::TaskId> {
  size_t operator()(const schedlab::TaskId& t) const noexcept {
    return std::hash<uint64_t>{}(t.id);
  }
};

template <>
struct std::hash<schedlab::CoreId> {
  size_t operator()(const schedlab::CoreId& c) const noexcept {
    return std::hash<uint32_t>{}(c.index);
  }
};

#endif  // SCHEDLAB_TYPES_H_
