// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_SIM_H_
#define SCHEDLAB_SIM_H_

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "schedlab/hints.h"
#include "schedlab/metrics.h"
#include "schedlab/recorder.h"
#include "schedlab/registry.h"
#include "schedlab/token.h"
#include "schedlab/types.h"

namespace schedlab {

// ---------------------------------------------------------------------------
// Workload model

struct ComputeStep {
  uint64_t duration_ns = 0;
};
struct BlockStep {
  uint64_t event = 0;
};
struct SignalStep {
  uint64_t event = 0;
};
struct YieldStep {};
struct ExitStep {};

using ProgramStep =
    std::variant<ComputeStep, BlockStep, SignalStep, YieldStep, ExitStep>;

struct TaskSpec {
  TaskId id;
  Nice nice = 0;
  uint64_t arrival_ns = 0;
  PolicyId policy = 1;
  std::optional<CoreId> pinned;
  uint32_t cohort = 0;  // free-form label used by benchmark reports
  std::vector<ProgramStep> program;
};

struct MigrateDirective {
  uint64_t at_ns = 0;
  TaskId task;
  CoreId to;
};

struct HintDirective {
  enum class Kind : uint8_t { kRaw = 0, kLocality, kArbiterRequest, kArbiterBind };

  uint64_t at_ns = 0;
  PolicyId policy = 1;
  HintDirection direction = HintDirection::kUserToSched;
  Kind kind = Kind::kRaw;  // how the record renders in workload files
  std::vector<uint8_t> record;
};

struct Workload {
  std::vector<TaskSpec> tasks;
  std::vector<MigrateDirective> migrations;
  std::vector<HintDirective> hints;
};

// ---------------------------------------------------------------------------
// Simulation configuration

enum class SimMode : uint8_t { kVirtualTime = 0, kConcurrent = 1 };

struct SimConfig {
  uint32_t num_cores = 1;
  uint64_t tick_period_ns = 1'000'000;
  SimMode mode = SimMode::kVirtualTime;
  // Concurrent mode pacing: virtual nanoseconds per wall nanosecond.
  uint64_t time_scale = 1000;
  uint64_t seed = 1;
  // Modeled cost of the kernel wake path; same-core wakers are cheaper,
  // which is the whole locality effect in this simulator.
  uint64_t same_core_wake_ns = 2'000;
  uint64_t cross_core_wake_ns = 45'000;
  // Latency samples earlier than this are counted but not reported.
  uint64_t warmup_ns = 0;
  bool keep_trace = true;
};

enum class TaskState : uint8_t {
  kNew = 0,
  kRunnable = 1,
  kRunning = 2,
  kBlocked = 3,
  kDead = 4,
};

// How a task last became runnable; decides which latency series its
// next dispatch samples into.
enum class RunnableProvenance : uint8_t { kNew = 0, kWake = 1, kPreempt = 2 };

struct TraceEntry {
  uint64_t at_ns = 0;
  uint8_t kind = 0;
  uint32_t core = 0;
  uint64_t task = 0;

  bool operator==(const TraceEntry&) const = default;
};

// Trace kinds 0..5 mirror the event kinds; these two mark dispatch
// outcomes.
inline constexpr uint8_t kTraceDispatchKind = 10;
inline constexpr uint8_t kTraceIdleKind = 11;

// ---------------------------------------------------------------------------
// Simulator

// Discrete-event simulator playing the core-kernel role: it owns cores,
// run-queue membership, virtual time, ticks and task lifecycle, builds
// the messages policies consume, and validates every returned token
// before anything runs.
//
// VirtualTime mode is single-threaded and bit-reproducible under a
// fixed seed. Concurrent mode runs one worker per simulated core with
// wall-clock pacing and exists to exercise record/replay lock ordering;
// its timing metrics are approximate by design.
class Simulator {
 public:
  Simulator(SimConfig config, PolicyRegistry& registry,
            std::vector<PolicyId> policy_order);
  ~Simulator();

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // -- Setup (before Run*) --------------------------------------------------
  void Spawn(TaskSpec spec);
  void AddWorkload(const Workload& workload);
  // Registers a hint queue with the policy; nullopt if it declines.
  std::optional<uint64_t> CreateQueue(PolicyId policy, HintDirection direction,
                                      uint32_t capacity);
  void CloseQueue(uint64_t queue_id);
  void ScheduleMigration(uint64_t at_ns, TaskId task, CoreId to);
  // Arbitrary control-plane action at a virtual time (VirtualTime mode).
  void ScheduleAction(uint64_t at_ns, std::function<void()> action);
  void SetRecorder(Recorder* recorder);

  // -- User-side hint endpoints ----------------------------------------------
  bool SendHint(uint64_t queue_id, std::span<const uint8_t> record);
  std::optional<std::vector<uint8_t>> RecvHint(uint64_t queue_id);
  std::optional<uint64_t> QueueIdFor(PolicyId policy, HintDirection direction);

  // -- Execution -------------------------------------------------------------
  // Processes one pending event (VirtualTime). False when none remain.
  bool Step();
  // Runs to `t_end_ns` (0 = until all tasks dead / no events).
  Metrics RunUntil(uint64_t t_end_ns = 0);

  uint64_t now() const { return clock_ns_; }
  uint64_t live_tasks() const { return live_tasks_; }
  const Metrics& metrics() const { return metrics_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  const SimConfig& config() const { return config_; }
  TaskState StateOf(TaskId task) const;
  std::optional<TaskId> CurrentOn(CoreId core) const;

  // Finalizes accounting (core busy time, duration) without running.
  Metrics Finish();

 private:
  struct SimTask {
    TaskSpec spec;
    TaskState state = TaskState::kNew;
    size_t pc = 0;
    uint64_t step_remaining_ns = 0;
    uint64_t accumulated_ns = 0;
    uint64_t unreported_ns = 0;
    uint64_t runnable_since_ns = 0;
    RunnableProvenance provenance = RunnableProvenance::kNew;
    CoreId core{};
    uint64_t dispatches = 0;
    bool wake_in_flight = false;
  };

  struct CoreState {
    CoreId id{};
    std::optional<TaskId> current;
    uint64_t busy_ns = 0;
    uint64_t last_account_ns = 0;
    uint64_t tick_gen = 0;
    bool tick_armed = false;
    uint64_t run_gen = 0;
    std::vector<TaskId> runnable;  // membership, insertion ordered
  };

  enum class EventKind : uint8_t {
    kComputeDone = 0,
    kTick = 1,
    kWakeReady = 2,
    kArrival = 3,
    kMigration = 4,
    kAction = 5,
  };

  struct Event {
    uint64_t at_ns;
    uint32_t core_key;  // kNoCore for core-less events
    EventKind kind;
    uint64_t seq;
    TaskId task{};
    CoreId core{};
    uint64_t gen = 0;
    size_t index = 0;  // action/migration index

    // Identical timestamps order by (core, kind), then insertion.
    bool operator>(const Event& o) const {
      if (at_ns != o.at_ns) return at_ns > o.at_ns;
      if (core_key != o.core_key) return core_key > o.core_key;
      if (kind != o.kind) return kind > o.kind;
      return seq > o.seq;
    }
  };

  static constexpr uint32_t kNoCore = 0xFFFFFFFFu;

  struct SemState {
    uint64_t pending = 0;
    std::deque<TaskId> waiters;
  };

  struct RegisteredQueue {
    QueueHandle queue;
    PolicyId policy = 0;
  };

  // Event plumbing.
  void Push(Event e);
  void ProcessEvent(const Event& e);
  void Trace(uint8_t kind, uint32_t core, uint64_t task);

  // Framework call path (records, counts, quiesce-guards).
  SchedResponse Call(PolicyId policy, SchedMessage msg);

  // Lifecycle handlers.
  void HandleArrival(TaskId task);
  void HandleWakeReady(TaskId task, CoreId core);
  void HandleTick(CoreId core, uint64_t gen);
  void HandleComputeDone(CoreId core, uint64_t gen);
  void HandleMigration(size_t index);
  void AdvanceProgram(CoreId core);
  void HandleSignal(uint64_t sem, CoreId waker_core);
  void BlockCurrent(CoreId core, uint64_t sem);
  void ExitCurrent(CoreId core);

  // Dispatch machinery.
  void MarkDispatch(CoreId core);
  void RunMarkedDispatches();
  void DispatchCore(CoreId core);
  std::optional<TaskId> DispatchCommon(CoreId core);
  void TryBalance(PolicyId policy, CoreId core);
  bool PerformMigration(TaskId task, CoreId to, PolicyId via_policy,
                        bool from_balance, CoreId balance_core);
  void PutBackCurrent(CoreId core);
  void StartRunning(CoreId core, TaskId task);
  void AccountCurrent(CoreId core);
  uint64_t TakeUnreported(TaskId task);

  // Placement.
  CoreId PlaceTask(const SimTask& task);
  size_t RunnableCountFor(PolicyId policy, CoreId core) const;
  bool HigherPriorityWork(PolicyId than, CoreId core) const;

  // Hints.
  void DrainHintQueues();

  void ArmTick(CoreId core);
  void DisarmTick(CoreId core);

  SimTask& TaskRef(TaskId id);
  const SimTask& TaskRef(TaskId id) const;
  CoreState& CoreRef(CoreId id) { return cores_[id.index]; }

  void SampleLatency(SimTask& task);
  void RemoveRunnable(CoreId core, TaskId task);

  // Concurrent mode (sim_concurrent.cc).
  Metrics RunConcurrent(uint64_t t_end_ns);
  void ConcurrentCoreWorker(uint32_t core_index, uint64_t t_end_ns);
  void ConcurrentAdvance(CoreId core);
  void ConcurrentSignal(uint64_t sem, CoreId waker);
  void ConcurrentWake(TaskId task, CoreId waker);

  SimConfig config_;
  PolicyRegistry& registry_;
  std::vector<PolicyId> policy_order_;
  TokenRegistry tokens_;
  Recorder* recorder_ = nullptr;

  uint64_t clock_ns_ = 0;
  uint64_t event_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  std::vector<CoreState> cores_;
  std::unordered_map<TaskId, std::unique_ptr<SimTask>> tasks_;
  std::unordered_map<uint64_t, SemState> sems_;
  std::vector<std::function<void()>> actions_;
  std::vector<MigrateDirective> migrations_;
  std::set<uint32_t> dispatch_marks_;
  uint64_t live_tasks_ = 0;  // spawned and not yet dead
  uint64_t pending_arrivals_ = 0;
  uint64_t pending_control_ = 0;  // unprocessed actions + migrations

  std::map<uint64_t, RegisteredQueue> queues_;
  uint64_t next_queue_id_ = 1;

  Metrics metrics_;
  std::vector<TraceEntry> trace_;
  bool finished_ = false;

  // Concurrent mode holds fw_mu_ across each framework operation,
  // including the policy call inside it: bookkeeping stays coherent
  // while the cross-core call ORDER remains up to the host scheduler,
  // which is the nondeterminism record/replay exists to tame. Core
  // workers sleep for wall-paced compute outside the lock.
  mutable std::recursive_mutex fw_mu_;
  std::atomic<bool> stop_{false};
  std::vector<uint64_t> local_clock_ns_;
};

}  // namespace schedlab

#endif  // SCHEDLAB_SIM_H_
