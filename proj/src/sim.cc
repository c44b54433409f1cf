// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/sim.h"

#include <algorithm>
#include <utility>

#include "schedlab/logging.h"
#include "schedlab/worker_context.h"

namespace schedlab {

namespace {
// Hints delivered per safe point, so a hint flood cannot starve dispatch.
constexpr int kHintDrainBatch = 32;
// pnt_err recurrence bound for one dispatch before the core is idled.
constexpr int kLivelockGuard = 8;
constexpr uint8_t kTraceDispatch = kTraceDispatchKind;
constexpr uint8_t kTraceIdle = kTraceIdleKind;
}  // namespace

Simulator::Simulator(SimConfig config, PolicyRegistry& registry,
                     std::vector<PolicyId> policy_order)
    : config_(config), registry_(registry), policy_order_(std::move(policy_order)) {
  CHECK_GT(config_.num_cores, 0u);
  CHECK_GT(config_.tick_period_ns, 0u);
  CHECK(!policy_order_.empty());
  for (PolicyId id : policy_order_) CHECK(registry_.Registered(id));
  cores_.resize(config_.num_cores);
  local_clock_ns_.assign(config_.num_cores, 0);
  for (uint32_t i = 0; i < config_.num_cores; ++i) {
    cores_[i].id = CoreId{i};
  }
  metrics_.core_busy_ns.assign(config_.num_cores, 0);
}

Simulator::~Simulator() = default;

Simulator::SimTask& Simulator::TaskRef(TaskId id) {
  auto it = tasks_.find(id);
  CHECK(it != tasks_.end());
  return *it->second;
}

const Simulator::SimTask& Simulator::TaskRef(TaskId id) const {
  auto it = tasks_.find(id);
  CHECK(it != tasks_.end());
  return *it->second;
}

TaskState Simulator::StateOf(TaskId task) const {
  std::lock_guard<std::recursive_mutex> lock(fw_mu_);
  return TaskRef(task).state;
}

std::optional<TaskId> Simulator::CurrentOn(CoreId core) const {
  std::lock_guard<std::recursive_mutex> lock(fw_mu_);
  return cores_[core.index].current;
}

void Simulator::Push(Event e) {
  e.seq = event_seq_++;
  events_.push(e);
}

void Simulator::Trace(uint8_t kind, uint32_t core, uint64_t task) {
  if (!config_.keep_trace || config_.mode == SimMode::kConcurrent) return;
  trace_.push_back(TraceEntry{clock_ns_, kind, core, task});
}

// ---------------------------------------------------------------------------
// Setup

void Simulator::Spawn(TaskSpec spec) {
  std::lock_guard<std::recursive_mutex> lock(fw_mu_);
  CHECK(!tasks_.contains(spec.id));  // ids never reused within a run
  CHECK(std::find(policy_order_.begin(), policy_order_.end(), spec.policy) !=
        policy_order_.end());
  if (spec.pinned.has_value()) CHECK_LT(spec.pinned->index, config_.num_cores);
  auto task = std::make_unique<SimTask>();
  task->spec = std::move(spec);
  const TaskId id = task->spec.id;
  const uint64_t at = task->spec.arrival_ns;
  tasks_.emplace(id, std::move(task));
  ++live_tasks_;
  ++pending_arrivals_;
  Event e{};
  e.at_ns = at;
  e.core_key = kNoCore;
  e.kind = EventKind::kArrival;
  e.task = id;
  Push(e);
}

void Simulator::AddWorkload(const Workload& workload) {
  for (const TaskSpec& spec : workload.tasks) Spawn(spec);
  for (const MigrateDirective& m : workload.migrations) {
    ScheduleMigration(m.at_ns, m.task, m.to);
  }
  for (const HintDirective& h : workload.hints) {
    const PolicyId policy = h.policy;
    const HintDirection dir = h.direction;
    std::vector<uint8_t> record = h.record;
    ScheduleAction(h.at_ns, [this, policy, dir, record] {
      std::optional<uint64_t> qid = QueueIdFor(policy, dir);
      CHECK(qid.has_value());
      SendHint(*qid, record);
    });
  }
}

void Simulator::ScheduleMigration(uint64_t at_ns, TaskId task, CoreId to) {
  CHECK_LT(to.index, config_.num_cores);
  migrations_.push_back(MigrateDirective{at_ns, task, to});
  ++pending_control_;
  Event e{};
  e.at_ns = at_ns;
  e.core_key = kNoCore;
  e.kind = EventKind::kMigration;
  e.index = migrations_.size() - 1;
  Push(e);
}

void Simulator::ScheduleAction(uint64_t at_ns, std::function<void()> action) {
  actions_.push_back(std::move(action));
  ++pending_control_;
  Event e{};
  e.at_ns = at_ns;
  e.core_key = kNoCore;
  e.kind = EventKind::kAction;
  e.index = actions_.size() - 1;
  Push(e);
}

void Simulator::SetRecorder(Recorder* recorder) {
  recorder_ = recorder;
  registry_.SetRecorder(recorder);
}

// ---------------------------------------------------------------------------
// Hint plumbing

std::optional<uint64_t> Simulator::CreateQueue(PolicyId policy,
                                               HintDirection direction,
                                               uint32_t capacity) {
  std::lock_guard<std::recursive_mutex> lock(fw_mu_);
  std::shared_ptr<SchedulerPolicy> instance = registry_.Instance(policy);
  CHECK(instance != nullptr);
  const uint32_t width = instance->hint_record_width(direction);
  if (width == 0) return std::nullopt;

  const uint64_t id = next_queue_id_++;
  auto queue = std::make_shared<HintQueue>(id, direction, capacity, width);
  QueueSpec spec;
  spec.queue_id = id;
  spec.direction = direction;
  spec.capacity = capacity;
  spec.record_width = width;
  // The policy produces into sched->user queues; user->sched queues are
  // drained by the framework, so the policy gets no endpoint for those.
  if (direction == HintDirection::kSchedToUser) spec.queue = queue;

  SchedResponse resp = Call(policy, SchedMessage::RegisterQueue(std::move(spec)));
  if (!resp.flag) return std::nullopt;  // PolicyRejected
  queues_.emplace(id, RegisteredQueue{std::move(queue), policy});
  return id;
}

void Simulator::CloseQueue(uint64_t queue_id) {
  std::lock_guard<std::recursive_mutex> lock(fw_mu_);
  auto it = queues_.find(queue_id);
  if (it == queues_.end()) return;
  Call(it->second.policy, SchedMessage::UnregisterQueue(queue_id));
  queues_.erase(it);
}

std::optional<uint64_t> Simulator::QueueIdFor(PolicyId policy,
                                              HintDirection direction) {
  std::lock_guard<std::recursive_mutex> lock(fw_mu_);
  for (const auto& [id, rq] : queues_) {
    if (rq.policy == policy && rq.queue->direction() == direction) return id;
  }
  return std::nullopt;
}

bool Simulator::SendHint(uint64_t queue_id, std::span<const uint8_t> record) {
  QueueHandle queue;
  {
    std::lock_guard<std::recursive_mutex> lock(fw_mu_);
    auto it = queues_.find(queue_id);
    CHECK(it != queues_.end());
    queue = it->second.queue;
  }
  CHECK(queue->direction() == HintDirection::kUserToSched);
  const bool pushed = queue->Push(record);
  if (pushed && recorder_ != nullptr) recorder_->RecordHint(queue_id, record);
  return pushed;
}

std::optional<std::vector<uint8_t>> Simulator::RecvHint(uint64_t queue_id) {
  QueueHandle queue;
  {
    std::lock_guard<std::recursive_mutex> lock(fw_mu_);
    auto it = queues_.find(queue_id);
    CHECK(it != queues_.end());
    queue = it->second.queue;
  }
  CHECK(queue->direction() == HintDirection::kSchedToUser);
  return queue->Pop();
}

void Simulator::DrainHintQueues() {
  // Deliver pending user->sched hints at this safe point: enter_queue
  // first, then up to a batch of parse_hint calls per queue.
  for (auto& [id, rq] : queues_) {
    if (rq.queue->direction() != HintDirection::kUserToSched) continue;
    if (rq.queue->Empty()) continue;
    Call(rq.policy, SchedMessage::EnterQueue(id));
    for (int i = 0; i < kHintDrainBatch; ++i) {
      std::optional<std::vector<uint8_t>> record = rq.queue->Pop();
      if (!record.has_value()) break;
      Call(rq.policy, SchedMessage::ParseHint(id, std::move(*record)));
    }
  }
}

// ---------------------------------------------------------------------------
// Framework call path

SchedResponse Simulator::Call(PolicyId policy, SchedMessage msg) {
  metrics_.message_counts[static_cast<size_t>(msg.kind)]++;
  return registry_.Call(policy, std::move(msg));
}

// ---------------------------------------------------------------------------
// Accounting

void Simulator::AccountCurrent(CoreId core) {
  CoreState& c = CoreRef(core);
  const uint64_t now =
      config_.mode == SimMode::kVirtualTime ? clock_ns_ : local_clock_ns_[core.index];
  if (!c.current.has_value()) {
    c.last_account_ns = now;
    return;
  }
  CHECK_GE(now, c.last_account_ns);
  const uint64_t ran = now - c.last_account_ns;
  c.last_account_ns = now;
  if (ran == 0) return;
  SimTask& task = TaskRef(*c.current);
  task.accumulated_ns += ran;
  task.unreported_ns += ran;
  CHECK_GE(task.step_remaining_ns, ran);
  task.step_remaining_ns -= ran;
  c.busy_ns += ran;
}

uint64_t Simulator::TakeUnreported(TaskId task) {
  SimTask& t = TaskRef(task);
  return std::exchange(t.unreported_ns, 0);
}

void Simulator::SampleLatency(SimTask& task) {
  const uint64_t now =
      config_.mode == SimMode::kVirtualTime ? clock_ns_ : local_clock_ns_[task.core.index];
  const uint64_t lat = now >= task.runnable_since_ns ? now - task.runnable_since_ns : 0;
  metrics_.runnable_to_running_transitions++;
  if (now < config_.warmup_ns) {
    metrics_.warmup_samples++;  // excluded from the reported series
    return;
  }
  switch (task.provenance) {
    case RunnableProvenance::kNew:
      metrics_.spawn_latencies.push_back(lat);
      break;
    case RunnableProvenance::kWake:
      metrics_.wake_latencies.push_back(lat);
      break;
    case RunnableProvenance::kPreempt:
      metrics_.preempt_samples++;
      break;
  }
}

void Simulator::RemoveRunnable(CoreId core, TaskId task) {
  auto& v = CoreRef(core).runnable;
  auto it = std::find(v.begin(), v.end(), task);
  CHECK(it != v.end());
  v.erase(it);
}

size_t Simulator::RunnableCountFor(PolicyId policy, CoreId core) const {
  size_t n = 0;
  for (TaskId id : cores_[core.index].runnable) {
    if (TaskRef(id).spec.policy == policy) ++n;
  }
  return n;
}

bool Simulator::HigherPriorityWork(PolicyId than, CoreId core) const {
  for (PolicyId p : policy_order_) {
    if (p == than) return false;
    if (RunnableCountFor(p, core) > 0) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Placement

CoreId Simulator::PlaceTask(const SimTask& task) {
  if (task.spec.pinned.has_value()) return *task.spec.pinned;
  SchedResponse resp =
      Call(task.spec.policy, SchedMessage::SelectTaskRq(task.spec.id, task.spec.nice));
  CHECK(resp.core.has_value());
  CoreId core = *resp.core;
  if (core.index >= config_.num_cores) {
    // A clumsy policy picked a core that does not exist; fall back.
    metrics_.counters.bad_core_selections++;
    core = CoreId{0};
  }
  return core;
}

// ---------------------------------------------------------------------------
// Tick management

void Simulator::ArmTick(CoreId core) {
  if (config_.mode == SimMode::kConcurrent) return;  // loop-paced there
  CoreState& c = CoreRef(core);
  if (c.tick_armed) return;
  c.tick_armed = true;
  ++c.tick_gen;
  Event e{};
  e.at_ns = clock_ns_ + config_.tick_period_ns;
  e.core_key = core.index;
  e.kind = EventKind::kTick;
  e.core = core;
  e.gen = c.tick_gen;
  Push(e);
}

void Simulator::DisarmTick(CoreId core) {
  if (config_.mode == SimMode::kConcurrent) return;
  CoreState& c = CoreRef(core);
  c.tick_armed = false;
  ++c.tick_gen;
}

// ---------------------------------------------------------------------------
// Event handlers (VirtualTime)

void Simulator::HandleArrival(TaskId id) {
  SimTask& task = TaskRef(id);
  CHECK(task.state == TaskState::kNew);
  --pending_arrivals_;
  const CoreId core = PlaceTask(task);
  task.core = core;
  CHECK(registry_.AttachTask(task.spec.policy));

  std::optional<Schedulable> token = tokens_.Issue(id, core);
  CHECK(token.has_value());
  Call(task.spec.policy, SchedMessage::TaskNew(id, task.spec.nice, std::move(*token)));

  task.state = TaskState::kRunnable;
  task.provenance = RunnableProvenance::kNew;
  task.runnable_since_ns = clock_ns_;
  CoreRef(core).runnable.push_back(id);

  CoreState& c = CoreRef(core);
  if (!c.current.has_value()) {
    MarkDispatch(core);
  } else {
    // Cross-policy wake preemption: a higher-priority policy's task
    // displaces a lower one without waiting for the next tick.
    const SimTask& cur = TaskRef(*c.current);
    if (HigherPriorityWork(cur.spec.policy, core)) MarkDispatch(core);
  }
}

void Simulator::HandleWakeReady(TaskId id, CoreId core) {
  SimTask& task = TaskRef(id);
  CHECK(task.state == TaskState::kBlocked);
  CHECK(task.wake_in_flight);
  task.wake_in_flight = false;
  task.core = core;

  std::optional<Schedulable> token = tokens_.Issue(id, core);
  CHECK(token.has_value());
  Call(task.spec.policy, SchedMessage::TaskWakeup(id, std::move(*token)));

  task.state = TaskState::kRunnable;
  // provenance/runnable_since were set at signal time: wakeup latency
  // spans the modeled kernel wake path.
  CoreRef(core).runnable.push_back(id);

  CoreState& c = CoreRef(core);
  if (!c.current.has_value()) {
    MarkDispatch(core);
  } else {
    const SimTask& cur = TaskRef(*c.current);
    if (HigherPriorityWork(cur.spec.policy, core)) MarkDispatch(core);
  }
}

void Simulator::HandleTick(CoreId core, uint64_t gen) {
  CoreState& c = CoreRef(core);
  if (!c.tick_armed || gen != c.tick_gen) return;  // stale
  if (!c.current.has_value()) {
    c.tick_armed = false;
    return;
  }
  AccountCurrent(core);
  const TaskId cur = *c.current;
  SimTask& task = TaskRef(cur);
  const uint64_t delta = TakeUnreported(cur);
  SchedResponse resp =
      Call(task.spec.policy, SchedMessage::TaskTick(core, cur, delta));
  bool resched = resp.flag;
  if (!resched && HigherPriorityWork(task.spec.policy, core)) resched = true;

  // Keep the cadence while the core stays busy.
  Event e{};
  e.at_ns = clock_ns_ + config_.tick_period_ns;
  e.core_key = core.index;
  e.kind = EventKind::kTick;
  e.core = core;
  e.gen = c.tick_gen;
  Push(e);

  if (resched) MarkDispatch(core);
}

void Simulator::HandleComputeDone(CoreId core, uint64_t gen) {
  CoreState& c = CoreRef(core);
  if (gen != c.run_gen || !c.current.has_value()) return;  // stale
  AccountCurrent(core);
  SimTask& task = TaskRef(*c.current);
  CHECK_EQ(task.step_remaining_ns, 0u);
  ++task.pc;
  AdvanceProgram(core);
}

void Simulator::HandleMigration(size_t index) {
  const MigrateDirective& m = migrations_[index];
  auto it = tasks_.find(m.task);
  if (it == tasks_.end()) return;
  SimTask& task = *it->second;
  metrics_.counters.forced_migrations++;
  switch (task.state) {
    case TaskState::kRunning: {
      // Requeue first, then move. The put-back rides the wakeup path.
      const CoreId src = task.core;
      AccountCurrent(src);
      PutBackCurrent(src);
      PerformMigration(m.task, m.to, task.spec.policy, false, CoreId{});
      MarkDispatch(src);
      MarkDispatch(m.to);
      break;
    }
    case TaskState::kRunnable:
      PerformMigration(m.task, m.to, task.spec.policy, false, CoreId{});
      MarkDispatch(m.to);
      break;
    default:
      // Blocked, new or dead tasks have no placement to move; the next
      // wake re-places them anyway.
      break;
  }
}

// ---------------------------------------------------------------------------
// Program execution

void Simulator::AdvanceProgram(CoreId core) {
  CoreState& c = CoreRef(core);
  CHECK(c.current.has_value());
  SimTask& task = TaskRef(*c.current);
  while (true) {
    CHECK_LT(task.pc, task.spec.program.size());
    const ProgramStep& step = task.spec.program[task.pc];
    if (std::holds_alternative<ComputeStep>(step)) {
      if (task.step_remaining_ns == 0) {
        task.step_remaining_ns = std::get<ComputeStep>(step).duration_ns;
        if (task.step_remaining_ns == 0) {  // degenerate compute
          ++task.pc;
          continue;
        }
      }
      ++c.run_gen;
      Event e{};
      e.at_ns = clock_ns_ + task.step_remaining_ns;
      e.core_key = core.index;
      e.kind = EventKind::kComputeDone;
      e.core = core;
      e.gen = c.run_gen;
      Push(e);
      return;
    }
    if (std::holds_alternative<SignalStep>(step)) {
      ++task.pc;
      HandleSignal(std::get<SignalStep>(step).event, core);
      continue;
    }
    if (std::holds_alternative<BlockStep>(step)) {
      const uint64_t sem = std::get<BlockStep>(step).event;
      SemState& s = sems_[sem];
      if (s.pending > 0) {
        --s.pending;
        ++task.pc;
        continue;
      }
      ++task.pc;  // resume past the block on wake
      BlockCurrent(core, sem);
      return;
    }
    if (std::holds_alternative<YieldStep>(step)) {
      ++task.pc;
      MarkDispatch(core);
      return;
    }
    CHECK(std::holds_alternative<ExitStep>(step));
    ExitCurrent(core);
    return;
  }
}

void Simulator::HandleSignal(uint64_t sem, CoreId waker_core) {
  SemState& s = sems_[sem];
  if (s.waiters.empty()) {
    ++s.pending;
    return;
  }
  const TaskId woken = s.waiters.front();
  s.waiters.pop_front();
  SimTask& task = TaskRef(woken);
  CHECK(task.state == TaskState::kBlocked);
  CHECK(!task.wake_in_flight);

  // Placement happens in the waker's context; the wake path cost
  // depends on whether the chosen core is the waker's.
  const CoreId placed = PlaceTask(task);
  const uint64_t cost = placed == waker_core ? config_.same_core_wake_ns
                                             : config_.cross_core_wake_ns;
  task.wake_in_flight = true;
  task.provenance = RunnableProvenance::kWake;
  task.runnable_since_ns = clock_ns_;

  Event e{};
  e.at_ns = clock_ns_ + cost;
  e.core_key = placed.index;
  e.kind = EventKind::kWakeReady;
  e.task = woken;
  e.core = placed;
  Push(e);
}

void Simulator::BlockCurrent(CoreId core, uint64_t sem) {
  CoreState& c = CoreRef(core);
  SimTask& task = TaskRef(*c.current);
  AccountCurrent(core);
  const uint64_t delta = TakeUnreported(task.spec.id);
  SchedResponse resp =
      Call(task.spec.policy, SchedMessage::TaskBlocked(task.spec.id, delta));
  // The policy normally has nothing to return (the token was consumed
  // at dispatch); if it held one, retire it.
  if (resp.token.has_value()) tokens_.Discard(std::move(*resp.token));

  task.state = TaskState::kBlocked;
  sems_[sem].waiters.push_back(task.spec.id);
  c.current.reset();
  MarkDispatch(core);
}

void Simulator::ExitCurrent(CoreId core) {
  CoreState& c = CoreRef(core);
  SimTask& task = TaskRef(*c.current);
  AccountCurrent(core);
  const uint64_t delta = TakeUnreported(task.spec.id);
  SchedResponse resp =
      Call(task.spec.policy, SchedMessage::TaskDead(task.spec.id, delta));
  if (resp.token.has_value()) tokens_.Discard(std::move(*resp.token));

  task.state = TaskState::kDead;
  const uint64_t now =
      config_.mode == SimMode::kVirtualTime ? clock_ns_ : local_clock_ns_[core.index];
  auto& tm = metrics_.tasks[task.spec.id.id];
  tm.completed = true;
  tm.completion_ns = now;
  registry_.DetachTask(task.spec.policy);
  CHECK_GT(live_tasks_, 0u);
  --live_tasks_;
  c.current.reset();
  MarkDispatch(core);
}

// ---------------------------------------------------------------------------
// Dispatch

void Simulator::MarkDispatch(CoreId core) { dispatch_marks_.insert(core.index); }

void Simulator::RunMarkedDispatches() {
  while (!dispatch_marks_.empty()) {
    const uint32_t index = *dispatch_marks_.begin();
    dispatch_marks_.erase(dispatch_marks_.begin());
    DispatchCore(CoreId{index});
  }
}

void Simulator::PutBackCurrent(CoreId core) {
  CoreState& c = CoreRef(core);
  CHECK(c.current.has_value());
  const TaskId id = *c.current;
  SimTask& task = TaskRef(id);
  const uint64_t delta = TakeUnreported(id);

  std::optional<Schedulable> token = tokens_.Issue(id, core);
  CHECK(token.has_value());
  Call(task.spec.policy,
       SchedMessage::TaskWakeup(id, std::move(*token), delta));

  task.state = TaskState::kRunnable;
  task.provenance = RunnableProvenance::kPreempt;
  const uint64_t now =
      config_.mode == SimMode::kVirtualTime ? clock_ns_ : local_clock_ns_[core.index];
  task.runnable_since_ns = now;
  c.runnable.push_back(id);
  c.current.reset();
}

void Simulator::StartRunning(CoreId core, TaskId id) {
  CoreState& c = CoreRef(core);
  SimTask& task = TaskRef(id);
  CHECK(task.state == TaskState::kRunnable);
  RemoveRunnable(core, id);
  SampleLatency(task);
  task.state = TaskState::kRunning;
  task.dispatches++;
  c.current = id;
  const uint64_t now =
      config_.mode == SimMode::kVirtualTime ? clock_ns_ : local_clock_ns_[core.index];
  c.last_account_ns = now;
  metrics_.counters.dispatches_ok++;
}

bool Simulator::PerformMigration(TaskId id, CoreId to, PolicyId via_policy,
                                 bool from_balance, CoreId balance_core) {
  SimTask& task = TaskRef(id);
  CHECK(task.state == TaskState::kRunnable);
  const CoreId from = task.core;
  if (from == to) return true;

  Schedulable fresh = tokens_.Supersede(id, to);
  SchedResponse resp =
      Call(via_policy, SchedMessage::MigrateTaskRq(id, std::move(fresh)));
  // The policy must hand back the superseded token. Whatever comes back
  // is retired; withholding the old one surfaces later as Stale.
  if (resp.token.has_value()) tokens_.Discard(std::move(*resp.token));

  RemoveRunnable(from, id);
  CoreRef(to).runnable.push_back(id);
  task.core = to;
  metrics_.counters.migrations++;
  (void)from_balance;
  (void)balance_core;
  return true;
}

void Simulator::TryBalance(PolicyId policy, CoreId core) {
  SchedResponse resp = Call(policy, SchedMessage::Balance(core));
  if (!resp.balance.has_value()) return;
  const BalanceDecision d = *resp.balance;

  auto fail = [&](std::optional<Schedulable> token) {
    metrics_.counters.balance_errs++;
    Call(policy, SchedMessage::BalanceErr(core, d.task, std::move(token)));
  };

  auto it = tasks_.find(d.task);
  if (it == tasks_.end()) return fail(std::nullopt);
  SimTask& task = *it->second;
  const bool valid = task.state == TaskState::kRunnable &&
                     task.spec.policy == policy && task.core == d.source &&
                     d.destination == core && d.source != core &&
                     !task.spec.pinned.has_value();
  if (!valid) return fail(std::nullopt);
  PerformMigration(d.task, core, policy, true, core);
}

void Simulator::DispatchCore(CoreId core) {
  AccountCurrent(core);
  if (DispatchCommon(core).has_value()) {
    ArmTick(core);
    AdvanceProgram(core);
  } else {
    DisarmTick(core);
    ++CoreRef(core).run_gen;
  }
}

// The policy loop shared by both modes: balance, pick, validation,
// pnt_err retry, current-task requeue and the cross-policy put-back.
// Returns the task now running (StartRunning already applied), or
// nullopt when the core idles.
std::optional<TaskId> Simulator::DispatchCommon(CoreId core) {
  CoreState& c = CoreRef(core);

  int pnt_errs_here = 0;
  std::optional<TaskId> chosen;
  PolicyId chosen_policy = 0;

  for (PolicyId policy : policy_order_) {
    const bool cur_is_mine =
        c.current.has_value() && TaskRef(*c.current).spec.policy == policy;

    if (RunnableCountFor(policy, core) == 0 && !cur_is_mine) {
      // The core is about to idle as far as this policy is concerned;
      // offer it the chance to steal waiting work here.
      TryBalance(policy, core);
    }

    std::optional<Schedulable> cur_token;
    uint64_t delta = 0;
    if (cur_is_mine) {
      // Hand the running task back through pick: it re-enters the
      // policy's bookkeeping and may be picked straight back.
      const TaskId cur_id = *c.current;
      delta = TakeUnreported(cur_id);
      SimTask& cur = TaskRef(cur_id);
      std::optional<Schedulable> t = tokens_.Issue(cur_id, core);
      CHECK(t.has_value());
      cur_token = std::move(t);
      cur.state = TaskState::kRunnable;
      cur.provenance = RunnableProvenance::kPreempt;
      const uint64_t now = config_.mode == SimMode::kVirtualTime
                               ? clock_ns_
                               : local_clock_ns_[core.index];
      cur.runnable_since_ns = now;
      c.runnable.push_back(cur_id);
      c.current.reset();
    }

    bool idle_from_policy = false;
    while (!idle_from_policy) {
      SchedResponse resp = Call(
          policy,
          SchedMessage::PickNextTask(core, std::move(cur_token), delta));
      cur_token.reset();
      delta = 0;
      if (!resp.token.has_value()) {
        idle_from_policy = true;
        break;
      }
      metrics_.counters.pick_decisions++;
      Schedulable offered = std::move(*resp.token);
      const TaskId offered_task = offered.task();

      // Token validation classifies the rejection; the framework-side
      // state check only guards tokens the validator would accept
      // (e.g. one withheld past its task's block).
      const bool would_validate =
          offered.core() == core &&
          tokens_.IsLiveSerial(offered_task, offered.serial());
      if (would_validate) {
        auto t_it = tasks_.find(offered_task);
        const bool runnable_here =
            t_it != tasks_.end() &&
            t_it->second->state == TaskState::kRunnable &&
            t_it->second->core == core;
        if (runnable_here) {
          ConsumeOutcome outcome = tokens_.Consume(std::move(offered), core);
          CHECK(outcome.ok());
          chosen = offered_task;
          chosen_policy = policy;
          break;
        }
        metrics_.counters.rejected_not_runnable++;
        metrics_.counters.pnt_errs++;
        Call(policy, SchedMessage::PntErr(core, std::move(offered)));
      } else {
        ConsumeOutcome outcome = tokens_.Consume(std::move(offered), core);
        CHECK(!outcome.ok());
        if (outcome.verdict == TokenVerdict::kWrongCore) {
          metrics_.counters.rejected_wrong_core++;
        } else {
          metrics_.counters.rejected_stale++;
        }
        metrics_.counters.pnt_errs++;
        CHECK(outcome.rejected.has_value());
        Call(policy, SchedMessage::PntErr(core, std::move(*outcome.rejected)));
      }
      if (++pnt_errs_here > kLivelockGuard) {
        metrics_.counters.livelock_guards++;
        if (metrics_.counters.livelock_guards <= 8) {
          std::fprintf(stderr, "schedlab: livelock guard tripped on core %u\n",
                       core.index);
        }
        goto idle;
      }
    }

    if (chosen.has_value()) break;
  }

idle:
  if (!chosen.has_value()) {
    // Every policy declined (or tripped the guard). The running task,
    // if any, was requeued when its own policy was offered it.
    CHECK(!c.current.has_value());
    // Idling past local runnable work is permitted but counted.
    if (!c.runnable.empty()) metrics_.counters.work_conservation_violations++;
    Trace(kTraceIdle, core.index, 0);
    return std::nullopt;
  }

  // A lower-priority current that lost the core re-enters its policy
  // through the wakeup path before the winner runs.
  if (c.current.has_value() &&
      TaskRef(*c.current).spec.policy != chosen_policy) {
    PutBackCurrent(core);
  }

  StartRunning(core, *chosen);
  Trace(kTraceDispatch, core.index, chosen->id);
  return chosen;
}

// ---------------------------------------------------------------------------
// Stepping

void Simulator::ProcessEvent(const Event& e) {
  const uint8_t k = static_cast<uint8_t>(e.kind);
  switch (e.kind) {
    case EventKind::kArrival:
      Trace(k, kNoCore, e.task.id);
      HandleArrival(e.task);
      break;
    case EventKind::kWakeReady:
      Trace(k, e.core.index, e.task.id);
      HandleWakeReady(e.task, e.core);
      break;
    case EventKind::kTick:
      HandleTick(e.core, e.gen);
      break;
    case EventKind::kComputeDone:
      Trace(k, e.core.index, 0);
      HandleComputeDone(e.core, e.gen);
      break;
    case EventKind::kMigration:
      Trace(k, kNoCore, migrations_[e.index].task.id);
      --pending_control_;
      HandleMigration(e.index);
      break;
    case EventKind::kAction:
      Trace(k, kNoCore, e.index);
      --pending_control_;
      actions_[e.index]();
      break;
  }
}

bool Simulator::Step() {
  CHECK(config_.mode == SimMode::kVirtualTime);
  DrainHintQueues();
  RunMarkedDispatches();
  if (events_.empty()) return false;
  const Event e = events_.top();
  events_.pop();
  CHECK_GE(e.at_ns, clock_ns_);  // virtual time is monotone
  clock_ns_ = e.at_ns;
  ProcessEvent(e);
  RunMarkedDispatches();
  return true;
}

Metrics Simulator::RunUntil(uint64_t t_end_ns) {
  if (config_.mode == SimMode::kConcurrent) return RunConcurrent(t_end_ns);
  while (!events_.empty()) {
    if (t_end_ns != 0 && events_.top().at_ns > t_end_ns) break;
    // With no tasks left and no control-plane work pending, whatever
    // remains in the heap is disarmed ticks; stop rather than let them
    // pad the reported duration.
    if (t_end_ns == 0 && live_tasks_ == 0 && pending_arrivals_ == 0 &&
        pending_control_ == 0) {
      break;
    }
    Step();
  }
  if (t_end_ns != 0 && clock_ns_ < t_end_ns) clock_ns_ = t_end_ns;
  return Finish();
}

Metrics Simulator::Finish() {
  if (finished_) return metrics_;
  finished_ = true;
  for (CoreState& c : cores_) {
    if (config_.mode == SimMode::kVirtualTime) {
      AccountCurrent(c.id);
    }
    metrics_.core_busy_ns[c.id.index] = c.busy_ns;
  }
  metrics_.duration_ns = clock_ns_;
  for (const auto& [id, task] : tasks_) {
    auto& tm = metrics_.tasks[id.id];
    tm.arrival_ns = task->spec.arrival_ns;
    tm.runtime_ns = task->accumulated_ns;
    tm.dispatches = task->dispatches;
    tm.cohort = task->spec.cohort;
    tm.nice = task->spec.nice;
  }
  return metrics_;
}

}  // namespace schedlab
