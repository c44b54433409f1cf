// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <thread>

#include "schedlab/logging.h"
#include "schedlab/sim.h"
#include "schedlab/worker_context.h"

// Concurrent mode: one worker per simulated core, wall-clock paced by
// time_scale, nondeterministic by design. Framework bookkeeping stays
// behind fw_mu_ for the whole of each operation (policy call included);
// which core gets in first is up to the host scheduler, and that
// interleaving is exactly what record/replay captures and re-imposes.

namespace schedlab {

namespace {
// Idle cores poll rather than park on a condition variable; concurrent
// mode trades exact wake latency for simple locking anyway.
constexpr auto kIdlePoll = std::chrono::microseconds(200);
}

void Simulator::ConcurrentSignal(uint64_t sem, CoreId waker) {
  SemState& s = sems_[sem];
  if (s.waiters.empty()) {
    ++s.pending;
    return;
  }
  const TaskId woken = s.waiters.front();
  s.waiters.pop_front();
  ConcurrentWake(woken, waker);
}

void Simulator::ConcurrentWake(TaskId id, CoreId waker) {
  SimTask& task = TaskRef(id);
  CHECK(task.state == TaskState::kBlocked);
  const CoreId placed = PlaceTask(task);
  task.core = placed;
  task.provenance = RunnableProvenance::kWake;
  task.runnable_since_ns = local_clock_ns_[waker.index];

  std::optional<Schedulable> token = tokens_.Issue(id, placed);
  CHECK(token.has_value());
  Call(task.spec.policy, SchedMessage::TaskWakeup(id, std::move(*token)));
  task.state = TaskState::kRunnable;
  CoreRef(placed).runnable.push_back(id);
}

// Executes the current task's instant steps. Returns true while the
// task keeps the core (a compute step is pending or it yielded).
void Simulator::ConcurrentAdvance(CoreId core) {
  CoreState& c = CoreRef(core);
  CHECK(c.current.has_value());
  SimTask& task = TaskRef(*c.current);
  while (true) {
    CHECK_LT(task.pc, task.spec.program.size());
    const ProgramStep& step = task.spec.program[task.pc];
    if (std::holds_alternative<ComputeStep>(step)) {
      if (task.step_remaining_ns == 0) {
        task.step_remaining_ns = std::get<ComputeStep>(step).duration_ns;
        if (task.step_remaining_ns == 0) {
          ++task.pc;
          continue;
        }
      }
      return;  // worker loop paces it
    }
    if (std::holds_alternative<SignalStep>(step)) {
      ++task.pc;
      ConcurrentSignal(std::get<SignalStep>(step).event, core);
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
      ++task.pc;
      BlockCurrent(core, sem);
      return;
    }
    if (std::holds_alternative<YieldStep>(step)) {
      ++task.pc;
      DispatchCommon(core);  // re-enters through pick with current
      return;
    }
    CHECK(std::holds_alternative<ExitStep>(step));
    ExitCurrent(core);
    return;
  }
}

void Simulator::ConcurrentCoreWorker(uint32_t core_index, uint64_t t_end_ns) {
  ScopedWorker as_worker(core_index);
  const CoreId core{core_index};
  uint64_t next_tick_ns = config_.tick_period_ns;

  std::unique_lock<std::recursive_mutex> lock(fw_mu_);
  while (!stop_.load(std::memory_order_relaxed)) {
    CoreState& c = CoreRef(core);
    uint64_t& lc = local_clock_ns_[core_index];
    if (lc >= t_end_ns) break;

    if (!c.current.has_value()) {
      if (!DispatchCommon(core).has_value()) {
        lock.unlock();
        std::this_thread::sleep_for(kIdlePoll);
        lock.lock();
        continue;
      }
      c.last_account_ns = lc;
      ConcurrentAdvance(core);
      continue;
    }

    SimTask& task = TaskRef(*c.current);
    if (task.step_remaining_ns == 0) {
      ConcurrentAdvance(core);
      continue;
    }

    if (next_tick_ns <= lc) next_tick_ns = lc + config_.tick_period_ns;
    const uint64_t chunk = std::min(task.step_remaining_ns, next_tick_ns - lc);
    lock.unlock();
    if (config_.time_scale > 0 && chunk / config_.time_scale > 0) {
      std::this_thread::sleep_for(
          std::chrono::nanoseconds(chunk / config_.time_scale));
    }
    lock.lock();

    lc += chunk;
    AccountCurrent(core);

    if (c.current.has_value() && TaskRef(*c.current).step_remaining_ns == 0) {
      SimTask& done = TaskRef(*c.current);
      ++done.pc;
      ConcurrentAdvance(core);
    }

    if (lc >= next_tick_ns) {
      next_tick_ns += config_.tick_period_ns;
      if (c.current.has_value()) {
        const TaskId cur = *c.current;
        SimTask& t = TaskRef(cur);
        const uint64_t delta = TakeUnreported(cur);
        SchedResponse resp =
            Call(t.spec.policy, SchedMessage::TaskTick(core, cur, delta));
        bool resched = resp.flag;
        if (!resched && HigherPriorityWork(t.spec.policy, core)) resched = true;
        if (resched) DispatchCommon(core);
      }
    }
  }
}

Metrics Simulator::RunConcurrent(uint64_t t_end_ns) {
  CHECK(config_.mode == SimMode::kConcurrent);
  if (t_end_ns == 0) {
    throw std::runtime_error("concurrent mode needs a virtual end time");
  }
  if (config_.time_scale == 0) {
    throw std::runtime_error("concurrent mode needs a nonzero time_scale");
  }
  // Timed control directives are a VirtualTime tool.
  if (!migrations_.empty() || !actions_.empty()) {
    throw std::runtime_error(
        "concurrent mode does not support timed migrations or hints");
  }

  stop_.store(false);
  std::vector<std::thread> workers;
  workers.reserve(config_.num_cores);
  for (uint32_t i = 0; i < config_.num_cores; ++i) {
    workers.emplace_back(
        [this, i, t_end_ns] { ConcurrentCoreWorker(i, t_end_ns); });
  }

  // Control thread delivers arrivals at their (scaled) times.
  struct Arrival {
    uint64_t at_ns;
    TaskId id;
  };
  std::vector<Arrival> arrivals;
  {
    std::lock_guard<std::recursive_mutex> lock(fw_mu_);
    for (const auto& [id, task] : tasks_) {
      if (task->state == TaskState::kNew) {
        arrivals.push_back({task->spec.arrival_ns, id});
      }
    }
  }
  std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
    return a.at_ns != b.at_ns ? a.at_ns < b.at_ns : a.id < b.id;
  });

  const auto start = std::chrono::steady_clock::now();
  for (const Arrival& a : arrivals) {
    const auto due = start + std::chrono::nanoseconds(a.at_ns / config_.time_scale);
    std::this_thread::sleep_until(due);
    std::lock_guard<std::recursive_mutex> lock(fw_mu_);
    SimTask& task = TaskRef(a.id);
    --pending_arrivals_;
    const CoreId core = PlaceTask(task);
    task.core = core;
    CHECK(registry_.AttachTask(task.spec.policy));
    std::optional<Schedulable> token = tokens_.Issue(a.id, core);
    CHECK(token.has_value());
    Call(task.spec.policy,
         SchedMessage::TaskNew(a.id, task.spec.nice, std::move(*token)));
    task.state = TaskState::kRunnable;
    task.provenance = RunnableProvenance::kNew;
    task.runnable_since_ns = local_clock_ns_[core.index];
    CoreRef(core).runnable.push_back(a.id);
  }

  // Wait for quiescence: everything dead or the virtual horizon passed.
  const auto wall_deadline =
      start + std::chrono::nanoseconds(t_end_ns / config_.time_scale) +
      std::chrono::seconds(30);
  for (;;) {
    {
      std::lock_guard<std::recursive_mutex> lock(fw_mu_);
      DrainHintQueues();  // control thread is the hint consumer here
      if (live_tasks_ == 0 && pending_arrivals_ == 0) break;
      // Only cores with work gate the horizon; a run where everything
      // left is blocked forever should not wait out the wall deadline.
      bool all_past_end = pending_arrivals_ == 0;
      for (uint32_t i = 0; i < config_.num_cores && all_past_end; ++i) {
        const CoreState& cs = cores_[i];
        const bool has_work = cs.current.has_value() || !cs.runnable.empty();
        if (has_work && local_clock_ns_[i] < t_end_ns) all_past_end = false;
      }
      if (all_past_end && live_tasks_ > 0) {
        // Distinguish "everything blocked" from "work still running".
        bool any_work = false;
        for (uint32_t i = 0; i < config_.num_cores; ++i) {
          if (cores_[i].current.has_value() || !cores_[i].runnable.empty()) {
            any_work = true;
          }
        }
        if (!any_work) break;  // all remaining tasks are parked
      }
      if (all_past_end) break;
    }
    if (std::chrono::steady_clock::now() > wall_deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }

  stop_.store(true);
  for (auto& w : workers) w.join();

  std::lock_guard<std::recursive_mutex> lock(fw_mu_);
  for (uint32_t i = 0; i < config_.num_cores; ++i) {
    clock_ns_ = std::max(clock_ns_, local_clock_ns_[i]);
  }
  return Finish();
}

}  // namespace schedlab
