// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/policies/wfq.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "schedlab/logging.h"
#include "schedlab/wire.h"

namespace schedlab::policies {

namespace {

constexpr double kWeightRatio = 1.25;

uint64_t ComputeWeight(Nice nice) {
  const double w = 1024.0 * std::pow(kWeightRatio, -static_cast<double>(nice));
  return static_cast<uint64_t>(std::llround(w));
}

}  // namespace

uint64_t WfqScheduler::WeightForNice(Nice nice) {
  nice = std::clamp(nice, kMinNice, kMaxNice);
  static const auto table = [] {
    std::array<uint64_t, 40> t{};
    for (Nice n = kMinNice; n <= kMaxNice; ++n) {
      t[static_cast<size_t>(n - kMinNice)] = ComputeWeight(n);
    }
    return t;
  }();
  return table[static_cast<size_t>(nice - kMinNice)];
}

uint64_t WfqScheduler::VruntimeDeltaNs(uint64_t delta_ns, Nice nice) {
  return delta_ns * kBaseWeight / WeightForNice(nice);
}

uint64_t WfqScheduler::SliceNs(size_t runnable) const {
  if (runnable == 0) runnable = 1;
  const uint64_t period =
      std::max(params_.min_period_ns, params_.min_slice_ns * runnable);
  return std::max(period / runnable, params_.min_slice_ns);
}

WfqScheduler::WfqScheduler(Params params, LockFactory& locks)
    : params_(std::move(params)),
      name_(params_.version == 1 ? "wfq" : "wfq-v" + std::to_string(params_.version)),
      tag_(CapsuleTag(params_.capsule_version)),
      lock_(locks.CreateLock()) {
  CHECK_GT(params_.num_cores, 0u);
  cores_.resize(params_.num_cores);
}

WfqScheduler::TaskInfo& WfqScheduler::Info(TaskId task) {
  auto it = tasks_.find(task);
  if (it == tasks_.end()) throw std::runtime_error("wfq: unknown task");
  return it->second;
}

WfqScheduler::CoreQueue& WfqScheduler::Queue(CoreId core) {
  if (core.index >= cores_.size()) throw std::runtime_error("wfq: bad core");
  return cores_[core.index];
}

void WfqScheduler::Account(TaskId task, uint64_t delta_ns) {
  if (delta_ns == 0) return;
  TaskInfo& info = Info(task);
  info.vruntime += VruntimeDeltaNs(delta_ns, info.nice);
}

size_t WfqScheduler::RunnableOn(const CoreQueue& cq) const {
  return cq.queue.size() + (cq.current.has_value() ? 1 : 0);
}

void WfqScheduler::RefreshMinVruntime(CoreQueue& cq) {
  std::optional<uint64_t> floor;
  if (!cq.queue.empty()) floor = cq.queue.begin()->first.first;
  if (cq.current.has_value()) {
    const uint64_t cur_vr = Info(*cq.current).vruntime;
    floor = floor.has_value() ? std::min(*floor, cur_vr) : cur_vr;
  }
  if (floor.has_value()) cq.min_vruntime = std::max(cq.min_vruntime, *floor);
}

void WfqScheduler::Enqueue(CoreQueue& cq, TaskId task, Schedulable token) {
  TaskInfo& info = Info(task);
  info.core = token.core();
  info.queued = true;
  const QueueKey key{info.vruntime, task.id};
  if (cq.queue.contains(key)) throw std::runtime_error("wfq: double enqueue");
  cq.queue.emplace(key, std::move(token));
  RefreshMinVruntime(cq);
}

Schedulable WfqScheduler::Extract(CoreQueue& cq, TaskId task) {
  const TaskInfo& info = Info(task);
  auto it = cq.queue.find(QueueKey{info.vruntime, task.id});
  if (it == cq.queue.end()) throw std::runtime_error("wfq: token not queued");
  Schedulable token = std::move(it->second);
  cq.queue.erase(it);
  return token;
}

PickDecision WfqScheduler::PickNextTask(CoreId core,
                                        std::optional<Schedulable> current,
                                        uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  CoreQueue& cq = Queue(core);
  if (current.has_value()) {
    const TaskId id = current->task();
    Account(id, runtime_delta_ns);
    cq.current.reset();
    cq.current_ran_ns = 0;
    Enqueue(cq, id, std::move(*current));
  }
  if (cq.queue.empty()) return PickDecision{};

  auto it = cq.queue.begin();
  if (params_.reverse_tie_break) {
    // Among equal vruntimes take the highest task id instead.
    auto last = cq.queue.upper_bound(QueueKey{it->first.first, UINT64_MAX});
    it = std::prev(last);
  }
  const TaskId id{it->first.second};
  Schedulable token = std::move(it->second);
  cq.queue.erase(it);
  TaskInfo& info = Info(id);
  info.queued = false;
  cq.current = id;
  cq.current_ran_ns = 0;
  RefreshMinVruntime(cq);
  return PickDecision{std::move(token)};
}

void WfqScheduler::PntErr(CoreId core, Schedulable rejected) {
  FrameworkLockGuard guard(*lock_);
  (void)core;  // ownership returns regardless of which core bounced it
  const TaskId id = rejected.task();
  CoreQueue& cq = Queue(rejected.core());
  if (cq.current == id) cq.current.reset();
  Enqueue(cq, id, std::move(rejected));
}

void WfqScheduler::TaskNew(TaskId task, Nice nice, Schedulable token) {
  FrameworkLockGuard guard(*lock_);
  TaskInfo info;
  info.nice = std::clamp(nice, kMinNice, kMaxNice);
  info.weight = WeightForNice(info.nice);
  // Fair start: starts at the core's floor rather than zero debt.
  info.vruntime = Queue(token.core()).min_vruntime;
  CHECK(tasks_.emplace(task, info).second);
  Enqueue(Queue(token.core()), task, std::move(token));
}

void WfqScheduler::TaskWakeup(TaskId task, Schedulable token,
                              uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  Account(task, runtime_delta_ns);
  TaskInfo& info = Info(task);
  CoreQueue& cq = Queue(token.core());
  // Clamp sleeper debt: never further than wake_clamp behind the core's
  // floor. An empty core leaves the vruntime untouched.
  if (RunnableOn(cq) > 0) {
    const uint64_t floor = cq.min_vruntime > params_.wake_clamp_ns
                               ? cq.min_vruntime - params_.wake_clamp_ns
                               : 0;
    info.vruntime = std::max(info.vruntime, floor);
  }
  Enqueue(cq, task, std::move(token));
}

std::optional<Schedulable> WfqScheduler::TaskBlocked(TaskId task,
                                                     uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  TaskInfo& info = Info(task);
  CoreQueue& cq = Queue(info.core);
  if (cq.current == task) {
    Account(task, runtime_delta_ns);
    cq.current.reset();
    cq.current_ran_ns = 0;
    RefreshMinVruntime(cq);
    return std::nullopt;  // token was consumed at dispatch
  }
  if (info.queued) {
    // Blocked while still enqueued (the block raced its dispatch);
    // pull the entry out before touching its key, then hand the held
    // token back.
    Schedulable token = Extract(cq, task);
    info.queued = false;
    Account(task, runtime_delta_ns);
    RefreshMinVruntime(cq);
    return token;
  }
  Account(task, runtime_delta_ns);
  return std::nullopt;
}

std::optional<Schedulable> WfqScheduler::TaskDead(TaskId task,
                                                  uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  TaskInfo& info = Info(task);
  CoreQueue& cq = Queue(info.core);
  std::optional<Schedulable> out;
  if (cq.current == task) {
    cq.current.reset();
    cq.current_ran_ns = 0;
  } else if (info.queued) {
    out = Extract(cq, task);
  }
  (void)runtime_delta_ns;  // the final delta dies with the task
  tasks_.erase(task);
  RefreshMinVruntime(cq);
  return out;
}

TickDecision WfqScheduler::TaskTick(CoreId core, TaskId task,
                                    uint64_t runtime_delta_ns) {
  FrameworkLockGuard guard(*lock_);
  TaskInfo& info = Info(task);
  CoreQueue& cq = Queue(core);
  if (cq.current == task) {
    Account(task, runtime_delta_ns);
    cq.current_ran_ns += runtime_delta_ns;
    RefreshMinVruntime(cq);
    if (cq.queue.empty()) return TickDecision{false};
    return TickDecision{cq.current_ran_ns >= SliceNs(RunnableOn(cq))};
  }
  // Accounting a queued task must re-key its ordered-map entry.
  if (info.queued && runtime_delta_ns > 0) {
    CoreQueue& home = Queue(info.core);
    Schedulable token = Extract(home, task);
    info.vruntime += VruntimeDeltaNs(runtime_delta_ns, info.nice);
    home.queue.emplace(QueueKey{info.vruntime, task.id}, std::move(token));
    RefreshMinVruntime(home);
  } else {
    Account(task, runtime_delta_ns);
  }
  return TickDecision{false};
}

CoreId WfqScheduler::SelectTaskRq(TaskId task, Nice nice) {
  FrameworkLockGuard guard(*lock_);
  (void)task;
  (void)nice;
  // Prefer a fully idle core, else the least occupied; ties go low.
  uint32_t best = 0;
  size_t best_load = SIZE_MAX;
  for (uint32_t i = 0; i < cores_.size(); ++i) {
    const size_t load = RunnableOn(cores_[i]);
    if (load < best_load) {
      best_load = load;
      best = i;
    }
  }
  return CoreId{best};
}

std::optional<Schedulable> WfqScheduler::MigrateTaskRq(TaskId task,
                                                       Schedulable new_token) {
  FrameworkLockGuard guard(*lock_);
  TaskInfo& info = Info(task);
  if (!info.queued) throw std::runtime_error("wfq: migrating unqueued task");
  CoreQueue& from = Queue(info.core);
  CoreQueue& to = Queue(new_token.core());
  Schedulable old = Extract(from, task);
  // Keep the task's relative position: re-base vruntime between queues.
  const uint64_t rel =
      info.vruntime >= from.min_vruntime ? info.vruntime - from.min_vruntime : 0;
  info.vruntime = to.min_vruntime + rel;
  Enqueue(to, task, std::move(new_token));
  RefreshMinVruntime(from);
  return old;
}

std::optional<BalanceDecision> WfqScheduler::Balance(CoreId idle_core) {
  FrameworkLockGuard guard(*lock_);
  // Steal from the longest queue; ties break to the lowest core id.
  size_t longest = 0;
  std::optional<uint32_t> source;
  for (uint32_t i = 0; i < cores_.size(); ++i) {
    if (i == idle_core.index) continue;
    const size_t len = cores_[i].queue.size();
    if (len > longest) {
      longest = len;
      source = i;
    }
  }
  if (!source.has_value()) return std::nullopt;
  const CoreQueue& cq = cores_[*source];
  const TaskId task{cq.queue.begin()->first.second};  // lowest vruntime waits
  return BalanceDecision{task, CoreId{*source}, idle_core};
}

void WfqScheduler::BalanceErr(CoreId core, TaskId task,
                              std::optional<Schedulable> token) {
  FrameworkLockGuard guard(*lock_);
  (void)core;
  (void)task;
  // Nothing was committed at nomination time; re-shelve a returned
  // token if the framework handed one back.
  if (token.has_value()) {
    const TaskId id = token->task();
    Enqueue(Queue(token->core()), id, std::move(*token));
  }
}

UpgradeCapsule WfqScheduler::ReregisterPrep() {
  FrameworkLockGuard guard(*lock_);
  UpgradeCapsule capsule(tag_);
  wire::ByteWriter w;
  w.U32(static_cast<uint32_t>(cores_.size()));
  for (CoreQueue& cq : cores_) {
    w.U64(cq.min_vruntime);
    w.Bool(cq.current.has_value());
    w.U64(cq.current.has_value() ? cq.current->id : 0);
    w.U64(cq.current_ran_ns);
  }
  w.U32(static_cast<uint32_t>(tasks_.size()));
  // Tokens ride the capsule; export in deterministic queue order.
  std::vector<std::pair<TaskId, TaskInfo*>> ordered;
  ordered.reserve(tasks_.size());
  for (auto& [id, info] : tasks_) ordered.emplace_back(id, &info);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [id, info] : ordered) {
    w.U64(id.id);
    w.I32(info->nice);
    w.U64(info->vruntime);
    w.U32(info->core.index);
    w.Bool(info->queued);
    if (info->queued) {
      capsule.tokens.push_back(Extract(cores_[info->core.index], id));
    }
  }
  capsule.bytes = w.Take();
  tasks_.clear();
  for (CoreQueue& cq : cores_) {
    CHECK(cq.queue.empty());
    cq.current.reset();
    cq.current_ran_ns = 0;
  }
  return capsule;
}

bool WfqScheduler::ReregisterInit(UpgradeCapsule& capsule) {
  FrameworkLockGuard guard(*lock_);
  if (capsule.format_tag != tag_) return false;
  wire::ByteReader r(capsule.bytes);
  const uint32_t n_cores = r.U32();
  if (n_cores != cores_.size()) return false;
  for (CoreQueue& cq : cores_) {
    cq.min_vruntime = r.U64();
    const bool has_current = r.Bool();
    const uint64_t cur = r.U64();
    cq.current = has_current ? std::optional<TaskId>(TaskId{cur}) : std::nullopt;
    cq.current_ran_ns = r.U64();
  }
  std::unordered_map<TaskId, Schedulable*> by_task;
  for (Schedulable& t : capsule.tokens) by_task.emplace(t.task(), &t);
  const uint32_t n_tasks = r.U32();
  for (uint32_t i = 0; i < n_tasks; ++i) {
    const TaskId id{r.U64()};
    TaskInfo info;
    info.nice = r.I32();
    info.weight = WeightForNice(info.nice);
    info.vruntime = r.U64();
    info.core = CoreId{r.U32()};
    info.queued = r.Bool();
    if (!r.ok()) return false;
    tasks_.emplace(id, info);
    if (info.queued) {
      auto it = by_task.find(id);
      if (it == by_task.end()) return false;
      cores_[info.core.index].queue.emplace(QueueKey{info.vruntime, id.id},
                                            std::move(*it->second));
    }
  }
  if (!r.ok()) return false;
  capsule.tokens.clear();
  capsule.bytes.clear();
  return true;
}

uint64_t WfqScheduler::TotalVruntimeNs() const {
  FrameworkLockGuard guard(*lock_);
  uint64_t total = 0;
  for (const auto& [id, info] : tasks_) total += info.vruntime;
  return total;
}

std::vector<uint64_t> WfqScheduler::AttachedTaskIds() const {
  FrameworkLockGuard guard(*lock_);
  std::vector<uint64_t> ids;
  ids.reserve(tasks_.size());
  for (const auto& [id, info] : tasks_) ids.push_back(id.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

uint64_t WfqScheduler::VruntimeOf(TaskId task) const {
  FrameworkLockGuard guard(*lock_);
  auto it = tasks_.find(task);
  return it == tasks_.end() ? 0 : it->second.vruntime;
}

uint64_t WfqScheduler::MinVruntimeOf(CoreId core) const {
  FrameworkLockGuard guard(*lock_);
  return cores_[core.index].min_vruntime;
}

}  // namespace schedlab::policies
