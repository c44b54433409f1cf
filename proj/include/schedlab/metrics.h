// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_METRICS_H_
#define SCHEDLAB_METRICS_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "schedlab/types.h"

namespace schedlab {

// Nearest-rank percentile over the full sample set. p in (0, 100].
uint64_t Percentile(std::vector<uint64_t> samples, double p);

struct TaskMetrics {
  bool completed = false;
  uint64_t arrival_ns = 0;
  uint64_t completion_ns = 0;
  uint64_t runtime_ns = 0;
  uint64_t dispatches = 0;
  uint32_t cohort = 0;
  Nice nice = 0;

  uint64_t SojournNs() const { return completion_ns - arrival_ns; }
};

// Validation and safety counters kept by the translation layer.
struct SimCounters {
  uint64_t dispatches_ok = 0;
  uint64_t rejected_wrong_core = 0;
  uint64_t rejected_stale = 0;
  uint64_t rejected_not_runnable = 0;  // token fine, task state was not
  uint64_t pnt_errs = 0;
  uint64_t pick_decisions = 0;  // pick responses naming a task
  uint64_t livelock_guards = 0;
  uint64_t balance_errs = 0;
  uint64_t migrations = 0;
  uint64_t forced_migrations = 0;
  uint64_t bad_core_selections = 0;
  uint64_t work_conservation_violations = 0;

  uint64_t Rejections() const {
    return rejected_wrong_core + rejected_stale + rejected_not_runnable;
  }

  // Every dispatch that executed consumed a live, core-matching serial;
  // rejections never run and always route back through pnt_err.
  bool AffineSafetyHolds() const {
    return dispatches_ok == pick_decisions - Rejections() &&
           pnt_errs == Rejections();
  }
};

struct Metrics {
  uint64_t duration_ns = 0;
  std::map<uint64_t, TaskMetrics> tasks;  // keyed by TaskId::id
  std::vector<uint64_t> core_busy_ns;
  std::array<uint64_t, kNumMessageKinds> message_counts{};
  SimCounters counters;

  // Latency samples split by what made the task runnable. Wakeup
  // percentiles are reported over wake samples; spawn and preemption
  // samples are kept for bookkeeping checks.
  std::vector<uint64_t> wake_latencies;
  std::vector<uint64_t> spawn_latencies;
  uint64_t preempt_samples = 0;
  uint64_t warmup_samples = 0;  // taken before warmup_ns, not reported
  uint64_t runnable_to_running_transitions = 0;

  uint64_t P50WakeNs() const;
  uint64_t P99WakeNs() const;
  uint64_t TotalTaskRuntimeNs() const;
  uint64_t TotalCoreBusyNs() const;
  bool RuntimeConserved() const {
    return TotalTaskRuntimeNs() == TotalCoreBusyNs();
  }
  uint64_t LatencySampleCount() const {
    return wake_latencies.size() + spawn_latencies.size() + preempt_samples +
           warmup_samples;
  }

  // One deterministic blob; equal runs serialize equally.
  std::string Canonical() const;
};

}  // namespace schedlab

#endif  // SCHEDLAB_METRICS_H_
