// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_BENCH_H_
#define SCHEDLAB_BENCH_H_

#include <memory>
#include <string>
#include <vector>

#include "schedlab/locks.h"
#include "schedlab/metrics.h"
#include "schedlab/registry.h"
#include "schedlab/sim.h"
#include "schedlab/workload.h"

namespace schedlab::bench {

// Cohort labels the generators stamp on tasks so reports can slice
// metrics per class.
inline constexpr uint32_t kCohortDefault = 0;
inline constexpr uint32_t kCohortShort = 1;
inline constexpr uint32_t kCohortLong = 2;
inline constexpr uint32_t kCohortBatch = 3;
inline constexpr uint32_t kCohortMessage = 4;
inline constexpr uint32_t kCohortWorker = 5;

// Paper-scale runs shrink by 10x for desk-scale defaults.
inline constexpr uint64_t kDeskPingPongMessages = 100'000;

// ---------------------------------------------------------------------------
// Workload generators

// Two tasks bouncing a message back and forth n times; each leg is a
// signal followed by a block. Pinned placements model the same-core /
// two-core variants.
Workload GenPingPong(uint64_t n_messages, std::optional<CoreId> pin_a,
                     std::optional<CoreId> pin_b, PolicyId policy = 1);

struct SchbenchParams {
  uint32_t message_threads = 2;
  uint32_t workers_per_message = 2;
  uint32_t rounds = 1000;
  uint64_t worker_compute_ns = 5'000;
  PolicyId policy = 1;
  bool locality_hints = false;  // one group per message thread
};
Workload GenSchbench(const SchbenchParams& params);

struct BimodalParams {
  double load_fraction = 0.8;
  uint32_t worker_cores = 5;
  uint64_t duration_ns = 300'000'000;  // arrival horizon
  uint64_t short_ns = 4'000;           // 99.5% of requests
  uint64_t long_ns = 10'000'000;       // 0.5% range queries
  double long_fraction = 0.005;
  uint64_t seed = 42;
  PolicyId policy = 1;
  Nice nice = 0;
  uint64_t first_task_id = 1;
};
Workload GenBimodal(const BimodalParams& params);

struct BatchColoParams {
  BimodalParams bimodal;
  uint32_t batch_tasks = 5;
  uint64_t batch_compute_ns = 400'000'000;
  Nice bimodal_nice = -20;
  Nice batch_nice = 19;
  PolicyId batch_policy = 2;
};
Workload GenBatchColo(const BatchColoParams& params);

struct FairnessScenario {
  std::string name;
  Workload workload;
  uint32_t num_cores = 8;
};
// Appendix-style suite: five equal tasks spread then co-located, a
// minimum-priority straggler, and a forced migration.
std::vector<FairnessScenario> GenFairnessSuite(uint64_t task_compute_ns =
                                                   400'000'000);

// ---------------------------------------------------------------------------
// Policy construction and run orchestration

std::shared_ptr<SchedulerPolicy> MakePolicy(const std::string& name,
                                            uint32_t num_cores, uint64_t seed,
                                            LockFactory& locks);
bool KnownPolicy(const std::string& name);

struct RunSpec {
  std::vector<std::string> policies;  // priority order, ids 1..n
  SimConfig config;
  Workload workload;
  uint64_t t_end_ns = 0;
  bool create_hint_queues = true;  // auto-create queues policies declare
};

struct RunOutput {
  Metrics metrics;
  std::vector<uint64_t> queue_ids;
};

RunOutput RunWorkload(const RunSpec& spec);

// ---------------------------------------------------------------------------
// Reporting

struct BenchRow {
  std::string workload;
  std::string policy;
  std::string metric;
  double value = 0;
  std::string unit;
  uint64_t seed = 0;
};

std::string CsvHeader();
std::string ToCsv(const std::vector<BenchRow>& rows);

// Gnuplot-compatible two-column data: x <tab> y per line.
void WritePlotData(const std::string& path,
                   const std::vector<std::pair<double, double>>& series);

// ---------------------------------------------------------------------------
// Prebuilt suites (used by the CLI `bench` subcommand)

std::vector<BenchRow> RunPingPongSuite(uint64_t seed, uint64_t messages);
std::vector<BenchRow> RunFairnessSuiteBench(uint64_t seed);
std::vector<BenchRow> RunBimodalSuite(uint64_t seed,
                                      const std::vector<double>& loads,
                                      const std::string& plot_dir = "");
std::vector<BenchRow> RunBatchColoSuite(uint64_t seed);
std::vector<BenchRow> RunLocalitySuite(uint64_t seed);
std::vector<BenchRow> RunUpgradeDemo(uint64_t seed, uint64_t upgrade_at_ns);

}  // namespace schedlab::bench

#endif  // SCHEDLAB_BENCH_H_
