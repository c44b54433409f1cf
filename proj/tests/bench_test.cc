// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/bench.h"

#include "doctest.h"
#include "schedlab/metrics.h"

namespace schedlab {
namespace {

using namespace bench;

TEST_CASE("nearest-rank percentiles") {
  std::vector<uint64_t> v = {40, 10, 30, 20};
  CHECK(Percentile(v, 50.0) == 20);   // ceil(0.5*4) = 2nd
  CHECK(Percentile(v, 99.0) == 40);   // ceil(3.96) = 4th
  CHECK(Percentile(v, 100.0) == 40);
  CHECK(Percentile({7}, 50.0) == 7);
  CHECK(Percentile({}, 99.0) == 0);
}

TEST_CASE("ping-pong with one message wakes each side exactly once") {
  RunSpec spec;
  spec.policies = {"wfq"};
  spec.config.num_cores = 2;
  spec.workload = GenPingPong(1, CoreId{0}, CoreId{1});
  RunOutput out = RunWorkload(spec);
  CHECK(out.metrics.wake_latencies.size() == 2);
  for (const auto& [id, t] : out.metrics.tasks) CHECK(t.completed);
}

TEST_CASE("ping-pong runs report both placements deterministically") {
  auto run = [](bool same_core) {
    RunSpec spec;
    spec.policies = {"wfq"};
    spec.config.num_cores = 2;
    spec.workload =
        GenPingPong(500, CoreId{0}, same_core ? CoreId{0} : CoreId{1});
    return RunWorkload(spec).metrics;
  };
  Metrics same = run(true);
  Metrics cross = run(false);
  CHECK(same.wake_latencies.size() == 1000);
  CHECK(cross.wake_latencies.size() == 1000);
  // The same-core wake path is the cheap one by construction.
  CHECK(same.P50WakeNs() < cross.P50WakeNs());
  // Reproducible bit-for-bit under the fixed seed.
  CHECK(run(false).Canonical() == cross.Canonical());
}

TEST_CASE("schbench (2,2) generates four workers and two message threads") {
  SchbenchParams params;
  Workload w = GenSchbench(params);
  CHECK(w.tasks.size() == 6);
  int messages = 0, workers = 0;
  for (const TaskSpec& t : w.tasks) {
    if (t.cohort == kCohortMessage) ++messages;
    if (t.cohort == kCohortWorker) ++workers;
  }
  CHECK(messages == 2);
  CHECK(workers == 4);
}

TEST_CASE("schbench (2,40) matches the 80-core sizing") {
  SchbenchParams params;
  params.message_threads = 2;
  params.workers_per_message = 40;
  Workload w = GenSchbench(params);
  size_t workers = 0;
  for (const TaskSpec& t : w.tasks) workers += t.cohort == kCohortWorker;
  CHECK(workers == 80);  // one worker per core on the big machine
  CHECK(w.tasks.size() == 82);
}

TEST_CASE("schbench (1,1) latency is just the wake path") {
  SchbenchParams params;
  params.message_threads = 1;
  params.workers_per_message = 1;
  params.rounds = 50;
  RunSpec spec;
  spec.policies = {"wfq"};
  spec.config.num_cores = 2;
  spec.config.same_core_wake_ns = 2'000;
  spec.config.cross_core_wake_ns = 45'000;
  spec.workload = GenSchbench(params);
  RunOutput out = RunWorkload(spec);
  // Idle cores: every wake is dispatch-overhead only (the wake cost).
  CHECK(out.metrics.P99WakeNs() <= 45'000);
  CHECK(out.metrics.P50WakeNs() >= 2'000);
}

TEST_CASE("bimodal mix honors the 0.5% long fraction under the seed") {
  BimodalParams params;
  params.load_fraction = 0.5;
  params.duration_ns = 500'000'000;
  Workload w = GenBimodal(params);
  size_t longs = 0;
  for (const TaskSpec& t : w.tasks) longs += t.cohort == kCohortLong ? 1 : 0;
  const double fraction =
      static_cast<double>(longs) / static_cast<double>(w.tasks.size());
  CHECK(fraction > 0.001);
  CHECK(fraction < 0.015);
  // Same seed, same workload.
  Workload again = GenBimodal(params);
  REQUIRE(again.tasks.size() == w.tasks.size());
  for (size_t i = 0; i < w.tasks.size(); ++i) {
    CHECK(again.tasks[i].arrival_ns == w.tasks[i].arrival_ns);
    CHECK(again.tasks[i].cohort == w.tasks[i].cohort);
  }
}

TEST_CASE("near-zero bimodal load leaves the batch with the machine") {
  BatchColoParams params;
  params.bimodal.load_fraction = 0.001;
  params.bimodal.duration_ns = 50'000'000;
  params.batch_compute_ns = 50'000'000;
  RunSpec spec;
  spec.policies = {"shinjuku", "wfq"};
  spec.config.num_cores = 5;
  spec.config.tick_period_ns = 10'000;
  spec.config.same_core_wake_ns = 0;
  spec.config.cross_core_wake_ns = 0;
  spec.workload = GenBatchColo(params);
  RunOutput out = RunWorkload(spec);
  uint64_t batch_runtime = 0;
  for (const auto& [id, t] : out.metrics.tasks) {
    if (t.cohort == kCohortBatch) batch_runtime += t.runtime_ns;
  }
  const double share = static_cast<double>(batch_runtime) /
                       (static_cast<double>(out.metrics.duration_ns) * 5.0);
  CHECK(share > 0.9);  // virtually the whole machine
}

// Weight-ratio oracle: two CPU-bound tasks at nice -20 and 19 sharing a
// core split CPU as 88818 : 15 once vruntime rotation has settled.
TEST_CASE("wfq-only colocations split by the declared weight ratio") {
  RunSpec spec;
  spec.policies = {"wfq"};
  spec.config.num_cores = 1;
  TaskSpec fg;
  fg.id = TaskId{1};
  fg.nice = -20;
  fg.program = {ComputeStep{300'000'000'000}, ExitStep{}};
  TaskSpec bg;
  bg.id = TaskId{2};
  bg.nice = 19;
  bg.program = {ComputeStep{300'000'000'000}, ExitStep{}};
  spec.workload.tasks = {fg, bg};
  spec.t_end_ns = 120'000'000'000;  // enough rotations to converge
  RunOutput out = RunWorkload(spec);
  const double total = static_cast<double>(
      out.metrics.tasks.at(1).runtime_ns + out.metrics.tasks.at(2).runtime_ns);
  const double bg_share =
      static_cast<double>(out.metrics.tasks.at(2).runtime_ns) / total;
  const double expected = 15.0 / (88818.0 + 15.0);
  CHECK(bg_share > expected * 0.5);
  CHECK(bg_share < expected * 2.0);
}

TEST_CASE("fairness suite shapes") {
  std::vector<FairnessScenario> suite = GenFairnessSuite();
  REQUIRE(suite.size() == 4);
  CHECK(suite[0].workload.tasks.size() == 5);
  for (const TaskSpec& t : suite[1].workload.tasks) {
    CHECK(t.pinned == CoreId{0});
  }
  CHECK(suite[2].workload.tasks.back().nice == kMaxNice);
  CHECK(suite[3].workload.migrations.size() == 1);
}

TEST_CASE("a forced migration perturbs but does not break fairness") {
  std::vector<FairnessScenario> suite = GenFairnessSuite(100'000'000);
  const FairnessScenario& scenario = suite[3];
  RunSpec spec;
  spec.policies = {"wfq"};
  spec.config.num_cores = scenario.num_cores;
  spec.workload = scenario.workload;
  RunOutput out = RunWorkload(spec);
  CHECK(out.metrics.counters.forced_migrations == 1);
  uint64_t lo = UINT64_MAX, hi = 0;
  for (const auto& [id, t] : out.metrics.tasks) {
    CHECK(t.completed);
    lo = std::min(lo, t.completion_ns);
    hi = std::max(hi, t.completion_ns);
  }
  // Everyone still lands together; the moved task's detour is bounded
  // by the steal-back.
  CHECK(static_cast<double>(hi - lo) / static_cast<double>(lo) < 0.6);
  CHECK(out.metrics.counters.AffineSafetyHolds());
  CHECK(out.metrics.RuntimeConserved());
}

TEST_CASE("csv rows carry the documented column order") {
  std::vector<BenchRow> rows = {{"w", "p", "m", 1.5, "ns", 42}};
  CHECK(ToCsv(rows) == "workload,policy,metric,value,unit,seed\nw,p,m,1.5,ns,42\n");
}

TEST_CASE("percentiles are monotone on a real run") {
  RunSpec spec;
  spec.policies = {"wfq"};
  spec.config.num_cores = 2;
  spec.workload = GenPingPong(200, CoreId{0}, CoreId{1});
  RunOutput out = RunWorkload(spec);
  CHECK(out.metrics.P50WakeNs() <= out.metrics.P99WakeNs());
}

}  // namespace
}  // namespace schedlab
