// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/bench.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "schedlab/logging.h"
#include "schedlab/policies/arbiter.h"
#include "schedlab/policies/locality.h"
#include "schedlab/policies/shinjuku.h"
#include "schedlab/policies/wfq.h"

namespace schedlab::bench {

namespace {

// Event-id layout keeps generator namespaces apart.
constexpr uint64_t kPingEventA = 1;
constexpr uint64_t kPingEventB = 2;
constexpr uint64_t kSchbenchWorkerEventBase = 1'000;
constexpr uint64_t kSchbenchReplyEventBase = 1'000'000;

}  // namespace

Workload GenPingPong(uint64_t n_messages, std::optional<CoreId> pin_a,
                     std::optional<CoreId> pin_b, PolicyId policy) {
  CHECK_GE(n_messages, 1u);
  Workload w;
  TaskSpec a;
  a.id = TaskId{1};
  a.policy = policy;
  a.pinned = pin_a;
  a.cohort = kCohortMessage;
  a.arrival_ns = 1'000;  // the responder parks on its event first
  for (uint64_t i = 0; i < n_messages; ++i) {
    a.program.push_back(SignalStep{kPingEventB});
    a.program.push_back(BlockStep{kPingEventA});
  }
  a.program.push_back(ExitStep{});

  TaskSpec b;
  b.id = TaskId{2};
  b.policy = policy;
  b.pinned = pin_b;
  b.cohort = kCohortWorker;
  for (uint64_t i = 0; i < n_messages; ++i) {
    b.program.push_back(BlockStep{kPingEventB});
    b.program.push_back(SignalStep{kPingEventA});
  }
  b.program.push_back(ExitStep{});

  w.tasks.push_back(std::move(a));
  w.tasks.push_back(std::move(b));
  return w;
}

Workload GenSchbench(const SchbenchParams& params) {
  CHECK_GE(params.message_threads, 1u);
  CHECK_GE(params.workers_per_message, 1u);
  Workload w;
  uint64_t next_id = 1;
  for (uint32_t m = 0; m < params.message_threads; ++m) {
    const uint64_t reply_event = kSchbenchReplyEventBase + m;
    TaskSpec msg;
    msg.id = TaskId{next_id++};
    msg.policy = params.policy;
    msg.cohort = kCohortMessage;
    msg.arrival_ns = 1'000;  // after any hints
    for (uint32_t r = 0; r < params.rounds; ++r) {
      for (uint32_t j = 0; j < params.workers_per_message; ++j) {
        msg.program.push_back(SignalStep{
            kSchbenchWorkerEventBase + m * params.workers_per_message + j});
      }
      for (uint32_t j = 0; j < params.workers_per_message; ++j) {
        msg.program.push_back(BlockStep{reply_event});
      }
    }
    msg.program.push_back(ExitStep{});
    if (params.locality_hints) {
      policies::LocalityHint hint;
      hint.task = msg.id.id;
      hint.group = m + 1;
      HintDirective d;
      d.at_ns = 0;
      d.policy = params.policy;
      d.kind = HintDirective::Kind::kLocality;
      d.record = hint.Encode();
      w.hints.push_back(std::move(d));
    }
    w.tasks.push_back(std::move(msg));
  }
  for (uint32_t m = 0; m < params.message_threads; ++m) {
    for (uint32_t j = 0; j < params.workers_per_message; ++j) {
      TaskSpec worker;
      worker.id = TaskId{next_id++};
      worker.policy = params.policy;
      worker.cohort = kCohortWorker;
      worker.arrival_ns = 1'000;
      const uint64_t wake_event =
          kSchbenchWorkerEventBase + m * params.workers_per_message + j;
      for (uint32_t r = 0; r < params.rounds; ++r) {
        worker.program.push_back(BlockStep{wake_event});
        worker.program.push_back(ComputeStep{params.worker_compute_ns});
        worker.program.push_back(SignalStep{kSchbenchReplyEventBase + m});
      }
      worker.program.push_back(ExitStep{});
      if (params.locality_hints) {
        policies::LocalityHint hint;
        hint.task = worker.id.id;
        hint.group = m + 1;
        HintDirective d;
        d.at_ns = 0;
        d.policy = params.policy;
        d.kind = HintDirective::Kind::kLocality;
        d.record = hint.Encode();
        w.hints.push_back(std::move(d));
      }
      w.tasks.push_back(std::move(worker));
    }
  }
  return w;
}

Workload GenBimodal(const BimodalParams& params) {
  CHECK_GT(params.load_fraction, 0.0);
  CHECK_LE(params.load_fraction, 1.0);
  Workload w;
  const double mean_service =
      (1.0 - params.long_fraction) * static_cast<double>(params.short_ns) +
      params.long_fraction * static_cast<double>(params.long_ns);
  const double mean_interarrival_ns =
      mean_service /
      (params.load_fraction * static_cast<double>(params.worker_cores));

  std::mt19937_64 rng(params.seed);
  std::exponential_distribution<double> gap(1.0 / mean_interarrival_ns);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  double at = 0;
  uint64_t id = params.first_task_id;
  while (true) {
    at += gap(rng);
    if (at >= static_cast<double>(params.duration_ns)) break;
    const bool is_long = coin(rng) < params.long_fraction;
    TaskSpec t;
    t.id = TaskId{id++};
    t.nice = params.nice;
    t.policy = params.policy;
    t.arrival_ns = static_cast<uint64_t>(at);
    t.cohort = is_long ? kCohortLong : kCohortShort;
    t.program.push_back(
        ComputeStep{is_long ? params.long_ns : params.short_ns});
    t.program.push_back(ExitStep{});
    w.tasks.push_back(std::move(t));
  }
  return w;
}

Workload GenBatchColo(const BatchColoParams& params) {
  BimodalParams bimodal = params.bimodal;
  bimodal.nice = params.bimodal_nice;
  // Leave id space for the batch tasks below.
  bimodal.first_task_id = params.batch_tasks + 1;
  Workload w = GenBimodal(bimodal);
  for (uint32_t i = 0; i < params.batch_tasks; ++i) {
    TaskSpec batch;
    batch.id = TaskId{i + 1};
    batch.nice = params.batch_nice;
    batch.policy = params.batch_policy;
    batch.cohort = kCohortBatch;
    batch.arrival_ns = 0;
    batch.program.push_back(ComputeStep{params.batch_compute_ns});
    batch.program.push_back(ExitStep{});
    w.tasks.push_back(std::move(batch));
  }
  return w;
}

std::vector<FairnessScenario> GenFairnessSuite(uint64_t task_compute_ns) {
  std::vector<FairnessScenario> out;

  auto cpu_task = [&](uint64_t id, Nice nice,
                      std::optional<CoreId> pin) {
    TaskSpec t;
    t.id = TaskId{id};
    t.nice = nice;
    t.pinned = pin;
    t.program.push_back(ComputeStep{task_compute_ns});
    t.program.push_back(ExitStep{});
    return t;
  };

  {
    FairnessScenario s;
    s.name = "fairness_spread";
    for (uint64_t i = 1; i <= 5; ++i) {
      s.workload.tasks.push_back(cpu_task(i, 0, std::nullopt));
    }
    out.push_back(std::move(s));
  }
  {
    FairnessScenario s;
    s.name = "fairness_colocated";
    for (uint64_t i = 1; i <= 5; ++i) {
      s.workload.tasks.push_back(cpu_task(i, 0, CoreId{0}));
    }
    out.push_back(std::move(s));
  }
  {
    FairnessScenario s;
    s.name = "fairness_weighted";
    for (uint64_t i = 1; i <= 4; ++i) {
      s.workload.tasks.push_back(cpu_task(i, 0, CoreId{0}));
    }
    s.workload.tasks.push_back(cpu_task(5, kMaxNice, CoreId{0}));
    out.push_back(std::move(s));
  }
  {
    FairnessScenario s;
    s.name = "fairness_migration";
    for (uint64_t i = 1; i <= 8; ++i) {
      s.workload.tasks.push_back(cpu_task(i, 0, std::nullopt));
    }
    MigrateDirective m;
    m.at_ns = task_compute_ns / 2;
    m.task = TaskId{1};
    m.to = CoreId{1};
    s.workload.migrations.push_back(m);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<SchedulerPolicy> MakePolicy(const std::string& name,
                                            uint32_t num_cores, uint64_t seed,
                                            LockFactory& locks) {
  if (name == "wfq") {
    policies::WfqScheduler::Params p;
    p.num_cores = num_cores;
    return std::make_shared<policies::WfqScheduler>(p, locks);
  }
  if (name == "wfq-v2") {
    policies::WfqScheduler::Params p;
    p.num_cores = num_cores;
    p.version = 2;
    return std::make_shared<policies::WfqScheduler>(p, locks);
  }
  if (name == "shinjuku") {
    policies::ShinjukuScheduler::Params p;
    p.num_cores = num_cores;
    return std::make_shared<policies::ShinjukuScheduler>(p, locks);
  }
  if (name == "locality") {
    policies::LocalityScheduler::Params p;
    p.num_cores = num_cores;
    p.seed = seed;
    return std::make_shared<policies::LocalityScheduler>(p, locks);
  }
  if (name == "arbiter") {
    policies::ArbiterScheduler::Params p;
    p.num_cores = num_cores;
    p.reserved_cores = 1;
    return std::make_shared<policies::ArbiterScheduler>(p, locks);
  }
  throw std::runtime_error("unknown policy: " + name);
}

bool KnownPolicy(const std::string& name) {
  return name == "wfq" || name == "wfq-v2" || name == "shinjuku" ||
         name == "locality" || name == "arbiter";
}

RunOutput RunWorkload(const RunSpec& spec) {
  PolicyRegistry registry;
  PlainLockFactory locks;
  std::vector<PolicyId> order;
  for (size_t i = 0; i < spec.policies.size(); ++i) {
    const PolicyId id = static_cast<PolicyId>(i + 1);
    auto policy = MakePolicy(spec.policies[i], spec.config.num_cores,
                             spec.config.seed, locks);
    CHECK(registry.Register(id, std::move(policy)) == RegisterResult::kOk);
    order.push_back(id);
  }
  Simulator sim(spec.config, registry, order);

  RunOutput out;
  if (spec.create_hint_queues) {
    for (PolicyId id : order) {
      auto instance = registry.Instance(id);
      for (HintDirection dir :
           {HintDirection::kUserToSched, HintDirection::kSchedToUser}) {
        if (instance->hint_record_width(dir) != 0) {
          std::optional<uint64_t> qid = sim.CreateQueue(id, dir, 256);
          if (qid.has_value()) out.queue_ids.push_back(*qid);
        }
      }
    }
  }
  sim.AddWorkload(spec.workload);
  out.metrics = sim.RunUntil(spec.t_end_ns);
  return out;
}

// ---------------------------------------------------------------------------

std::string CsvHeader() { return "workload,policy,metric,value,unit,seed"; }

std::string ToCsv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << CsvHeader() << "\n";
  for (const BenchRow& r : rows) {
    out << r.workload << "," << r.policy << "," << r.metric << ","
        << r.value << "," << r.unit << "," << r.seed << "\n";
  }
  return out.str();
}

void WritePlotData(const std::string& path,
                   const std::vector<std::pair<double, double>>& series) {
  std::ofstream out(path, std::ios::trunc);
  CHECK(out.is_open());
  for (const auto& [x, y] : series) out << x << "\t" << y << "\n";
}

// ---------------------------------------------------------------------------
// Suites

namespace {

std::vector<uint64_t> CohortSojourns(const Metrics& metrics, uint32_t cohort) {
  std::vector<uint64_t> out;
  for (const auto& [id, t] : metrics.tasks) {
    if (t.cohort == cohort && t.completed) out.push_back(t.SojournNs());
  }
  return out;
}

double RuntimeStddev(const Metrics& metrics) {
  std::vector<double> samples;
  for (const auto& [id, t] : metrics.tasks) {
    samples.push_back(static_cast<double>(t.runtime_ns));
  }
  if (samples.size() < 2) return 0;
  double mean = 0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size() - 1);
  return std::sqrt(var);
}

}  // namespace

std::vector<BenchRow> RunPingPongSuite(uint64_t seed, uint64_t messages) {
  std::vector<BenchRow> rows;
  for (const std::string policy : {"wfq", "shinjuku", "locality"}) {
    for (const bool same_core : {true, false}) {
      RunSpec spec;
      spec.policies = {policy};
      spec.config.num_cores = 2;
      spec.config.seed = seed;
      spec.config.keep_trace = false;
      spec.workload = GenPingPong(messages, CoreId{0},
                                  same_core ? CoreId{0} : CoreId{1});
      RunOutput out = RunWorkload(spec);
      const std::string name =
          same_core ? "pingpong_one_core" : "pingpong_two_cores";
      rows.push_back({name, policy, "wake_p50_ns",
                      static_cast<double>(out.metrics.P50WakeNs()), "ns", seed});
      rows.push_back({name, policy, "wake_p99_ns",
                      static_cast<double>(out.metrics.P99WakeNs()), "ns", seed});
      rows.push_back({name, policy, "wakeups",
                      static_cast<double>(out.metrics.wake_latencies.size()),
                      "count", seed});
    }
  }
  return rows;
}

std::vector<BenchRow> RunFairnessSuiteBench(uint64_t seed) {
  std::vector<BenchRow> rows;
  for (FairnessScenario& scenario : GenFairnessSuite()) {
    RunSpec spec;
    spec.policies = {"wfq"};
    spec.config.num_cores = scenario.num_cores;
    spec.config.seed = seed;
    spec.config.keep_trace = false;
    spec.workload = scenario.workload;
    RunOutput out = RunWorkload(spec);
    uint64_t makespan = 0;
    for (const auto& [id, t] : out.metrics.tasks) {
      rows.push_back({scenario.name, "wfq",
                      "completion_task_" + std::to_string(id),
                      static_cast<double>(t.completion_ns), "ns", seed});
      makespan = std::max(makespan, t.completion_ns);
    }
    rows.push_back({scenario.name, "wfq", "makespan",
                    static_cast<double>(makespan), "ns", seed});
    rows.push_back({scenario.name, "wfq", "runtime_stddev",
                    RuntimeStddev(out.metrics), "ns", seed});
  }
  return rows;
}

std::vector<BenchRow> RunBimodalSuite(uint64_t seed,
                                      const std::vector<double>& loads,
                                      const std::string& plot_dir) {
  std::vector<BenchRow> rows;
  std::vector<std::pair<double, double>> wfq_curve;
  std::vector<std::pair<double, double>> shinjuku_curve;
  for (double load : loads) {
    for (const std::string policy : {"wfq", "shinjuku"}) {
      BimodalParams params;
      params.load_fraction = load;
      params.seed = seed;
      RunSpec spec;
      spec.policies = {policy};
      spec.config.num_cores = params.worker_cores;
      spec.config.tick_period_ns = 10'000;  // microsecond-scale preemption
      spec.config.seed = seed;
      spec.config.same_core_wake_ns = 0;  // queueing is the experiment
      spec.config.cross_core_wake_ns = 0;
      spec.config.keep_trace = false;
      spec.workload = GenBimodal(params);
      RunOutput out = RunWorkload(spec);
      const double p99 = static_cast<double>(
          Percentile(CohortSojourns(out.metrics, kCohortShort), 99.0));
      const std::string name =
          "bimodal_load_" + std::to_string(static_cast<int>(load * 100));
      rows.push_back({name, policy, "short_p99_sojourn_ns", p99, "ns", seed});
      (policy == "wfq" ? wfq_curve : shinjuku_curve).emplace_back(load, p99);
    }
  }
  if (!plot_dir.empty()) {
    WritePlotData(plot_dir + "/bimodal_wfq.dat", wfq_curve);
    WritePlotData(plot_dir + "/bimodal_shinjuku.dat", shinjuku_curve);
  }
  return rows;
}

std::vector<BenchRow> RunBatchColoSuite(uint64_t seed) {
  std::vector<BenchRow> rows;
  BatchColoParams params;
  params.bimodal.seed = seed;
  params.bimodal.load_fraction = 0.8;

  // Baseline: the bimodal load alone under the microsecond scheduler.
  RunSpec base;
  base.policies = {"shinjuku"};
  base.config.num_cores = params.bimodal.worker_cores;
  base.config.tick_period_ns = 10'000;
  base.config.seed = seed;
  base.config.same_core_wake_ns = 0;
  base.config.cross_core_wake_ns = 0;
  base.config.keep_trace = false;
  {
    BimodalParams alone = params.bimodal;
    alone.nice = params.bimodal_nice;
    base.workload = GenBimodal(alone);
  }
  RunOutput baseline = RunWorkload(base);
  const double p99_alone = static_cast<double>(
      Percentile(CohortSojourns(baseline.metrics, kCohortShort), 99.0));

  // Co-located: bimodal on the microsecond scheduler, batch underneath
  // on weighted fair queuing, exactly a two-class priority stack.
  RunSpec colo = base;
  colo.policies = {"shinjuku", "wfq"};
  colo.workload = GenBatchColo(params);
  RunOutput out = RunWorkload(colo);
  const double p99_colo = static_cast<double>(
      Percentile(CohortSojourns(out.metrics, kCohortShort), 99.0));

  uint64_t batch_runtime = 0;
  for (const auto& [id, t] : out.metrics.tasks) {
    if (t.cohort == kCohortBatch) batch_runtime += t.runtime_ns;
  }
  const double capacity = static_cast<double>(out.metrics.duration_ns) *
                          static_cast<double>(base.config.num_cores);
  rows.push_back({"batch_colo", "shinjuku", "short_p99_alone_ns", p99_alone,
                  "ns", seed});
  rows.push_back({"batch_colo", "shinjuku+wfq", "short_p99_colocated_ns",
                  p99_colo, "ns", seed});
  rows.push_back({"batch_colo", "shinjuku+wfq", "batch_cpu_share",
                  static_cast<double>(batch_runtime) / capacity, "fraction",
                  seed});
  return rows;
}

std::vector<BenchRow> RunLocalitySuite(uint64_t seed) {
  std::vector<BenchRow> rows;
  for (const bool hints : {true, false}) {
    SchbenchParams params;
    params.locality_hints = hints;
    RunSpec spec;
    spec.policies = {"locality"};
    spec.config.num_cores = 8;
    spec.config.seed = seed;
    spec.config.keep_trace = false;
    // One sixth of the run warms up unsampled, mirroring the 5s-of-30s
    // warmup convention at desk scale.
    spec.config.warmup_ns = 10'000'000;
    spec.workload = GenSchbench(params);
    RunOutput out = RunWorkload(spec);
    const std::string name = hints ? "schbench_hints" : "schbench_random";
    rows.push_back({name, "locality", "wake_p50_ns",
                    static_cast<double>(out.metrics.P50WakeNs()), "ns", seed});
    rows.push_back({name, "locality", "wake_p99_ns",
                    static_cast<double>(out.metrics.P99WakeNs()), "ns", seed});
  }
  return rows;
}

std::vector<BenchRow> RunUpgradeDemo(uint64_t seed, uint64_t upgrade_at_ns) {
  std::vector<BenchRow> rows;

  PolicyRegistry registry;
  PlainLockFactory locks;
  SimConfig config;
  config.num_cores = 4;
  config.seed = seed;
  config.keep_trace = false;

  auto v1 = std::make_shared<policies::WfqScheduler>(
      policies::WfqScheduler::Params{.num_cores = config.num_cores}, locks);
  CHECK(registry.Register(1, v1) == RegisterResult::kOk);
  Simulator sim(config, registry, {1});

  SchbenchParams schbench;
  schbench.rounds = 2000;
  sim.AddWorkload(GenSchbench(schbench));

  policies::WfqScheduler::Params v2p;
  v2p.num_cores = config.num_cores;
  v2p.version = 2;
  auto v2 = std::make_shared<policies::WfqScheduler>(v2p, locks);

  UpgradeOutcome outcome;
  uint64_t vr_before = 0;
  size_t tasks_before = 0;
  sim.ScheduleAction(upgrade_at_ns, [&] {
    vr_before = v1->TotalVruntimeNs();
    tasks_before = v1->AttachedTaskIds().size();
    outcome = registry.LiveUpgrade(1, v2);
  });

  Metrics metrics = sim.RunUntil(0);
  CHECK(outcome.ok);
  rows.push_back({"upgrade_demo", "wfq", "blackout_ns",
                  static_cast<double>(outcome.blackout_ns), "ns", seed});
  rows.push_back({"upgrade_demo", "wfq", "vruntime_before",
                  static_cast<double>(vr_before), "ns", seed});
  rows.push_back({"upgrade_demo", "wfq", "tasks_at_upgrade",
                  static_cast<double>(tasks_before), "count", seed});
  rows.push_back({"upgrade_demo", "wfq", "wake_p99_ns",
                  static_cast<double>(metrics.P99WakeNs()), "ns", seed});
  rows.push_back({"upgrade_demo", "wfq", "completed_tasks",
                  static_cast<double>(metrics.tasks.size()), "count", seed});
  return rows;
}

}  // namespace schedlab::bench
