// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

// Command-line front end: run workloads against the pluggable policies,
// record and replay policy interactions, demonstrate live upgrade, and
// reproduce the benchmark suites.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "schedlab/bench.h"
#include "schedlab/policies/wfq.h"
#include "schedlab/recorder.h"
#include "schedlab/registry.h"
#include "schedlab/replay.h"
#include "schedlab/sim.h"
#include "schedlab/workload.h"

namespace {

using namespace schedlab;

struct RunArgs {
  std::string workload_file;
  std::vector<std::string> policies{"wfq"};
  std::string mode = "virtual";
  uint64_t seed = 1;
  uint32_t cores = 4;
  uint64_t tick_ns = 1'000'000;
  uint64_t t_end_ns = 0;
  std::string out_csv;
};

SimConfig MakeConfig(const RunArgs& args) {
  SimConfig config;
  config.num_cores = args.cores;
  config.tick_period_ns = args.tick_ns;
  config.seed = args.seed;
  config.mode =
      args.mode == "concurrent" ? SimMode::kConcurrent : SimMode::kVirtualTime;
  return config;
}

int EmitMetrics(const RunArgs& args, const Metrics& metrics,
                const std::string& workload_name) {
  std::vector<bench::BenchRow> rows;
  auto add = [&](const std::string& metric, double value,
                 const std::string& unit) {
    rows.push_back({workload_name, args.policies.front(), metric, value, unit,
                    args.seed});
  };
  add("duration_ns", static_cast<double>(metrics.duration_ns), "ns");
  add("wake_p50_ns", static_cast<double>(metrics.P50WakeNs()), "ns");
  add("wake_p99_ns", static_cast<double>(metrics.P99WakeNs()), "ns");
  add("completed_tasks", static_cast<double>([&] {
        size_t n = 0;
        for (const auto& [id, t] : metrics.tasks) n += t.completed ? 1 : 0;
        return n;
      }()),
      "count");
  add("dispatches", static_cast<double>(metrics.counters.dispatches_ok),
      "count");
  add("pnt_errs", static_cast<double>(metrics.counters.pnt_errs), "count");
  for (const auto& [id, t] : metrics.tasks) {
    rows.push_back({workload_name, args.policies.front(),
                    "completion_task_" + std::to_string(id),
                    static_cast<double>(t.completion_ns), "ns", args.seed});
    rows.push_back({workload_name, args.policies.front(),
                    "cpu_share_task_" + std::to_string(id),
                    metrics.duration_ns == 0
                        ? 0.0
                        : static_cast<double>(t.runtime_ns) /
                              static_cast<double>(metrics.duration_ns),
                    "fraction", args.seed});
  }
  const std::string csv = bench::ToCsv(rows);
  if (args.out_csv.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(args.out_csv, std::ios::trunc);
    if (!out.is_open()) {
      std::cerr << "cannot write " << args.out_csv << "\n";
      return 1;
    }
    out << csv;
    std::cout << "wrote " << args.out_csv << "\n";
  }

  if (!metrics.counters.AffineSafetyHolds()) {
    std::cerr << "invariant violation: affine token safety\n";
    return 1;
  }
  if (!metrics.RuntimeConserved()) {
    std::cerr << "invariant violation: runtime accounting\n";
    return 1;
  }
  return 0;
}

int CmdRun(const RunArgs& args) {
  bench::RunSpec spec;
  spec.policies = args.policies;
  spec.config = MakeConfig(args);
  spec.workload = LoadWorkloadFile(args.workload_file);
  spec.t_end_ns = args.t_end_ns;
  bench::RunOutput out = bench::RunWorkload(spec);
  const std::string name =
      std::filesystem::path(args.workload_file).stem().string();
  return EmitMetrics(args, out.metrics, name);
}

int CmdRecord(const RunArgs& args, const std::string& log_path) {
  if (args.policies.size() != 1) {
    std::cerr << "record supports a single policy per run\n";
    return 1;
  }
  PolicyRegistry registry;
  Recorder recorder(log_path,
                    LogHeader{args.policies.front(), args.cores, args.seed});
  RecordingLockFactory locks(recorder, 1);
  auto policy =
      bench::MakePolicy(args.policies.front(), args.cores, args.seed, locks);
  if (registry.Register(1, policy) != RegisterResult::kOk) return 1;

  SimConfig config = MakeConfig(args);
  Simulator sim(config, registry, {1});
  sim.SetRecorder(&recorder);
  sim.AddWorkload(LoadWorkloadFile(args.workload_file));
  Metrics metrics = sim.RunUntil(args.t_end_ns);
  recorder.Finish();
  std::cout << "recorded " << recorder.events_recorded() << " events, "
            << recorder.drops() << " drops -> " << log_path << "\n";
  return EmitMetrics(args, metrics,
                     std::filesystem::path(args.workload_file).stem().string());
}

int CmdReplay(const std::string& log_path, const std::string& report_path) {
  LoadedLog log = LoadLog(log_path);
  ReplayLockFactory locks(log.LockTurnsFor(1));
  auto policy = bench::MakePolicy(log.header.policy_name, log.header.num_cores,
                                  log.header.seed, locks);
  ReplayReport report = Replay(log, *policy, locks);
  const std::string rendered = report.ToString();
  if (report_path.empty()) {
    std::cout << rendered;
  } else {
    std::ofstream out(report_path, std::ios::trunc);
    out << rendered;
    std::cout << "wrote " << report_path << "\n";
  }
  if (report.refused_drops_present) {
    std::cerr << "replay refused: recording dropped events\n";
    return 1;
  }
  return report.mismatches.empty() && !report.deadlock ? 0 : 1;
}

int CmdUpgradeDemo(uint64_t at_ns, uint64_t seed) {
  auto rows = bench::RunUpgradeDemo(seed, at_ns);
  std::cout << bench::ToCsv(rows);
  return 0;
}

int CmdBench(const std::string& suite, uint64_t seed,
             const std::string& out_dir, bool full_scale) {
  std::vector<bench::BenchRow> rows;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const bool all = suite == "all";
  if (all || suite == "pingpong") {
    // Desk scale trims the full million-message exchange by 10x.
    const uint64_t messages =
        full_scale ? 1'000'000 : bench::kDeskPingPongMessages;
    auto r = bench::RunPingPongSuite(seed, messages);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (all || suite == "fairness") {
    auto r = bench::RunFairnessSuiteBench(seed);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (all || suite == "bimodal") {
    auto r = bench::RunBimodalSuite(seed, {0.1, 0.4, 0.8}, out_dir);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (all || suite == "batch") {
    auto r = bench::RunBatchColoSuite(seed);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (all || suite == "locality") {
    auto r = bench::RunLocalitySuite(seed);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (all || suite == "upgrade") {
    auto r = bench::RunUpgradeDemo(seed, 5'000'000);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (rows.empty()) {
    std::cerr << "unknown suite: " << suite << "\n";
    return 1;
  }
  const std::string csv = bench::ToCsv(rows);
  if (out_dir.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_dir + "/bench.csv", std::ios::trunc);
    out << csv;
    std::cout << "wrote " << out_dir << "/bench.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"schedlab: pluggable-scheduler simulator and benchmark harness"};
  app.require_subcommand(1);

  RunArgs args;
  std::string log_path = "schedlab.log";
  std::string report_path;
  std::string suite = "all";
  std::string out_dir;
  bool full_scale = false;
  uint64_t upgrade_at = 5'000'000;

  auto add_run_flags = [&](CLI::App* cmd, bool needs_workload) {
    if (needs_workload) {
      cmd->add_option("--workload", args.workload_file, "workload file")
          ->required();
    }
    cmd->add_option("--policy", args.policies,
                    "policy names in priority order (wfq, wfq-v2, shinjuku, "
                    "locality, arbiter)");
    cmd->add_option("--mode", args.mode, "virtual|concurrent");
    cmd->add_option("--seed", args.seed, "simulation seed");
    cmd->add_option("--cores", args.cores, "simulated core count");
    cmd->add_option("--tick-ns", args.tick_ns, "timer tick period");
    cmd->add_option("--until-ns", args.t_end_ns,
                    "virtual end time (0 = run to completion)");
    cmd->add_option("--out", args.out_csv, "CSV output path");
  };

  CLI::App* run = app.add_subcommand("run", "run a workload file");
  add_run_flags(run, true);

  CLI::App* record =
      app.add_subcommand("record", "run while recording policy interactions");
  add_run_flags(record, true);
  record->add_option("--log", log_path, "record log path");

  CLI::App* replay =
      app.add_subcommand("replay", "replay a recorded log against the policy");
  replay->add_option("--log", log_path, "record log path")->required();
  replay->add_option("--report", report_path, "replay report path");

  CLI::App* upgrade =
      app.add_subcommand("upgrade-demo", "live-upgrade WFQ mid-benchmark");
  upgrade->add_option("--at", upgrade_at, "virtual time of the upgrade (ns)");
  upgrade->add_option("--seed", args.seed, "simulation seed");

  CLI::App* bench_cmd = app.add_subcommand("bench", "run benchmark suites");
  bench_cmd->add_option(
      "--suite", suite, "all|pingpong|fairness|bimodal|batch|locality|upgrade");
  bench_cmd->add_option("--seed", args.seed, "simulation seed");
  bench_cmd->add_option("--out", out_dir, "output directory for CSV and plots");
  bench_cmd->add_flag("--full-scale", full_scale,
                      "restore full-scale message counts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return CmdRun(args);
    if (record->parsed()) return CmdRecord(args, log_path);
    if (replay->parsed()) return CmdReplay(log_path, report_path);
    if (upgrade->parsed()) return CmdUpgradeDemo(upgrade_at, args.seed);
    if (bench_cmd->parsed()) {
      return CmdBench(suite, args.seed, out_dir, full_scale);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
