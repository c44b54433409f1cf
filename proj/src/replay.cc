// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/replay.h"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "schedlab/logging.h"
#include "schedlab/wire.h"
#include "schedlab/worker_context.h"

namespace schedlab {

// ---------------------------------------------------------------------------
// Log loading

LoadedLog LoadLog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw CorruptLog(0, "cannot open");
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());

  LoadedLog log;
  wire::ByteReader header(raw);
  if (header.U32() != wire::kLogMagic) throw CorruptLog(0, "bad magic");
  if (header.U16() != wire::kLogVersion) throw CorruptLog(4, "bad version");
  header.U16();  // reserved
  log.header.num_cores = header.U32();
  log.header.seed = header.U64();
  const uint32_t name_len = header.U32();
  std::vector<uint8_t> name = header.Bytes(name_len);
  if (!header.ok()) throw CorruptLog(raw.size(), "truncated header");
  log.header.policy_name.assign(name.begin(), name.end());

  size_t offset = header.pos();
  while (offset < raw.size()) {
    wire::ByteReader frame(
        std::span<const uint8_t>(raw.data() + offset, raw.size() - offset));
    const uint32_t body_len = frame.U32();
    if (!frame.ok() || offset + 4 + body_len > raw.size()) {
      throw CorruptLog(offset, "truncated record");
    }
    wire::ByteReader body(
        std::span<const uint8_t>(raw.data() + offset + 4, body_len));
    RecordEvent e;
    e.seq = body.U64();
    e.worker = body.U32();
    e.kind = static_cast<RecordKind>(body.U8());
    e.policy = body.U32();
    e.lock_id = body.U64();
    e.queue_id = body.U64();
    const uint32_t payload_len = body.U32();
    e.payload = body.Bytes(payload_len);
    if (!body.ok() || !body.AtEnd()) throw CorruptLog(offset, "bad record body");
    if (e.kind == RecordKind::kMeta) {
      wire::ByteReader meta(e.payload);
      log.drops = meta.U64();
    } else {
      log.events.push_back(std::move(e));
    }
    offset += 4 + body_len;
  }
  return log;
}

std::vector<PolicyId> LoadedLog::Policies() const {
  std::vector<PolicyId> out;
  for (const RecordEvent& e : events) {
    if (e.kind != RecordKind::kCall) continue;
    if (std::find(out.begin(), out.end(), e.policy) == out.end()) {
      out.push_back(e.policy);
    }
  }
  return out;
}

std::map<uint64_t, std::vector<WorkerId>> LoadedLog::LockTurnsFor(
    PolicyId policy) const {
  std::map<uint64_t, std::vector<WorkerId>> turns;
  for (const RecordEvent& e : events) {
    if (e.policy != policy) continue;
    if (e.kind == RecordKind::kLockCreate) {
      turns.try_emplace(e.lock_id);
    } else if (e.kind == RecordKind::kLockAcquire) {
      turns[e.lock_id].push_back(e.worker);
    }
  }
  return turns;
}

std::string ReplayReport::ToString() const {
  std::ostringstream out;
  out << "replayed=" << replayed << "\n";
  out << "mismatches=" << mismatches.size() << "\n";
  for (const ReplayMismatch& m : mismatches) {
    out << "  seq=" << m.seq << " expected={" << m.expected << "} actual={"
        << m.actual << "}\n";
  }
  out << "lock_order_stalls=" << lock_order_stalls << "\n";
  out << "drops=" << drops << "\n";
  out << "refused=" << (refused_drops_present ? 1 : 0) << "\n";
  out << "deadlock=" << (deadlock ? 1 : 0) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Replay proper

namespace {

struct CallJob {
  uint64_t call_seq = 0;
  uint64_t response_seq = 0;
  WorkerId worker = kControlWorker;
  size_t lane_ordinal = 0;  // position within this worker's call stream
  const std::vector<uint8_t>* message = nullptr;
  const std::vector<uint8_t>* expected = nullptr;
};

// Serializes calls that share a recorded worker id: a kernel thread was
// sequential, so its replay threads must be too.
struct WorkerLane {
  std::mutex mu;
  std::condition_variable cv;
  size_t next = 0;
};

}  // namespace

ReplayReport Replay(const LoadedLog& log, SchedulerPolicy& policy,
                    ReplayLockFactory& locks, ReplayOptions options) {
  ReplayReport report;
  report.drops = log.drops;
  if (log.drops > 0) {
    // A gappy log cannot vouch for order; refuse rather than diverge.
    report.refused_drops_present = true;
    return report;
  }

  PolicyId target = options.policy;
  if (target == 0) {
    std::vector<PolicyId> present = log.Policies();
    CHECK_EQ(present.size(), 1u);
    target = present.front();
  }

  // Pair calls with their responses (same worker, next in sequence).
  std::vector<CallJob> jobs;
  std::unordered_map<WorkerId, size_t> lane_counts;
  {
    std::unordered_map<WorkerId, std::vector<size_t>> open_calls;
    for (size_t i = 0; i < log.events.size(); ++i) {
      const RecordEvent& e = log.events[i];
      if (e.policy != target) continue;
      if (e.kind == RecordKind::kCall) {
        open_calls[e.worker].push_back(jobs.size());
        CallJob job;
        job.call_seq = e.seq;
        job.worker = e.worker;
        job.lane_ordinal = lane_counts[e.worker]++;
        job.message = &e.payload;
        jobs.push_back(job);
      } else if (e.kind == RecordKind::kResponse) {
        auto& open = open_calls[e.worker];
        CHECK(!open.empty());  // log invariant: one response per call
        CallJob& job = jobs[open.front()];
        open.erase(open.begin());
        job.response_seq = e.seq;
        job.expected = &e.payload;
      }
    }
    for (const auto& [worker, open] : open_calls) CHECK(open.empty());
  }

  std::unordered_map<WorkerId, WorkerLane> lanes;
  for (const auto& [worker, count] : lane_counts) lanes[worker];

  // Workers are detached; this latch is their only teardown handshake,
  // so the bump must be the last shared-state touch a worker makes.
  struct Latch {
    std::mutex mu;
    std::condition_variable cv;
    size_t done = 0;

    size_t Done() {
      std::lock_guard<std::mutex> lock(mu);
      return done;
    }
    void Bump() {
      {
        std::lock_guard<std::mutex> lock(mu);
        ++done;
      }
      cv.notify_all();
    }
    void WaitFor(size_t n) {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return done >= n; });
    }
  };
  auto latch = std::make_shared<Latch>();

  std::mutex report_mu;
  std::atomic<bool> cancelled{false};

  auto run_job = [&](const CallJob& job) {
    SetCurrentWorker(job.worker);
    WorkerLane& lane = lanes.find(job.worker)->second;  // populated above
    {
      std::unique_lock<std::mutex> lock(lane.mu);
      lane.cv.wait(lock, [&] {
        return lane.next == job.lane_ordinal ||
               cancelled.load(std::memory_order_relaxed);
      });
    }

    std::string actual;
    std::optional<SchedMessage> msg = wire::DecodeMessage(*job.message);
    if (!msg.has_value()) {
      actual = "undecodable message";
    } else {
      try {
        SchedResponse resp = PolicyCall(policy, std::move(*msg));
        const std::vector<uint8_t> encoded = wire::EncodeResponse(resp);
        if (encoded != *job.expected) actual = wire::DescribeResponse(encoded);
      } catch (const PolicyPanic& e) {
        actual = std::string("panic: ") + e.what();
      }
    }
    if (!actual.empty()) {
      std::lock_guard<std::mutex> lock(report_mu);
      report.mismatches.push_back(ReplayMismatch{
          job.response_seq, wire::DescribeResponse(*job.expected), actual});
    }

    {
      std::lock_guard<std::mutex> lock(lane.mu);
      lane.next = job.lane_ordinal + 1;
    }
    lane.cv.notify_all();
  };

  auto cancel_all = [&] {
    report.lock_order_stalls++;
    report.deadlock = true;
    cancelled.store(true);
    locks.Cancel();
    for (auto& [worker, lane] : lanes) lane.cv.notify_all();
  };

  // One detached replay worker per recorded call, spawned in log order
  // through a bounded window; a finished worker frees a slot. The
  // watchdog first widens the window (a long ordering dependency looks
  // like a stall from here), then declares deadlock and demotes the
  // turn locks so the run drains instead of hanging.
  size_t spawned = 0;
  size_t window = options.window;
  for (const CallJob& job : jobs) {
    auto stall_started = std::chrono::steady_clock::now();
    size_t last_done = latch->Done();
    while (spawned - latch->Done() >= window &&
           !cancelled.load(std::memory_order_relaxed)) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
      const size_t done = latch->Done();
      if (done != last_done) {
        last_done = done;
        stall_started = std::chrono::steady_clock::now();
        continue;
      }
      if (std::chrono::steady_clock::now() - stall_started >
          options.stall_timeout) {
        if (window < jobs.size()) {
          window *= 2;
          break;
        }
        cancel_all();
      }
    }
    std::thread([latch, &run_job, &job] {
      run_job(job);
      latch->Bump();
    }).detach();
    ++spawned;
  }

  // Drain. Workers may be parked on turn locks; watch for a wedge.
  {
    size_t last_done = latch->Done();
    while (latch->Done() < jobs.size()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      const size_t done = latch->Done();
      if (done != last_done) {
        last_done = done;
        continue;
      }
      const auto stall_started = std::chrono::steady_clock::now();
      while (latch->Done() == last_done &&
             std::chrono::steady_clock::now() - stall_started <
                 options.stall_timeout) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
      if (latch->Done() == last_done && !cancelled.load()) cancel_all();
    }
    // Cancelled workers still finish; wait out the stragglers.
    latch->WaitFor(jobs.size());
  }

  report.replayed = latch->Done();
  std::sort(report.mismatches.begin(), report.mismatches.end(),
            [](const ReplayMismatch& a, const ReplayMismatch& b) {
              return a.seq < b.seq;
            });
  return report;
}

}  // namespace schedlab
