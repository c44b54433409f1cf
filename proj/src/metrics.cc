// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "schedlab/logging.h"

namespace schedlab {

uint64_t Percentile(std::vector<uint64_t> samples, double p) {
  if (samples.empty()) return 0;
  CHECK_GT(p, 0.0);
  CHECK_LE(p, 100.0);
  std::sort(samples.begin(), samples.end());
  const size_t rank = static_cast<size_t>(
      std::ceil(p / 100.0 * static_cast<double>(samples.size())));
  return samples[rank - 1];
}

uint64_t Metrics::P50WakeNs() const { return Percentile(wake_latencies, 50.0); }

uint64_t Metrics::P99WakeNs() const { return Percentile(wake_latencies, 99.0); }

uint64_t Metrics::TotalTaskRuntimeNs() const {
  uint64_t total = 0;
  for (const auto& [id, t] : tasks) total += t.runtime_ns;
  return total;
}

uint64_t Metrics::TotalCoreBusyNs() const {
  return std::accumulate(core_busy_ns.begin(), core_busy_ns.end(),
                         uint64_t{0});
}

std::string Metrics::Canonical() const {
  std::ostringstream out;
  out << "duration=" << duration_ns << "\n";
  for (const auto& [id, t] : tasks) {
    out << "task " << id << " completed=" << t.completed
        << " completion=" << t.completion_ns << " runtime=" << t.runtime_ns
        << " dispatches=" << t.dispatches << "\n";
  }
  for (size_t i = 0; i < core_busy_ns.size(); ++i) {
    out << "core " << i << " busy=" << core_busy_ns[i] << "\n";
  }
  for (int i = 0; i < kNumMessageKinds; ++i) {
    out << "msg " << MessageKindName(static_cast<MessageKind>(i)) << "="
        << message_counts[static_cast<size_t>(i)] << "\n";
  }
  out << "wake_p50=" << P50WakeNs() << " wake_p99=" << P99WakeNs() << "\n";
  out << "samples=" << LatencySampleCount() << "\n";
  out << "ok=" << counters.dispatches_ok << " wrong=" << counters.rejected_wrong_core
      << " stale=" << counters.rejected_stale << " pnt=" << counters.pnt_errs
      << "\n";
  return out.str();
}

}  // namespace schedlab
