// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_WORKER_CONTEXT_H_
#define SCHEDLAB_WORKER_CONTEXT_H_

#include "schedlab/types.h"

namespace schedlab {

// Identity of the calling worker thread, tagged onto recorded events.
// Core workers set their core index; everything else runs as the
// control worker.
WorkerId CurrentWorker();
void SetCurrentWorker(WorkerId worker);

class ScopedWorker {
 public:
  explicit ScopedWorker(WorkerId worker) : saved_(CurrentWorker()) {
    SetCurrentWorker(worker);
  }
  ~ScopedWorker() { SetCurrentWorker(saved_); }
  ScopedWorker(const ScopedWorker&) = delete;
  ScopedWorker& operator=(const ScopedWorker&) = delete;

 private:
  WorkerId saved_;
};

}  // namespace schedlab

#endif  // SCHEDLAB_WORKER_CONTEXT_H_
