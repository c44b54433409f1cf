// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_WORKLOAD_H_
#define SCHEDLAB_WORKLOAD_H_

#include <iosfwd>
#include <string>

#include "schedlab/sim.h"

namespace schedlab {

// Workload description files are plain text, one directive per line:
//
//   # comment
//   task id=1 nice=0 arrive=0 policy=1 [pin=2] [cohort=1]
//        program=compute:1000000,block:5,signal:6,yield,exit
//   migrate at=5000000 task=1 to=3
//   hint at=1000 policy=1 kind=locality task=9 group=2
//   hint at=1000 policy=1 kind=arbiter_request app=1 cores=3
//   hint at=1000 policy=1 kind=arbiter_bind app=1 task=7
//
// Program steps run in order; `block`/`signal` name counting events
// shared between tasks. Hints are encoded into the named policy's
// user->scheduler record format.

Workload ParseWorkload(std::istream& in);
Workload LoadWorkloadFile(const std::string& path);

std::string FormatWorkload(const Workload& workload);
void SaveWorkloadFile(const std::string& path, const Workload& workload);

}  // namespace schedlab

#endif  // SCHEDLAB_WORKLOAD_H_
