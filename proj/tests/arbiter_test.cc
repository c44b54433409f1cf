// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/policies/arbiter.h"

#include <memory>
#include <random>
#include <set>

#include "doctest.h"
#include "schedlab/hints.h"
#include "schedlab/token.h"

namespace schedlab {
namespace {

using policies::ArbiterReclaim;
using policies::ArbiterRequest;
using policies::ArbiterScheduler;

struct ArbiterFixture {
  explicit ArbiterFixture(uint32_t cores, uint32_t reserved = 1) {
    ArbiterScheduler::Params params;
    params.num_cores = cores;
    params.reserved_cores = reserved;
    policy = std::make_unique<ArbiterScheduler>(params, locks);
    outbox = std::make_shared<HintQueue>(2, HintDirection::kSchedToUser, 64,
                                         ArbiterReclaim::kWireSize);
    QueueSpec spec;
    spec.queue_id = 2;
    spec.direction = HintDirection::kSchedToUser;
    spec.capacity = 64;
    spec.record_width = ArbiterReclaim::kWireSize;
    spec.queue = outbox;
    REQUIRE(policy->RegisterQueue(spec));
  }

  void Request(uint32_t app, uint32_t cores) {
    ArbiterRequest req;
    req.kind = ArbiterRequest::kRequestCores;
    req.app = app;
    req.arg = cores;
    policy->ParseHint(1, req.Encode());
  }

  void Bind(uint32_t app, uint64_t task) {
    ArbiterRequest req;
    req.kind = ArbiterRequest::kBindTask;
    req.app = app;
    req.arg = task;
    policy->ParseHint(1, req.Encode());
  }

  std::vector<ArbiterReclaim> DrainReclaims() {
    std::vector<ArbiterReclaim> out;
    while (auto rec = outbox->Pop()) {
      out.push_back(*ArbiterReclaim::Decode(*rec));
    }
    return out;
  }

  PlainLockFactory locks;
  std::unique_ptr<ArbiterScheduler> policy;
  QueueHandle outbox;
};

TEST_CASE("a request within supply is granted in full") {
  ArbiterFixture f(8, 1);  // 7 grantable
  f.Request(1, 3);
  CHECK(f.policy->GrantsOf(1).size() == 3);
  CHECK(f.DrainReclaims().empty());
}

// Fair-share arithmetic oracle: A holds 5 of 7, B requests 4; shares
// 3.5 round to 3 for the earlier requester and 4 for the later, so two
// cores move from A to B.
TEST_CASE("oversubscription reclaims down to fair shares") {
  ArbiterFixture f(8, 1);
  f.Request(1, 5);
  CHECK(f.policy->GrantsOf(1).size() == 5);
  f.Request(2, 4);
  CHECK(f.policy->GrantsOf(1).size() == 3);
  CHECK(f.policy->GrantsOf(2).size() == 4);
  std::vector<ArbiterReclaim> reclaims = f.DrainReclaims();
  CHECK(reclaims.size() == 2);
  for (const ArbiterReclaim& r : reclaims) CHECK(r.app == 1);
}

TEST_CASE("a zero request reclaims every core of the app") {
  ArbiterFixture f(8, 1);
  f.Request(1, 4);
  CHECK(f.policy->GrantsOf(1).size() == 4);
  f.Request(1, 0);
  CHECK(f.policy->GrantsOf(1).empty());
  CHECK(f.DrainReclaims().size() == 4);
}

TEST_CASE("requests are capped at the grantable supply") {
  ArbiterFixture f(4, 1);  // 3 grantable
  f.Request(1, 10);
  CHECK(f.policy->GrantsOf(1).size() == 3);
}

TEST_CASE("bound tasks place onto their app's granted cores") {
  ArbiterFixture f(4, 1);
  f.Request(1, 2);
  f.Bind(1, 42);
  const CoreId placed = f.policy->SelectTaskRq(TaskId{42}, 0);
  const std::vector<uint32_t> grants = f.policy->GrantsOf(1);
  CHECK(std::find(grants.begin(), grants.end(), placed.index) != grants.end());
}

TEST_CASE("unbound tasks stay on reserved cores") {
  ArbiterFixture f(4, 2);
  f.Request(1, 2);
  const CoreId placed = f.policy->SelectTaskRq(TaskId{7}, 0);
  CHECK(placed.index < 2);
}

// Randomized safety property: across arbitrary request sequences no
// core is ever double-granted, grants never exceed requests, and the
// total never exceeds the grantable supply.
TEST_CASE("randomized request churn preserves the grant invariants") {
  ArbiterFixture f(8, 1);
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<uint32_t> pick_app(1, 4);
  std::uniform_int_distribution<uint32_t> pick_cores(0, 7);
  for (int step = 0; step < 10'000; ++step) {
    f.Request(pick_app(rng), pick_cores(rng));
    std::set<uint32_t> owned;
    size_t total = 0;
    for (uint32_t app = 1; app <= 4; ++app) {
      const std::vector<uint32_t> grants = f.policy->GrantsOf(app);
      CHECK(grants.size() <= f.policy->RequestOf(app));
      for (uint32_t core : grants) {
        CHECK(core >= 1);  // never a reserved core
        CHECK(owned.insert(core).second);  // never double-granted
        CHECK(f.policy->OwnerOf(CoreId{core}) == app);
      }
      total += grants.size();
    }
    CHECK(total <= f.policy->grantable_cores());
  }
}

TEST_CASE("reclaim notices survive in FIFO order on the down queue") {
  ArbiterFixture f(8, 1);
  f.Request(1, 7);
  f.Request(2, 7);  // forces reclaims from app 1
  std::vector<ArbiterReclaim> reclaims = f.DrainReclaims();
  REQUIRE(reclaims.size() >= 3);
  // Newest grants are reclaimed first: strictly descending core ids.
  for (size_t i = 0; i + 1 < reclaims.size(); ++i) {
    CHECK(reclaims[i].core > reclaims[i + 1].core);
  }
}

}  // namespace
}  // namespace schedlab
