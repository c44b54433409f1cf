// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_CAPSULE_H_
#define SCHEDLAB_CAPSULE_H_

#include <cstdint>
#include <string_view>
#include <vector>

#include "schedlab/hints.h"
#include "schedlab/token.h"

namespace schedlab {

// State container handed from an outgoing policy instance to its
// replacement during a live upgrade. The byte payload is entirely
// policy-defined; live tokens and surviving hint queues ride alongside
// as real objects so ownership transfers without duplication.
//
// An importing policy must declare the same format tag as the exporter
// or the upgrade aborts before any state moves.
struct UpgradeCapsule {
  uint64_t format_tag = 0;
  std::vector<uint8_t> bytes;
  std::vector<Schedulable> tokens;
  std::vector<QueueHandle> queues;

  UpgradeCapsule() = default;
  explicit UpgradeCapsule(uint64_t tag) : format_tag(tag) {}
  UpgradeCapsule(UpgradeCapsule&&) = default;
  UpgradeCapsule& operator=(UpgradeCapsule&&) = default;
  UpgradeCapsule(const UpgradeCapsule&) = delete;
  UpgradeCapsule& operator=(const UpgradeCapsule&) = delete;
};

// FNV-1a hash of a policy-declared capsule version string. Two policy
// builds interchange state only when their declared strings collide,
// which in practice means they declared the same one.
constexpr uint64_t CapsuleTag(std::string_view version) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : version) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace schedlab

#endif  // SCHEDLAB_CAPSULE_H_
