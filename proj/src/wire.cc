// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/wire.h"

#include <ostream>
#include <sstream>

#include "schedlab/logging.h"

namespace schedlab::wire {

void ByteWriter::U16(uint16_t v) {
  U8(static_cast<uint8_t>(v));
  U8(static_cast<uint8_t>(v >> 8));
}

void ByteWriter::U32(uint32_t v) {
  for (int i = 0; i < 4; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::U64(uint64_t v) {
  for (int i = 0; i < 8; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::Bytes(std::span<const uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

uint8_t ByteReader::U8() {
  if (pos_ >= data_.size()) {
    ok_ = false;
    return 0;
  }
  return data_[pos_++];
}

uint16_t ByteReader::U16() {
  uint16_t v = U8();
  v |= static_cast<uint16_t>(U8()) << 8;
  return v;
}

uint32_t ByteReader::U32() {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(U8()) << (8 * i);
  return v;
}

uint64_t ByteReader::U64() {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(U8()) << (8 * i);
  return v;
}

std::vector<uint8_t> ByteReader::Bytes(size_t n) {
  if (pos_ + n > data_.size()) {
    ok_ = false;
    pos_ = data_.size();
    return {};
  }
  std::vector<uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
  pos_ += n;
  return out;
}

namespace {

void PutToken(ByteWriter& w, const std::optional<Schedulable>& token) {
  w.Bool(token.has_value());
  if (token.has_value()) {
    w.U64(token->task().id);
    w.U32(token->core().index);
    w.U64(token->serial());
  }
}

std::optional<Schedulable> GetToken(ByteReader& r) {
  if (!r.Bool()) return std::nullopt;
  TaskId task{r.U64()};
  CoreId core{r.U32()};
  uint64_t serial = r.U64();
  return TokenMinter::Mint(task, core, serial);
}

}  // namespace

std::vector<uint8_t> EncodeMessage(const SchedMessage& msg) {
  ByteWriter w;
  w.U8(static_cast<uint8_t>(msg.kind));
  w.Bool(msg.task.has_value());
  if (msg.task) w.U64(msg.task->id);
  w.Bool(msg.core.has_value());
  if (msg.core) w.U32(msg.core->index);
  w.U64(msg.runtime_delta_ns);
  w.I32(msg.nice);
  PutToken(w, msg.token);
  w.U64(msg.queue_id);
  w.U32(static_cast<uint32_t>(msg.hint.size()));
  w.Bytes(msg.hint);
  w.Bool(msg.queue_spec.has_value());
  if (msg.queue_spec) {
    w.U64(msg.queue_spec->queue_id);
    w.U8(static_cast<uint8_t>(msg.queue_spec->direction));
    w.U32(msg.queue_spec->capacity);
    w.U32(msg.queue_spec->record_width);
  }
  // Upgrade capsules are never recorded (no upgrades while recording);
  // only the tag survives for diagnostics.
  w.Bool(msg.capsule.has_value());
  if (msg.capsule) w.U64(msg.capsule->format_tag);
  return w.Take();
}

std::optional<SchedMessage> DecodeMessage(std::span<const uint8_t> data) {
  ByteReader r(data);
  SchedMessage m;
  m.kind = static_cast<MessageKind>(r.U8());
  if (r.Bool()) m.task = TaskId{r.U64()};
  if (r.Bool()) m.core = CoreId{r.U32()};
  m.runtime_delta_ns = r.U64();
  m.nice = r.I32();
  m.token = GetToken(r);
  m.queue_id = r.U64();
  const uint32_t hint_len = r.U32();
  m.hint = r.Bytes(hint_len);
  if (r.Bool()) {
    QueueSpec spec;
    spec.queue_id = r.U64();
    spec.direction = static_cast<HintDirection>(r.U8());
    spec.capacity = r.U32();
    spec.record_width = r.U32();
    // The policy's producer endpoint cannot be revived from bytes; the
    // replay engine hands the policy a fresh sink queue instead.
    if (spec.direction == HintDirection::kSchedToUser) {
      spec.queue = std::make_shared<HintQueue>(spec.queue_id, spec.direction,
                                               spec.capacity,
                                               spec.record_width);
    }
    m.queue_spec = std::move(spec);
  }
  if (r.Bool()) m.capsule = UpgradeCapsule(r.U64());
  if (!r.ok()) return std::nullopt;
  return m;
}

std::vector<uint8_t> EncodeResponse(const SchedResponse& resp) {
  ByteWriter w;
  w.U8(static_cast<uint8_t>(resp.kind));
  PutToken(w, resp.token);
  w.Bool(resp.core.has_value());
  if (resp.core) w.U32(resp.core->index);
  w.Bool(resp.balance.has_value());
  if (resp.balance) {
    w.U64(resp.balance->task.id);
    w.U32(resp.balance->source.index);
    w.U32(resp.balance->destination.index);
  }
  w.Bool(resp.capsule.has_value());
  if (resp.capsule) w.U64(resp.capsule->format_tag);
  w.Bool(resp.flag);
  return w.Take();
}

std::string DescribeResponse(std::span<const uint8_t> encoded) {
  ByteReader r(encoded);
  std::ostringstream out;
  const auto kind = static_cast<ResponseKind>(r.U8());
  switch (kind) {
    case ResponseKind::kAck:
      out << "ack";
      break;
    case ResponseKind::kPick:
      out << "pick";
      break;
    case ResponseKind::kCoreSelected:
      out << "core";
      break;
    case ResponseKind::kTokenBack:
      out << "token_back";
      break;
    case ResponseKind::kTick:
      out << "tick";
      break;
    case ResponseKind::kBalance:
      out << "balance";
      break;
    case ResponseKind::kQueueDecision:
      out << "queue_decision";
      break;
    case ResponseKind::kCapsule:
      out << "capsule";
      break;
    case ResponseKind::kInit:
      out << "init";
      break;
    default:
      out << "kind(" << static_cast<int>(kind) << ")";
      break;
  }
  if (r.Bool()) {
    uint64_t task = r.U64();
    uint32_t core = r.U32();
    uint64_t serial = r.U64();
    out << " token{task=" << task << " core=" << core << " serial=" << serial
        << "}";
  }
  if (r.Bool()) out << " core=" << r.U32();
  if (r.Bool()) {
    out << " balance{task=" << r.U64();
    out << " src=" << r.U32();
    out << " dst=" << r.U32() << "}";
  }
  if (r.Bool()) out << " capsule_tag=" << r.U64();
  if (r.Bool()) out << " flag";
  if (!r.ok()) out << " <truncated>";
  return out.str();
}

void WriteLogHeader(std::ostream& out, const LogHeader& header) {
  ByteWriter w;
  w.U32(kLogMagic);
  w.U16(kLogVersion);
  w.U16(0);
  w.U32(header.num_cores);
  w.U64(header.seed);
  w.U32(static_cast<uint32_t>(header.policy_name.size()));
  w.Bytes(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(header.policy_name.data()),
      header.policy_name.size()));
  const auto& buf = w.buffer();
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

void WriteLogEvent(std::ostream& out, const RecordEvent& event) {
  ByteWriter w;
  w.U64(event.seq);
  w.U32(event.worker);
  w.U8(static_cast<uint8_t>(event.kind));
  w.U32(event.policy);
  w.U64(event.lock_id);
  w.U64(event.queue_id);
  w.U32(static_cast<uint32_t>(event.payload.size()));
  w.Bytes(event.payload);

  ByteWriter framed;
  framed.U32(static_cast<uint32_t>(w.buffer().size()));
  framed.Bytes(w.buffer());
  const auto& buf = framed.buffer();
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

}  // namespace schedlab::wire
