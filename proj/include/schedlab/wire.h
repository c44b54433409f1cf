// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_WIRE_H_
#define SCHEDLAB_WIRE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "schedlab/message.h"
#include "schedlab/recorder.h"

namespace schedlab::wire {

// Little-endian, length-prefixed binary encoding used for the record
// log and for byte-exact response comparison during replay.

class ByteWriter {
 public:
  void U8(uint8_t v) { buf_.push_back(v); }
  void U16(uint16_t v);
  void U32(uint32_t v);
  void U64(uint64_t v);
  void I32(int32_t v) { U32(static_cast<uint32_t>(v)); }
  void Bool(bool v) { U8(v ? 1 : 0); }
  void Bytes(std::span<const uint8_t> bytes);

  const std::vector<uint8_t>& buffer() const { return buf_; }
  std::vector<uint8_t> Take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t U8();
  uint16_t U16();
  uint32_t U32();
  uint64_t U64();
  int32_t I32() { return static_cast<int32_t>(U32()); }
  bool Bool() { return U8() != 0; }
  std::vector<uint8_t> Bytes(size_t n);

  bool ok() const { return ok_; }
  size_t pos() const { return pos_; }
  bool AtEnd() const { return pos_ == data_.size(); }

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  bool ok_ = true;
};

std::vector<uint8_t> EncodeMessage(const SchedMessage& msg);
// Rebuilds a message, minting any embedded token. Only the replay
// engine has business calling this.
std::optional<SchedMessage> DecodeMessage(std::span<const uint8_t> data);

std::vector<uint8_t> EncodeResponse(const SchedResponse& resp);
// Human-readable rendering of an encoded response, for mismatch reports.
std::string DescribeResponse(std::span<const uint8_t> encoded);

// Record log framing.
inline constexpr uint32_t kLogMagic = 0x4c524c53u;  // "SLRL"
inline constexpr uint16_t kLogVersion = 1;

void WriteLogHeader(std::ostream& out, const LogHeader& header);
void WriteLogEvent(std::ostream& out, const RecordEvent& event);

}  // namespace schedlab::wire

#endif  // SCHEDLAB_WIRE_H_
