#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "qesgd/problems.hpp"

namespace qesgd {

// Dense messages carry a 16-byte header
//   tag:u8 | flags:u8 (0) | sender:u16 | round:u32 | dim:u64
// followed by dim little-endian binary32 values. BroadcastZ is the codec
// frame sequence on its own (it starts with the codec magic 0x51).
inline constexpr std::size_t kMessageHeaderSize = 16;
inline constexpr std::uint16_t kServerSender = 0xffff;

enum class MessageTag : std::uint8_t {
  kPushGradient = 0x01,
  kBroadcastEpochAnchor = 0x03,
};

// Un-averaged gradient sum over the worker's local batch. Values are kept in
// binary64 in memory; the wire form is binary32.
struct PushGradient {
  std::uint32_t worker_id = 0;
  std::uint64_t round = 0;
  Vector g;
};

// Encoded quantized displacement z (one or more codec frames).
struct BroadcastZ {
  std::uint64_t round = 0;
  std::vector<std::uint8_t> frames;
};

struct BroadcastEpochAnchor {
  std::uint64_t epoch = 0;
  Vector w;
};

using Message = std::variant<PushGradient, BroadcastZ, BroadcastEpochAnchor>;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t dense_message_size(std::size_t dim);
std::size_t wire_size(const Message& m);
std::vector<std::uint8_t> encode_message(const Message& m);
// Dense payloads come back as the binary32 values widened to binary64.
// BroadcastZ has no round on the wire; the caller supplies it.
Message decode_message(std::span<const std::uint8_t> bytes, std::uint64_t z_round = 0);

enum class Direction : std::uint8_t { kUplink = 0, kDownlink = 1 };

struct RoundTraffic {
  std::uint64_t round = 0;
  std::uint64_t uplink = 0;
  std::uint64_t downlink = 0;
};

// Cumulative byte counters plus a per-round breakdown. Never reset.
class ByteMeter {
 public:
  void record(Direction dir, std::uint64_t round, std::uint64_t bytes);

  std::uint64_t uplink_bytes() const { return uplink_; }
  std::uint64_t downlink_bytes() const { return downlink_; }
  std::uint64_t total_bytes() const { return uplink_ + downlink_; }
  const std::vector<RoundTraffic>& breakdown() const { return rounds_; }

 private:
  std::uint64_t uplink_ = 0;
  std::uint64_t downlink_ = 0;
  std::vector<RoundTraffic> rounds_;
};

// A sent message; a broadcast to p workers is one entry with fanout p.
struct LogEntry {
  Direction direction = Direction::kUplink;
  std::uint16_t fanout = 1;
  std::uint64_t round = 0;
  std::vector<std::uint8_t> bytes;
};

// Recomputes meter totals from a log: sum of fanout * size per direction.
ByteMeter replay_meter(std::span<const LogEntry> log);

// Binary trace: per entry
//   direction:u8 | fanout:u16 | round:u64 | length:u32 | message bytes
// all little-endian, entries back to back.
void write_trace(std::ostream& os, std::span<const LogEntry> log);
std::vector<LogEntry> read_trace(std::istream& is);

}  // namespace qesgd
