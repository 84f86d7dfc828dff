#include "qesgd/messages.hpp"

#include <bit>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "qesgd/codec.hpp"

namespace qesgd {
namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return static_cast<T>(v);
}

void encode_dense(std::vector<std::uint8_t>& out, MessageTag tag, std::uint16_t sender,
                  std::uint64_t round, const Vector& v) {
  if (round > std::numeric_limits<std::uint32_t>::max()) {
    throw std::overflow_error("message round exceeds the 32-bit header field");
  }
  out.reserve(dense_message_size(static_cast<std::size_t>(v.size())));
  out.push_back(static_cast<std::uint8_t>(tag));
  out.push_back(0);
  put_le<std::uint16_t>(out, sender);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(round));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v[i])));
  }
}

}  // namespace

std::size_t dense_message_size(std::size_t dim) { return kMessageHeaderSize + 4 * dim; }

std::size_t wire_size(const Message& m) {
  if (const auto* z = std::get_if<BroadcastZ>(&m)) return z->frames.size();
  if (const auto* p = std::get_if<PushGradient>(&m)) {
    return dense_message_size(static_cast<std::size_t>(p->g.size()));
  }
  return dense_message_size(static_cast<std::size_t>(std::get<BroadcastEpochAnchor>(m).w.size()));
}

std::vector<std::uint8_t> encode_message(const Message& m) {
  std::vector<std::uint8_t> out;
  if (const auto* z = std::get_if<BroadcastZ>(&m)) return z->frames;
  if (const auto* p = std::get_if<PushGradient>(&m)) {
    if (p->worker_id >= kServerSender) throw std::overflow_error("worker id too large for header");
    encode_dense(out, MessageTag::kPushGradient, static_cast<std::uint16_t>(p->worker_id), p->round,
                 p->g);
    return out;
  }
  const auto& a = std::get<BroadcastEpochAnchor>(m);
  encode_dense(out, MessageTag::kBroadcastEpochAnchor, kServerSender, a.epoch, a.w);
  return out;
}

Message decode_message(std::span<const std::uint8_t> bytes, std::uint64_t z_round) {
  if (bytes.empty()) throw ProtocolError("empty message");
  if (bytes[0] == kCodecMagic) {
    decode_frames(bytes);  // validates
    return BroadcastZ{z_round, std::vector<std::uint8_t>(bytes.begin(), bytes.end())};
  }
  if (bytes.size() < kMessageHeaderSize) throw ProtocolError("truncated message header");
  const auto tag = bytes[0];
  const auto sender = get_le<std::uint16_t>(bytes.data() + 2);
  const auto round = get_le<std::uint32_t>(bytes.data() + 4);
  const auto dim = get_le<std::uint64_t>(bytes.data() + 8);
  if ((bytes.size() - kMessageHeaderSize) / 4 != dim || (bytes.size() - kMessageHeaderSize) % 4 != 0) {
    throw ProtocolError("dense payload length does not match header dimension");
  }
  Vector v(static_cast<Eigen::Index>(dim));
  for (std::uint64_t i = 0; i < dim; ++i) {
    const auto bits = get_le<std::uint32_t>(bytes.data() + kMessageHeaderSize + 4 * i);
    v[static_cast<Eigen::Index>(i)] = static_cast<double>(std::bit_cast<float>(bits));
  }
  if (tag == static_cast<std::uint8_t>(MessageTag::kPushGradient)) {
    return PushGradient{sender, round, std::move(v)};
  }
  if (tag == static_cast<std::uint8_t>(MessageTag::kBroadcastEpochAnchor)) {
    return BroadcastEpochAnchor{round, std::move(v)};
  }
  throw ProtocolError("unknown message tag " + std::to_string(tag));
}

void ByteMeter::record(Direction dir, std::uint64_t round, std::uint64_t bytes) {
  if (rounds_.empty() || rounds_.back().round != round) {
    if (!rounds_.empty() && round < rounds_.back().round) {
      throw std::logic_error("ByteMeter: rounds must be recorded in order");
    }
    rounds_.push_back({round, 0, 0});
  }
  if (dir == Direction::kUplink) {
    uplink_ += bytes;
    rounds_.back().uplink += bytes;
  } else {
    downlink_ += bytes;
    rounds_.back().downlink += bytes;
  }
}

ByteMeter replay_meter(std::span<const LogEntry> log) {
  ByteMeter m;
  for (const auto& e : log) {
    m.record(e.direction, e.round, std::uint64_t{e.fanout} * e.bytes.size());
  }
  return m;
}

void write_trace(std::ostream& os, std::span<const LogEntry> log) {
  std::vector<std::uint8_t> buf;
  for (const auto& e : log) {
    if (e.bytes.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw std::overflow_error("trace entry too large");
    }
    buf.clear();
    buf.push_back(static_cast<std::uint8_t>(e.direction));
    put_le<std::uint16_t>(buf, e.fanout);
    put_le<std::uint64_t>(buf, e.round);
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(e.bytes.size()));
    buf.insert(buf.end(), e.bytes.begin(), e.bytes.end());
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
}

std::vector<LogEntry> read_trace(std::istream& is) {
  std::vector<LogEntry> out;
  constexpr std::size_t kEntryHeader = 1 + 2 + 8 + 4;
  std::uint8_t head[kEntryHeader];
  for (;;) {
    is.read(reinterpret_cast<char*>(head), kEntryHeader);
    if (is.gcount() == 0) break;
    if (static_cast<std::size_t>(is.gcount()) != kEntryHeader) {
      throw ProtocolError("trace: truncated entry header");
    }
    LogEntry e;
    if (head[0] > 1) throw ProtocolError("trace: bad direction byte");
    e.direction = static_cast<Direction>(head[0]);
    e.fanout = get_le<std::uint16_t>(head + 1);
    e.round = get_le<std::uint64_t>(head + 3);
    const auto len = get_le<std::uint32_t>(head + 11);
    e.bytes.resize(len);
    is.read(reinterpret_cast<char*>(e.bytes.data()), len);
    if (static_cast<std::uint32_t>(is.gcount()) != len) throw ProtocolError("trace: truncated entry");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace qesgd
