#include "qesgd/codec.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace qesgd {
namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

}  // namespace

const char* to_string(DecodeErrc code) {
  switch (code) {
    case DecodeErrc::kTruncatedHeader: return "truncated header";
    case DecodeErrc::kBadMagic: return "bad magic byte";
    case DecodeErrc::kBadVersion: return "unsupported version";
    case DecodeErrc::kBadBits: return "bit width outside [1, 16]";
    case DecodeErrc::kBadDimension: return "dimension must be positive";
    case DecodeErrc::kBadDelta: return "delta must be finite and positive";
    case DecodeErrc::kTruncatedPayload: return "truncated payload";
    case DecodeErrc::kNonZeroPadding: return "non-zero padding bits";
    case DecodeErrc::kTrailingBytes: return "trailing bytes after frame";
  }
  return "unknown decode error";
}

DecodeError::DecodeError(DecodeErrc code)
    : std::runtime_error(std::string("decode: ") + to_string(code)), code_(code) {}

std::size_t payload_size(std::size_t dim, int bits) {
  return (dim * static_cast<std::size_t>(bits) + 7) / 8;
}

std::size_t encoded_size(std::size_t dim, int bits) {
  return kCodecHeaderSize + payload_size(dim, bits);
}

void encode_append(const QuantizedVector& qv, std::vector<std::uint8_t>& out) {
  const int bits = qv.grid().bits();
  const std::uint32_t bias = std::uint32_t{1} << (bits - 1);
  out.reserve(out.size() + encoded_size(qv.dim(), bits));
  out.push_back(kCodecMagic);
  out.push_back(kCodecVersion);
  out.push_back(static_cast<std::uint8_t>(bits));
  put_u64(out, qv.dim());
  put_u64(out, std::bit_cast<std::uint64_t>(qv.grid().delta()));

  std::uint64_t acc = 0;
  int filled = 0;
  for (const std::int32_t code : qv.codes()) {
    acc |= std::uint64_t{static_cast<std::uint32_t>(code + static_cast<std::int32_t>(bias))} << filled;
    filled += bits;
    while (filled >= 8) {
      out.push_back(static_cast<std::uint8_t>(acc & 0xff));
      acc >>= 8;
      filled -= 8;
    }
  }
  if (filled > 0) out.push_back(static_cast<std::uint8_t>(acc & 0xff));
}

std::vector<std::uint8_t> encode(const QuantizedVector& qv) {
  std::vector<std::uint8_t> out;
  encode_append(qv, out);
  return out;
}

QuantizedVector decode_prefix(std::span<const std::uint8_t> bytes, std::size_t& consumed) {
  if (bytes.size() < kCodecHeaderSize) throw DecodeError(DecodeErrc::kTruncatedHeader);
  if (bytes[0] != kCodecMagic) throw DecodeError(DecodeErrc::kBadMagic);
  if (bytes[1] != kCodecVersion) throw DecodeError(DecodeErrc::kBadVersion);
  const int bits = bytes[2];
  if (bits < 1 || bits > kMaxBits) throw DecodeError(DecodeErrc::kBadBits);
  const std::uint64_t dim = get_u64(bytes.data() + 3);
  if (dim == 0) throw DecodeError(DecodeErrc::kBadDimension);
  const double delta = std::bit_cast<double>(get_u64(bytes.data() + 11));
  if (!std::isfinite(delta) || !(delta > 0.0)) throw DecodeError(DecodeErrc::kBadDelta);

  const std::size_t available = bytes.size() - kCodecHeaderSize;
  // Guard dim * bits against overflow before computing the payload size.
  if (dim > (std::numeric_limits<std::size_t>::max() - 7) / static_cast<std::size_t>(bits) ||
      payload_size(dim, bits) > available) {
    throw DecodeError(DecodeErrc::kTruncatedPayload);
  }
  const std::size_t payload = payload_size(dim, bits);
  const std::uint8_t* p = bytes.data() + kCodecHeaderSize;

  const std::int32_t bias = std::int32_t{1} << (bits - 1);
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  std::vector<std::int32_t> codes(dim);
  std::uint64_t acc = 0;
  int filled = 0;
  std::size_t next = 0;
  for (std::uint64_t i = 0; i < dim; ++i) {
    while (filled < bits) {
      acc |= std::uint64_t{p[next++]} << filled;
      filled += 8;
    }
    codes[i] = static_cast<std::int32_t>(acc & mask) - bias;
    acc >>= bits;
    filled -= bits;
  }
  if (acc != 0) throw DecodeError(DecodeErrc::kNonZeroPadding);

  consumed = kCodecHeaderSize + payload;
  return QuantizedVector(QuantGrid(delta, bits), std::move(codes));
}

QuantizedVector decode(std::span<const std::uint8_t> bytes) {
  std::size_t consumed = 0;
  QuantizedVector qv = decode_prefix(bytes, consumed);
  if (consumed != bytes.size()) throw DecodeError(DecodeErrc::kTrailingBytes);
  return qv;
}

std::vector<std::uint8_t> encode_frames(std::span<const QuantizedVector> frames) {
  std::vector<std::uint8_t> out;
  for (const auto& f : frames) encode_append(f, out);
  return out;
}

std::vector<QuantizedVector> decode_frames(std::span<const std::uint8_t> bytes) {
  std::vector<QuantizedVector> out;
  while (!bytes.empty()) {
    std::size_t consumed = 0;
    out.push_back(decode_prefix(bytes, consumed));
    bytes = bytes.subspan(consumed);
  }
  return out;
}

}  // namespace qesgd
