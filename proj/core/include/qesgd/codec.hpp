#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qesgd/quant.hpp"

namespace qesgd {

// Wire layout, all little-endian:
//   0x51 | 0x01 | bits:u8 | dim:u64 | delta:f64 | payload
// The payload holds (code + 2^(b-1)) as b-bit unsigned fields in ascending
// coordinate order, packed least-significant-bit first; unused bits of the
// final byte are zero.
inline constexpr std::uint8_t kCodecMagic = 0x51;
inline constexpr std::uint8_t kCodecVersion = 0x01;
inline constexpr std::size_t kCodecHeaderSize = 19;

enum class DecodeErrc {
  kTruncatedHeader,
  kBadMagic,
  kBadVersion,
  kBadBits,
  kBadDimension,
  kBadDelta,
  kTruncatedPayload,
  kNonZeroPadding,
  kTrailingBytes,
};

const char* to_string(DecodeErrc code);

class DecodeError : public std::runtime_error {
 public:
  explicit DecodeError(DecodeErrc code);
  DecodeErrc code() const { return code_; }

 private:
  DecodeErrc code_;
};

std::size_t payload_size(std::size_t dim, int bits);
std::size_t encoded_size(std::size_t dim, int bits);

std::vector<std::uint8_t> encode(const QuantizedVector& qv);
void encode_append(const QuantizedVector& qv, std::vector<std::uint8_t>& out);

// Decodes exactly one frame; trailing bytes are an error.
QuantizedVector decode(std::span<const std::uint8_t> bytes);

// Decodes one frame from the front of `bytes`, setting `consumed` to its size.
QuantizedVector decode_prefix(std::span<const std::uint8_t> bytes, std::size_t& consumed);

// Back-to-back frames, as produced by bucketed quantization.
std::vector<std::uint8_t> encode_frames(std::span<const QuantizedVector> frames);
std::vector<QuantizedVector> decode_frames(std::span<const std::uint8_t> bytes);

}  // namespace qesgd
