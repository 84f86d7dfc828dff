#include "qesgd/codec.hpp"

#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "qesgd/random_source.hpp"

namespace qesgd {
namespace {

QuantizedVector random_qv(RandomSource& rng, std::size_t d, int bits, double delta) {
  const QuantGrid g(delta, bits);
  std::vector<std::int32_t> codes(d);
  for (auto& c : codes) c = g.min_code() + static_cast<std::int32_t>(rng.uniform_index(g.num_levels()));
  return QuantizedVector(g, std::move(codes));
}

DecodeErrc decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode(bytes);
  } catch (const DecodeError& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return DecodeErrc::kTrailingBytes;
}

TEST(Codec, Sizes) {
  EXPECT_EQ(encoded_size(1000, 8), 1019u);
  EXPECT_EQ(payload_size(3, 4), 2u);
  EXPECT_EQ(payload_size(1, 1), 1u);
  EXPECT_EQ(payload_size(8, 1), 1u);
  EXPECT_EQ(payload_size(9, 1), 2u);
  EXPECT_EQ(payload_size(5, 16), 10u);
}

TEST(Codec, HeaderLayout) {
  const QuantizedVector qv(QuantGrid(0.5, 4), {-8, 7, 0});
  const auto bytes = encode(qv);
  ASSERT_EQ(bytes.size(), 19u + 2u);
  EXPECT_EQ(bytes[0], 0x51);
  EXPECT_EQ(bytes[1], 0x01);
  EXPECT_EQ(bytes[2], 4);
  EXPECT_EQ(bytes[3], 3);
  for (int i = 4; i < 11; ++i) EXPECT_EQ(bytes[i], 0);
  double delta = 0.0;
  std::memcpy(&delta, bytes.data() + 11, 8);
  EXPECT_EQ(delta, 0.5);
  // offsets 0, 15, 8 packed LSB first: 0xF0, 0x08
  EXPECT_EQ(bytes[19], 0xF0);
  EXPECT_EQ(bytes[20], 0x08);
}

TEST(Codec, RoundTripRandom) {
  RandomSource rng(77, 0);
  for (int i = 0; i < 500; ++i) {
    const int bits = 1 + static_cast<int>(rng.uniform_index(16));
    const std::size_t d = 1 + rng.uniform_index(700);
    const auto qv = random_qv(rng, d, bits, std::ldexp(1.0 + rng.uniform(), -20 + static_cast<int>(rng.uniform_index(40))));
    const auto bytes = encode(qv);
    ASSERT_EQ(bytes.size(), encoded_size(d, bits));
    ASSERT_EQ(decode(bytes), qv);
    ASSERT_EQ(encode(decode(bytes)), bytes);
  }
}

TEST(Codec, Frames) {
  RandomSource rng(78, 0);
  std::vector<QuantizedVector> frames{random_qv(rng, 5, 3, 0.1), random_qv(rng, 17, 11, 2.0),
                                      random_qv(rng, 1, 1, 1e-300)};
  const auto bytes = encode_frames(frames);
  EXPECT_EQ(bytes.size(), encoded_size(5, 3) + encoded_size(17, 11) + encoded_size(1, 1));
  EXPECT_EQ(decode_frames(bytes), frames);

  std::size_t consumed = 0;
  EXPECT_EQ(decode_prefix(bytes, consumed), frames[0]);
  EXPECT_EQ(consumed, encoded_size(5, 3));
}

class CodecErrors : public ::testing::Test {
 protected:
  std::vector<std::uint8_t> good = encode(QuantizedVector(QuantGrid(0.25, 3), {1, -4, 3}));
};

TEST_F(CodecErrors, TruncatedHeader) {
  good.resize(10);
  EXPECT_EQ(decode_error(good), DecodeErrc::kTruncatedHeader);
}

TEST_F(CodecErrors, BadMagic) {
  good[0] = 0x50;
  EXPECT_EQ(decode_error(good), DecodeErrc::kBadMagic);
}

TEST_F(CodecErrors, BadVersion) {
  good[1] = 0x02;
  EXPECT_EQ(decode_error(good), DecodeErrc::kBadVersion);
}

TEST_F(CodecErrors, BadBits) {
  good[2] = 0;
  EXPECT_EQ(decode_error(good), DecodeErrc::kBadBits);
  good[2] = 17;
  EXPECT_EQ(decode_error(good), DecodeErrc::kBadBits);
}

TEST_F(CodecErrors, BadDimension) {
  std::memset(good.data() + 3, 0, 8);
  EXPECT_EQ(decode_error(good), DecodeErrc::kBadDimension);
}

TEST_F(CodecErrors, BadDelta) {
  const double bad = -1.0;
  std::memcpy(good.data() + 11, &bad, 8);
  EXPECT_EQ(decode_error(good), DecodeErrc::kBadDelta);
}

TEST_F(CodecErrors, TruncatedPayload) {
  good.pop_back();
  EXPECT_EQ(decode_error(good), DecodeErrc::kTruncatedPayload);
}

TEST_F(CodecErrors, NonZeroPadding) {
  good.back() |= 0x80;  // 9 payload bits used, bit 7 of byte 2 is padding
  EXPECT_EQ(decode_error(good), DecodeErrc::kNonZeroPadding);
}

TEST_F(CodecErrors, TrailingBytes) {
  good.push_back(0);
  EXPECT_EQ(decode_error(good), DecodeErrc::kTrailingBytes);
}

}  // namespace
}  // namespace qesgd
