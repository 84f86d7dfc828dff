#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qesgd/random_source.hpp"

namespace qesgd {

inline constexpr int kMaxBits = 16;

// The uniform lattice { delta * k : -2^(b-1) <= k <= 2^(b-1) - 1 }.
class QuantGrid {
 public:
  // Throws std::invalid_argument unless delta is finite and positive and
  // 1 <= bits <= kMaxBits.
  QuantGrid(double delta, int bits);

  double delta() const { return delta_; }
  int bits() const { return bits_; }

  std::int32_t min_code() const { return -(std::int32_t{1} << (bits_ - 1)); }
  std::int32_t max_code() const { return (std::int32_t{1} << (bits_ - 1)) - 1; }
  std::size_t num_levels() const { return std::size_t{1} << bits_; }

  double level(std::int32_t code) const { return delta_ * code; }
  double lower() const { return level(min_code()); }
  double upper() const { return level(max_code()); }

  // True iff v is exactly one of the represented levels.
  bool contains(double v) const;

  friend bool operator==(const QuantGrid& a, const QuantGrid& b);

 private:
  double delta_;
  int bits_;
};

// Codes on a grid. Immutable once built; codes are validated against the
// signed b-bit range on construction (std::out_of_range).
class QuantizedVector {
 public:
  QuantizedVector(QuantGrid grid, std::vector<std::int32_t> codes);

  const QuantGrid& grid() const { return grid_; }
  std::span<const std::int32_t> codes() const { return codes_; }
  std::size_t dim() const { return codes_.size(); }

  double value(std::size_t i) const { return grid_.level(codes_[i]); }
  std::vector<double> decoded() const;
  // Writes the decoded values into out (out.size() must equal dim()).
  void decode_into(std::span<double> out) const;

  // Compares delta bit patterns, not numeric equality.
  friend bool operator==(const QuantizedVector& a, const QuantizedVector& b);

 private:
  QuantGrid grid_;
  std::vector<std::int32_t> codes_;
};

// The distribution of Q(v): code `lo` with probability 1 - p_hi, code `hi`
// with probability p_hi. Clipped and on-grid inputs have lo == hi.
struct RoundingLaw {
  std::int32_t lo;
  std::int32_t hi;
  double p_hi;
};

RoundingLaw rounding_law(double v, const QuantGrid& grid);

// Stochastic rounding of one scalar; returns the code. Inputs at or beyond
// the grid ends are clipped, on-grid inputs are returned without consuming
// randomness, everything else consumes exactly one uniform draw.
std::int32_t quantize_code(double v, const QuantGrid& grid, RandomSource& rng);

double quantize_scalar(double v, const QuantGrid& grid, RandomSource& rng);

// Coordinates are rounded independently in ascending index order.
QuantizedVector quantize_vector(std::span<const double> u, const QuantGrid& grid,
                                RandomSource& rng);

// E[Q(v)] evaluated from the rounding law.
double exact_mean(double v, const QuantGrid& grid);

// E[(Q(v_prime) - v)^2] evaluated from the rounding law, no sampling.
double exact_second_moment(double v_prime, double v, const QuantGrid& grid);

// Per-bucket step size policy: (bucket values, bits) -> delta > 0.
using BucketDeltaRule = std::function<double(std::span<const double>, int)>;

// max|bucket| / (2^(b-1) - 1), or the smallest positive normal double when
// the bucket is all zeros. Requires bits >= 2.
double max_abs_delta(std::span<const double> bucket, int bits);

// Splits u into consecutive buckets of bucket_size (the last may be shorter)
// and quantizes each on its own grid. Buckets are processed in order, so the
// random draws follow ascending coordinate order overall.
std::vector<QuantizedVector> quantize_bucketed(std::span<const double> u,
                                               std::size_t bucket_size, int bits,
                                               RandomSource& rng,
                                               const BucketDeltaRule& rule = max_abs_delta);

std::vector<double> concat_decoded(std::span<const QuantizedVector> buckets);

}  // namespace qesgd
