#include "qesgd/quant.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qesgd {

QuantGrid::QuantGrid(double delta, int bits) : delta_(delta), bits_(bits) {
  if (!std::isfinite(delta) || !(delta > 0.0)) {
    throw std::invalid_argument("QuantGrid: delta must be finite and positive");
  }
  if (bits < 1 || bits > kMaxBits) {
    throw std::invalid_argument("QuantGrid: bits must be in [1, " +
                                std::to_string(kMaxBits) + "], got " +
                                std::to_string(bits));
  }
}

bool QuantGrid::contains(double v) const {
  if (!std::isfinite(v)) return false;
  const double k = std::nearbyint(v / delta_);
  if (k < min_code() || k > max_code()) return false;
  return level(static_cast<std::int32_t>(k)) == v;
}

bool operator==(const QuantGrid& a, const QuantGrid& b) {
  return a.bits_ == b.bits_ &&
         std::bit_cast<std::uint64_t>(a.delta_) == std::bit_cast<std::uint64_t>(b.delta_);
}

QuantizedVector::QuantizedVector(QuantGrid grid, std::vector<std::int32_t> codes)
    : grid_(grid), codes_(std::move(codes)) {
  if (codes_.empty()) throw std::invalid_argument("QuantizedVector: empty");
  for (const std::int32_t c : codes_) {
    if (c < grid_.min_code() || c > grid_.max_code()) {
      throw std::out_of_range("QuantizedVector: code " + std::to_string(c) +
                              " outside the signed " + std::to_string(grid_.bits()) +
                              "-bit range");
    }
  }
}

std::vector<double> QuantizedVector::decoded() const {
  std::vector<double> out(codes_.size());
  decode_into(out);
  return out;
}

void QuantizedVector::decode_into(std::span<double> out) const {
  if (out.size() != codes_.size()) {
    throw std::invalid_argument("QuantizedVector::decode_into: size mismatch");
  }
  for (std::size_t i = 0; i < codes_.size(); ++i) out[i] = grid_.level(codes_[i]);
}

bool operator==(const QuantizedVector& a, const QuantizedVector& b) {
  return a.grid_ == b.grid_ && a.codes_ == b.codes_;
}

RoundingLaw rounding_law(double v, const QuantGrid& grid) {
  if (!std::isfinite(v)) throw std::invalid_argument("quantize: non-finite input");
  if (v >= grid.upper()) return {grid.max_code(), grid.max_code(), 0.0};
  // v == lower() is on the grid and clips deterministically either way.
  if (v <= grid.lower()) return {grid.min_code(), grid.min_code(), 0.0};

  const double x = v / grid.delta();
  const double nearest = std::nearbyint(x);
  if (grid.level(static_cast<std::int32_t>(nearest)) == v) {
    const auto k = static_cast<std::int32_t>(nearest);
    return {k, k, 0.0};
  }
  // Strictly inside the span, so floor/ceil stay within [min_code, max_code]
  // up to rounding in the division, which the clamp absorbs.
  auto lo = static_cast<std::int32_t>(std::floor(x));
  lo = std::clamp(lo, grid.min_code(), grid.max_code() - 1);
  const std::int32_t hi = lo + 1;
  // P(hi) = (v - delta*floor(v/delta)) / delta.
  const double p_hi = std::clamp((v - grid.level(lo)) / grid.delta(), 0.0, 1.0);
  return {lo, hi, p_hi};
}

std::int32_t quantize_code(double v, const QuantGrid& grid, RandomSource& rng) {
  const RoundingLaw law = rounding_law(v, grid);
  if (law.lo == law.hi) return law.lo;
  return rng.uniform() < law.p_hi ? law.hi : law.lo;
}

double quantize_scalar(double v, const QuantGrid& grid, RandomSource& rng) {
  return grid.level(quantize_code(v, grid, rng));
}

QuantizedVector quantize_vector(std::span<const double> u, const QuantGrid& grid,
                                RandomSource& rng) {
  if (u.empty()) throw std::invalid_argument("quantize_vector: empty vector");
  std::vector<std::int32_t> codes(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) codes[i] = quantize_code(u[i], grid, rng);
  return QuantizedVector(grid, std::move(codes));
}

double exact_mean(double v, const QuantGrid& grid) {
  const RoundingLaw law = rounding_law(v, grid);
  return (1.0 - law.p_hi) * grid.level(law.lo) + law.p_hi * grid.level(law.hi);
}

double exact_second_moment(double v_prime, double v, const QuantGrid& grid) {
  if (!std::isfinite(v)) throw std::invalid_argument("exact_second_moment: non-finite v");
  const RoundingLaw law = rounding_law(v_prime, grid);
  if (law.lo == law.hi) {
    const double e = grid.level(law.lo) - v;
    return e * e;
  }
  // Unbiased inside the span: E[(Q - v)^2] = (v' - v)^2 + delta^2 p (1 - p).
  const double bias = v_prime - v;
  const double d = grid.delta();
  return bias * bias + d * d * law.p_hi * (1.0 - law.p_hi);
}

double max_abs_delta(std::span<const double> bucket, int bits) {
  if (bits < 2 || bits > kMaxBits) {
    throw std::invalid_argument("max_abs_delta: bits must be in [2, 16]");
  }
  double m = 0.0;
  for (const double x : bucket) m = std::max(m, std::abs(x));
  if (m == 0.0) return std::numeric_limits<double>::min();
  return m / static_cast<double>((1 << (bits - 1)) - 1);
}

std::vector<QuantizedVector> quantize_bucketed(std::span<const double> u,
                                               std::size_t bucket_size, int bits,
                                               RandomSource& rng,
                                               const BucketDeltaRule& rule) {
  if (u.empty()) throw std::invalid_argument("quantize_bucketed: empty vector");
  if (bucket_size == 0) throw std::invalid_argument("quantize_bucketed: bucket_size must be >= 1");
  std::vector<QuantizedVector> out;
  out.reserve((u.size() + bucket_size - 1) / bucket_size);
  for (std::size_t begin = 0; begin < u.size(); begin += bucket_size) {
    const auto bucket = u.subspan(begin, std::min(bucket_size, u.size() - begin));
    out.push_back(quantize_vector(bucket, QuantGrid(rule(bucket, bits), bits), rng));
  }
  return out;
}

std::vector<double> concat_decoded(std::span<const QuantizedVector> buckets) {
  std::vector<double> out;
  for (const auto& b : buckets) {
    for (std::size_t i = 0; i < b.dim(); ++i) out.push_back(b.value(i));
  }
  return out;
}

}  // namespace qesgd
