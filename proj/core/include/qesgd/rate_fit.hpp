#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qesgd/trajectory.hpp"

namespace qesgd {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::int64_t t_lo = 0;
  std::int64_t t_hi = 0;
  double r2 = 0.0;
};

inline constexpr double kSuboptimalityFloor = 1e-15;

// Least squares of log(subopt) on log(t) over rows with k == 0 and
// t in [t_lo, t_hi]; t_hi = -1 means the last row. Points with t = 0 are
// skipped. Throws std::invalid_argument for fewer than 5 points.
RateFit fit_convergence_slope(std::span<const RoundMetrics> rows, std::int64_t t_lo,
                              std::int64_t t_hi);
RateFit fit_convergence_slope(std::span<const std::int64_t> t,
                              std::span<const double> suboptimality, std::int64_t t_lo,
                              std::int64_t t_hi);

}  // namespace qesgd
