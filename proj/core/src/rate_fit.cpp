#include "qesgd/rate_fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qesgd {

RateFit fit_convergence_slope(std::span<const std::int64_t> t,
                              std::span<const double> suboptimality, std::int64_t t_lo,
                              std::int64_t t_hi) {
  if (t.size() != suboptimality.size()) {
    throw std::invalid_argument("t and suboptimality differ in length");
  }
  if (t_hi != -1 && t_hi < t_lo) throw std::invalid_argument("empty fit window");

  std::vector<double> x, y;
  std::int64_t lo_seen = 0, hi_seen = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < std::max<std::int64_t>(t_lo, 1) || (t_hi != -1 && t[i] > t_hi)) continue;
    if (std::isnan(suboptimality[i])) throw std::invalid_argument("suboptimality is NaN");
    if (x.empty()) lo_seen = t[i];
    hi_seen = t[i];
    x.push_back(std::log(static_cast<double>(t[i])));
    y.push_back(std::log(std::max(suboptimality[i], kSuboptimalityFloor)));
  }
  if (x.size() < 5) {
    throw std::invalid_argument("fit window holds " + std::to_string(x.size()) +
                                " points; at least 5 are needed");
  }

  const auto m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit window has a single distinct t");

  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.t_lo = lo_seen;
  fit.t_hi = hi_seen;
  if (syy == 0.0) {
    fit.r2 = 1.0;
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += r * r;
    }
    fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

RateFit fit_convergence_slope(std::span<const RoundMetrics> rows, std::int64_t t_lo,
                              std::int64_t t_hi) {
  std::vector<std::int64_t> t;
  std::vector<double> s;
  for (const auto& r : rows) {
    if (r.k != 0) continue;
    t.push_back(r.t);
    s.push_back(r.suboptimality);
  }
  return fit_convergence_slope(t, s, t_lo, t_hi);
}

}  // namespace qesgd
