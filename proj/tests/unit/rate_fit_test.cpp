#include "qesgd/rate_fit.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace qesgd {
namespace {

std::vector<RoundMetrics> rows_from(double (*f)(double), int T) {
  std::vector<RoundMetrics> rows;
  for (int t = 0; t <= T; ++t) {
    RoundMetrics r;
    r.t = t;
    r.suboptimality = f(static_cast<double>(t));
    rows.push_back(r);
  }
  return rows;
}

TEST(FitConvergenceSlope, ExactPowerLaw) {
  const auto rows = rows_from([](double t) { return 1.0 / t; }, 50);
  const auto fit = fit_convergence_slope(rows, 1, -1);
  EXPECT_NEAR(fit.slope, -1.0, 1e-6);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-9);
  EXPECT_EQ(fit.t_lo, 1);
  EXPECT_EQ(fit.t_hi, 50);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
}

TEST(FitConvergenceSlope, ConstantSequence) {
  const auto rows = rows_from([](double) { return 0.25; }, 20);
  const auto fit = fit_convergence_slope(rows, 3, 15);
  EXPECT_EQ(fit.slope, 0.0);
  EXPECT_DOUBLE_EQ(fit.intercept, std::log(0.25));
  EXPECT_EQ(fit.r2, 1.0);
}

TEST(FitConvergenceSlope, WindowAndFloor) {
  auto rows = rows_from([](double t) { return 3.0 * std::pow(t, -2.0); }, 30);
  rows[25].suboptimality = 0.0;
  const auto fit = fit_convergence_slope(rows, 5, 20);
  EXPECT_NEAR(fit.slope, -2.0, 1e-9);
  EXPECT_EQ(fit.t_hi, 20);
  const auto floored = fit_convergence_slope(rows, 5, -1);
  EXPECT_LT(floored.slope, -2.0);
  EXPECT_GE(floored.r2, 0.0);
  EXPECT_LE(floored.r2, 1.0);
}

TEST(FitConvergenceSlope, SkipsStepRowsAndEpochZero) {
  std::vector<RoundMetrics> rows;
  for (int t = 0; t <= 10; ++t) {
    RoundMetrics a;
    a.t = t;
    a.suboptimality = t == 0 ? 1e9 : 1.0 / t;
    rows.push_back(a);
    RoundMetrics inner = a;
    inner.k = 1;
    inner.suboptimality = 5.0;
    rows.push_back(inner);
  }
  EXPECT_NEAR(fit_convergence_slope(rows, 0, -1).slope, -1.0, 1e-9);
}

TEST(FitConvergenceSlope, TooFewPoints) {
  const auto rows = rows_from([](double t) { return 1.0 / t; }, 10);
  EXPECT_THROW(fit_convergence_slope(rows, 7, 10), std::invalid_argument);
  EXPECT_NO_THROW(fit_convergence_slope(rows, 6, 10));
  const std::vector<std::int64_t> t = {1, 2, 3};
  const std::vector<double> s = {1, 0.5, 0.3};
  EXPECT_THROW(fit_convergence_slope(t, s, 1, -1), std::invalid_argument);
}

TEST(FitConvergenceSlope, SpanOverload) {
  std::vector<std::int64_t> t;
  std::vector<double> s;
  for (int i = 1; i <= 8; ++i) {
    t.push_back(i);
    s.push_back(2.0 * std::pow(i, -0.5));
  }
  const auto fit = fit_convergence_slope(t, s, 1, -1);
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 2.0, 1e-12);
}

}  // namespace
}  // namespace qesgd
