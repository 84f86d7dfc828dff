#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace qesgd {

using Vector = Eigen::VectorXd;
// Row-major so per-sample access x_i is contiguous.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ProblemKind { kRidge, kLogisticL2 };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view text);

struct Dataset {
  FeatureMatrix features;  // n x d
  Vector targets;          // n; +-1 for logistic

  std::size_t n() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(features.cols()); }

  // Throws std::invalid_argument on empty, mismatched or non-finite data, or
  // on logistic targets outside {-1, +1}.
  void validate(ProblemKind kind) const;
};

struct Constants {
  double mu = 0.0;
  double L = 0.0;
  double G = 0.0;
  double kappa() const { return L / mu; }
};

struct Optimum {
  Vector w_star;
  double f_star = 0.0;
};

// Finite-sum objective F(w) = (1/n) sum_i f_i(w), with the (lambda/2)|w|^2
// regularizer folded into every f_i:
//   ridge:        f_i(w) = 1/2 (x_i.w - y_i)^2 + lambda/2 |w|^2
//   logistic-l2:  f_i(w) = log(1 + exp(-y_i x_i.w)) + lambda/2 |w|^2
// Immutable after construction.
class ProblemSpec {
 public:
  // Validates the data, solves for the optimum and estimates the constants.
  static ProblemSpec create(ProblemKind kind, Dataset data, double lambda);

  ProblemKind kind() const { return kind_; }
  const Dataset& data() const { return data_; }
  double lambda() const { return lambda_; }
  std::size_t n() const { return data_.n(); }
  std::size_t d() const { return data_.d(); }

  const Constants& constants() const { return constants_; }
  double mu() const { return constants_.mu; }
  double L() const { return constants_.L; }
  double kappa() const { return constants_.kappa(); }
  double G() const { return constants_.G; }

  const Vector& w_star() const { return optimum_.w_star; }
  double f_star() const { return optimum_.f_star; }

 private:
  ProblemSpec(ProblemKind kind, Dataset data, double lambda)
      : kind_(kind), data_(std::move(data)), lambda_(lambda) {}

  ProblemKind kind_;
  Dataset data_;
  double lambda_;
  Constants constants_;
  Optimum optimum_;
};

// Gradient-norm target for the optimum oracle.
inline constexpr double kOptimumGradientTolerance = 1e-10;

double sample_loss(const ProblemSpec& spec, std::size_t i, const Vector& w);
// acc += grad f_i(w)
void accumulate_sample_gradient(const ProblemSpec& spec, std::size_t i, const Vector& w,
                                Vector& acc);

double full_objective(const ProblemSpec& spec, const Vector& w);
Vector full_gradient(const ProblemSpec& spec, const Vector& w);
// Batch average of per-sample gradients; indices may repeat.
Vector stochastic_gradient(const ProblemSpec& spec, const Vector& w,
                           std::span<const std::size_t> indices);

double suboptimality(const ProblemSpec& spec, const Vector& w);

// Ridge: normal equations. Logistic: damped Newton until |grad F| <= 1e-10.
// Throws std::domain_error for a singular ridge system with lambda = 0.
Optimum solve_exact(ProblemKind kind, const Dataset& data, double lambda);
Optimum solve_exact(const ProblemSpec& spec);

// mu and L from the Hessian spectrum (ridge) or lambda and sigma_max/(4n)
// (logistic); G is twice the largest per-sample gradient norm at w = 0 and
// at w_star.
Constants estimate_constants(ProblemKind kind, const Dataset& data, double lambda,
                             const Vector& w_star);
Constants estimate_constants(const ProblemSpec& spec);

struct SyntheticOptions {
  ProblemKind kind = ProblemKind::kRidge;
  std::size_t n = 1000;
  std::size_t d = 20;
  std::uint64_t seed = 1;
  double condition_target = 10.0;
  double noise = 0.1;
  double lambda = 0.0;
};

// Features X = sqrt(n) Q diag(s) V^T with orthonormal Q and V, so X^T X / n has
// eigenvalues s_j^2, spaced geometrically with the top one at 1 and the ratio
// (s_max^2 + lambda) / (s_min^2 + lambda) equal to condition_target. Ridge
// targets are X w_true + noise * N(0, 1); logistic targets are the sign of
// the same score.
ProblemSpec gen_synthetic(const SyntheticOptions& opts);

}  // namespace qesgd
