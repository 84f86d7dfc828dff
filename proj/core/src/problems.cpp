#include "qesgd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "qesgd/random_source.hpp"

namespace qesgd {
namespace {

// log(1 + exp(-m))
double softplus_neg(double m) {
  return std::log1p(std::exp(-std::abs(m))) + std::max(-m, 0.0);
}

// 1 / (1 + exp(m))
double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

void check_dim(const ProblemSpec& spec, const Vector& w) {
  if (static_cast<std::size_t>(w.size()) != spec.d()) {
    throw std::invalid_argument("dimension mismatch: expected " + std::to_string(spec.d()) +
                                ", got " + std::to_string(w.size()));
  }
}

double objective(ProblemKind kind, const Dataset& data, double lambda, const Vector& w) {
  const Vector scores = data.features * w;
  double loss = 0.0;
  if (kind == ProblemKind::kRidge) {
    loss = 0.5 * (scores - data.targets).squaredNorm() / static_cast<double>(data.n());
  } else {
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      loss += softplus_neg(data.targets[i] * scores[i]);
    }
    loss /= static_cast<double>(data.n());
  }
  return loss + 0.5 * lambda * w.squaredNorm();
}

Vector gradient(ProblemKind kind, const Dataset& data, double lambda, const Vector& w) {
  const Vector scores = data.features * w;
  Vector weights(scores.size());
  if (kind == ProblemKind::kRidge) {
    weights = scores - data.targets;
  } else {
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      weights[i] = -data.targets[i] * sigmoid_neg(data.targets[i] * scores[i]);
    }
  }
  Vector g = data.features.transpose() * weights / static_cast<double>(data.n());
  g += lambda * w;
  return g;
}

Eigen::MatrixXd gram(const Dataset& data) {
  return data.features.transpose() * data.features / static_cast<double>(data.n());
}

Optimum solve_ridge(const Dataset& data, double lambda) {
  Eigen::MatrixXd h = gram(data);
  h.diagonal().array() += lambda;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 1.0);
  if (eig.eigenvalues().minCoeff() <= 1e-12 * top) {
    throw std::domain_error(
        "ridge normal equations are singular (rank-deficient features); use lambda > 0");
  }
  const Vector rhs = data.features.transpose() * data.targets / static_cast<double>(data.n());
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  Vector w = ldlt.solve(rhs);
  // One step of iterative refinement.
  w += ldlt.solve(rhs - h * w);
  return {w, objective(ProblemKind::kRidge, data, lambda, w)};
}

Optimum solve_logistic(const Dataset& data, double lambda) {
  const auto kind = ProblemKind::kLogisticL2;
  const std::size_t d = data.d();
  const double n = static_cast<double>(data.n());
  Vector w = Vector::Zero(static_cast<Eigen::Index>(d));
  double f = objective(kind, data, lambda, w);
  for (int iter = 0; iter < 200; ++iter) {
    const Vector g = gradient(kind, data, lambda, w);
    if (g.norm() <= kOptimumGradientTolerance) return {w, f};

    const Vector scores = data.features * w;
    Vector curvature(scores.size());
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      const double s = sigmoid_neg(data.targets[i] * scores[i]);
      curvature[i] = s * (1.0 - s);
    }
    Eigen::MatrixXd h = data.features.transpose() * curvature.asDiagonal() * data.features / n;
    h.diagonal().array() += lambda;
    const Vector step = h.ldlt().solve(-g);

    // Armijo backtracking on F.
    double t = 1.0;
    const double slope = g.dot(step);
    Vector next = w + step;
    double f_next = objective(kind, data, lambda, next);
    const bool flat = -slope <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
    bool accepted = flat || f_next <= f + 1e-4 * t * slope;
    while (!accepted && t > 1e-12) {
      t *= 0.5;
      next = w + t * step;
      f_next = objective(kind, data, lambda, next);
      accepted = f_next <= f + 1e-4 * t * slope;
    }
    if (!accepted) {
      next = w + step;
      f_next = objective(kind, data, lambda, next);
    }
    w = std::move(next);
    f = f_next;
  }
  if (gradient(kind, data, lambda, w).norm() <= kOptimumGradientTolerance) return {w, f};
  throw std::runtime_error("logistic optimum: Newton iteration did not reach |grad| <= 1e-10");
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  return kind == ProblemKind::kRidge ? "ridge" : "logistic-l2";
}

ProblemKind parse_problem_kind(std::string_view text) {
  if (text == "ridge") return ProblemKind::kRidge;
  if (text == "logistic-l2" || text == "logistic") return ProblemKind::kLogisticL2;
  throw std::invalid_argument("unknown problem kind '" + std::string(text) +
                              "' (expected ridge | logistic-l2)");
}

void Dataset::validate(ProblemKind kind) const {
  if (n() == 0 || d() == 0) throw std::invalid_argument("dataset: n and d must be >= 1");
  if (static_cast<std::size_t>(targets.size()) != n()) {
    throw std::invalid_argument("dataset: targets length does not match the number of rows");
  }
  if (!features.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("dataset: non-finite entries");
  }
  if (kind == ProblemKind::kLogisticL2) {
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      if (targets[i] != 1.0 && targets[i] != -1.0) {
        throw std::invalid_argument("dataset: logistic targets must be -1 or +1 (row " +
                                    std::to_string(i) + ")");
      }
    }
  }
}

ProblemSpec ProblemSpec::create(ProblemKind kind, Dataset data, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
  if (kind == ProblemKind::kLogisticL2 && lambda <= 0.0) {
    throw std::invalid_argument("logistic-l2 needs lambda > 0 to be strongly convex");
  }
  data.validate(kind);
  ProblemSpec spec(kind, std::move(data), lambda);
  spec.optimum_ = solve_exact(kind, spec.data_, lambda);
  spec.constants_ = estimate_constants(kind, spec.data_, lambda, spec.optimum_.w_star);
  return spec;
}

double sample_loss(const ProblemSpec& spec, std::size_t i, const Vector& w) {
  check_dim(spec, w);
  const auto x = spec.data().features.row(static_cast<Eigen::Index>(i));
  const double y = spec.data().targets[static_cast<Eigen::Index>(i)];
  const double score = x.dot(w);
  const double reg = 0.5 * spec.lambda() * w.squaredNorm();
  if (spec.kind() == ProblemKind::kRidge) {
    const double r = score - y;
    return 0.5 * r * r + reg;
  }
  return softplus_neg(y * score) + reg;
}

void accumulate_sample_gradient(const ProblemSpec& spec, std::size_t i, const Vector& w,
                                Vector& acc) {
  const auto x = spec.data().features.row(static_cast<Eigen::Index>(i));
  const double y = spec.data().targets[static_cast<Eigen::Index>(i)];
  const double score = x.dot(w);
  const double weight = spec.kind() == ProblemKind::kRidge ? score - y
                                                           : -y * sigmoid_neg(y * score);
  acc.noalias() += weight * x.transpose();
  acc.noalias() += spec.lambda() * w;
}

double full_objective(const ProblemSpec& spec, const Vector& w) {
  check_dim(spec, w);
  return objective(spec.kind(), spec.data(), spec.lambda(), w);
}

Vector full_gradient(const ProblemSpec& spec, const Vector& w) {
  check_dim(spec, w);
  return gradient(spec.kind(), spec.data(), spec.lambda(), w);
}

Vector stochastic_gradient(const ProblemSpec& spec, const Vector& w,
                           std::span<const std::size_t> indices) {
  check_dim(spec, w);
  if (indices.empty()) throw std::invalid_argument("stochastic_gradient: empty batch");
  Vector acc = Vector::Zero(w.size());
  for (const std::size_t i : indices) {
    if (i >= spec.n()) {
      throw std::out_of_range("stochastic_gradient: sample index " + std::to_string(i) +
                              " out of range");
    }
    accumulate_sample_gradient(spec, i, w, acc);
  }
  return acc / static_cast<double>(indices.size());
}

double suboptimality(const ProblemSpec& spec, const Vector& w) {
  return full_objective(spec, w) - spec.f_star();
}

Optimum solve_exact(ProblemKind kind, const Dataset& data, double lambda) {
  return kind == ProblemKind::kRidge ? solve_ridge(data, lambda) : solve_logistic(data, lambda);
}

Optimum solve_exact(const ProblemSpec& spec) {
  return solve_exact(spec.kind(), spec.data(), spec.lambda());
}

Constants estimate_constants(ProblemKind kind, const Dataset& data, double lambda,
                             const Vector& w_star) {
  Constants c;
  const Eigen::MatrixXd g = gram(data);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  if (kind == ProblemKind::kRidge) {
    c.mu = eig.eigenvalues().minCoeff() + lambda;
    c.L = eig.eigenvalues().maxCoeff() + lambda;
  } else {
    c.mu = lambda;
    c.L = eig.eigenvalues().maxCoeff() / 4.0 + lambda;
  }

  const std::size_t d = data.d();
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(d));
  double max_norm = 0.0;
  for (const Vector* w : {&zero, &w_star}) {
    const Vector scores = data.features * *w;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      const double y = data.targets[i];
      const double weight =
          kind == ProblemKind::kRidge ? scores[i] - y : -y * sigmoid_neg(y * scores[i]);
      const Vector gi = weight * data.features.row(i).transpose() + lambda * *w;
      max_norm = std::max(max_norm, gi.norm());
    }
  }
  c.G = 2.0 * max_norm;
  return c;
}

Constants estimate_constants(const ProblemSpec& spec) {
  return estimate_constants(spec.kind(), spec.data(), spec.lambda(), spec.w_star());
}

ProblemSpec gen_synthetic(const SyntheticOptions& opts) {
  if (opts.d == 0 || opts.n < opts.d) {
    throw std::invalid_argument("gen_synthetic: need n >= d >= 1");
  }
  if (!(opts.condition_target >= 1.0) || !std::isfinite(opts.condition_target)) {
    throw std::invalid_argument("gen_synthetic: condition_target must be >= 1");
  }
  if (!(opts.noise >= 0.0)) throw std::invalid_argument("gen_synthetic: noise must be >= 0");

  const auto n = static_cast<Eigen::Index>(opts.n);
  const auto d = static_cast<Eigen::Index>(opts.d);

  // Smallest eigenvalue of X^T X / n so that the target ratio is met.
  double floor_eig = 1.0 / opts.condition_target;
  if (opts.kind == ProblemKind::kRidge) {
    floor_eig = (1.0 + opts.lambda) / opts.condition_target - opts.lambda;
    if (!(floor_eig > 0.0)) {
      throw std::invalid_argument(
          "gen_synthetic: condition_target unreachable with this lambda");
    }
  }

  RandomSource rng(opts.seed, kDataStream);
  auto gaussian = [&rng](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
  };

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr_n(gaussian(n, d));
  const Eigen::MatrixXd q = qr_n.householderQ() * Eigen::MatrixXd::Identity(n, d);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr_d(gaussian(d, d));
  const Eigen::MatrixXd v = qr_d.householderQ() * Eigen::MatrixXd::Identity(d, d);

  Vector s(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double frac = d == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(d - 1);
    s[j] = std::sqrt(std::pow(floor_eig, frac));
  }

  Dataset data;
  data.features = std::sqrt(static_cast<double>(n)) * q * s.asDiagonal() * v.transpose();

  Vector w_true(d);
  for (Eigen::Index j = 0; j < d; ++j) w_true[j] = rng.normal();
  w_true /= w_true.norm();

  data.targets = data.features * w_true;
  for (Eigen::Index i = 0; i < n; ++i) {
    data.targets[i] += opts.noise * rng.normal();
    if (opts.kind == ProblemKind::kLogisticL2) data.targets[i] = data.targets[i] >= 0.0 ? 1.0 : -1.0;
  }
  return ProblemSpec::create(opts.kind, std::move(data), opts.lambda);
}

}  // namespace qesgd
