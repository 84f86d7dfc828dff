#include "qesgd/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qesgd/quant.hpp"

namespace qesgd {
namespace {

std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void check_epoch_options(const ProblemSpec& spec, const EpochRunOptions& opts) {
  if (opts.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (opts.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (opts.w0.size() != 0 && static_cast<std::size_t>(opts.w0.size()) != spec.d()) {
    throw std::invalid_argument("w0 dimension does not match the problem");
  }
}

// Sum of per-sample gradients at u over a fresh batch.
void batch_gradient_sum(const ProblemSpec& spec, RandomSource& sampler, std::size_t batch_size,
                        const Vector& u, std::vector<std::size_t>& batch, Vector& g) {
  draw_batch(sampler, spec.n(), batch_size, batch);
  g.setZero();
  for (const std::size_t i : batch) accumulate_sample_gradient(spec, i, u, g);
}

RoundMetrics step_row(const ProblemSpec& spec, std::int64_t t, std::int64_t k,
                      const EpochPlan& plan, const Vector& u) {
  RoundMetrics r;
  r.t = t;
  r.k = k;
  r.eta = plan.eta;
  r.K = plan.K;
  r.bits = plan.bits;
  r.delta = plan.delta;
  r.suboptimality = suboptimality(spec, u);
  r.grad_norm = full_gradient(spec, u).norm();
  return r;
}

// Update direction hook shared by SGD and QSGD: turns the averaged batch
// gradient into the applied step direction (in place). Returns false when the
// step should be skipped.
using DirectionFn = bool (*)(Vector& g, const QsgdOptions* q, RandomSource& rng);

bool plain_direction(Vector&, const QsgdOptions*, RandomSource&) { return true; }

bool quantized_direction(Vector& g, const QsgdOptions* q, RandomSource& rng) {
  const double norm = g.norm();
  if (norm == 0.0) return false;
  const double delta =
      q->delta == QsgdDelta::kGradientNorm ? norm : norm / std::ldexp(1.0, q->bits - 1);
  const QuantizedVector qv = quantize_vector(view(g), QuantGrid(delta, q->bits), rng);
  qv.decode_into(view(g));
  return true;
}

TrajectoryRecord run_sgd_impl(const ProblemSpec& spec, const SgdOptions& opts,
                              const QsgdOptions* q, DirectionFn direction) {
  if (opts.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  Vector w = initial_point(spec, opts.w0);
  RandomSource sampler(opts.seed, kSampleStream);
  RandomSource quant_rng(opts.seed, kQuantStream);
  const auto inv_batch = 1.0 / static_cast<double>(opts.batch_size);
  const int bits = q ? q->bits : 0;
  std::vector<std::size_t> batch;
  Vector g(w.size());
  TrajectoryRecord traj;

  auto step = [&](double eta) {
    batch_gradient_sum(spec, sampler, opts.batch_size, w, batch, g);
    g *= inv_batch;
    if (direction(g, q, quant_rng)) w -= eta * g;
  };

  if (const auto* per_step = std::get_if<PerStepSchedule>(&opts.schedule)) {
    if (!(per_step->eta0 >= 0.0)) throw std::invalid_argument("eta0 must be >= 0");
    if (per_step->total_steps < 0 || per_step->report_every < 1) {
      throw std::invalid_argument("total_steps must be >= 0 and report_every >= 1");
    }
    for (std::int64_t s = 0;; ++s) {
      const double eta = per_step->rule == EtaRule::kConstant
                             ? per_step->eta0
                             : per_step->eta0 / static_cast<double>(s + 1);
      if (s % per_step->report_every == 0 || s == per_step->total_steps) {
        EpochPlan plan{eta, 1, bits, 0.0, 0.0};
        traj.append_anchor(anchor_row(spec, s, plan, w), w);
      }
      if (s == per_step->total_steps) break;
      step(eta);
    }
    return traj;
  }

  const auto& matched = std::get<EpochMatchedSchedule>(opts.schedule);
  matched.params.validate();
  if (matched.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  for (std::int64_t t = 0;; ++t) {
    EpochPlan plan{schedule_eta(matched.params, t), schedule_K(matched.params, t), bits, 0.0, 0.0};
    traj.append_anchor(anchor_row(spec, t, plan, w), w);
    if (t == matched.epochs) break;
    for (std::int64_t k = 0; k < plan.K; ++k) step(plan.eta);
  }
  return traj;
}

}  // namespace

void draw_batch(RandomSource& rng, std::size_t n, std::size_t batch_size,
                std::vector<std::size_t>& out) {
  out.resize(batch_size);
  for (auto& i : out) i = static_cast<std::size_t>(rng.uniform_index(n));
}

Vector initial_point(const ProblemSpec& spec, const Vector& w0) {
  if (w0.size() == 0) return Vector::Zero(static_cast<Eigen::Index>(spec.d()));
  if (static_cast<std::size_t>(w0.size()) != spec.d()) {
    throw std::invalid_argument("w0 dimension does not match the problem");
  }
  return w0;
}

EpochPlan plan_epoch(const ProblemSpec& spec, const ScheduleParams& s, std::int64_t t,
                     const Vector& w) {
  EpochPlan p;
  p.eta = schedule_eta(s, t);
  p.K = schedule_K(s, t);
  p.bits = schedule_bits(s, t);
  p.grad_norm = full_gradient(spec, w).norm();
  p.delta = schedule_delta(s, t, p.grad_norm);
  return p;
}

RoundMetrics anchor_row(const ProblemSpec& spec, std::int64_t t, const EpochPlan& plan,
                        const Vector& w) {
  RoundMetrics r;
  r.t = t;
  r.k = 0;
  r.eta = plan.eta;
  r.K = plan.K;
  r.bits = plan.bits;
  r.delta = plan.delta;
  r.suboptimality = suboptimality(spec, w);
  r.grad_norm = full_gradient(spec, w).norm();
  return r;
}

void quantize_displacement(std::span<const double> z_hat, double delta, int bits,
                           std::optional<std::size_t> bucket_size, RandomSource& rng,
                           std::span<double> z) {
  if (!bucket_size) {
    quantize_vector(z_hat, QuantGrid(delta, bits), rng).decode_into(z);
    return;
  }
  const auto buckets = quantize_bucketed(
      z_hat, *bucket_size, bits, rng,
      [delta](std::span<const double> b, int nbits) { return std::min(max_abs_delta(b, nbits), delta); });
  std::size_t offset = 0;
  for (const auto& b : buckets) {
    b.decode_into(z.subspan(offset, b.dim()));
    offset += b.dim();
  }
}

TrajectoryRecord run_sgd(const ProblemSpec& spec, const SgdOptions& opts) {
  return run_sgd_impl(spec, opts, nullptr, plain_direction);
}

TrajectoryRecord run_qsgd(const ProblemSpec& spec, const QsgdOptions& opts) {
  if (opts.bits < 1 || opts.bits > kMaxBits) {
    throw std::invalid_argument("qsgd bits must be in [1, 16]");
  }
  return run_sgd_impl(spec, opts.sgd, &opts, quantized_direction);
}

TrajectoryRecord run_epoch_sgd(const ProblemSpec& spec, const ScheduleParams& s,
                               const EpochRunOptions& opts) {
  s.validate();
  check_epoch_options(spec, opts);
  const auto d = static_cast<Eigen::Index>(spec.d());
  const auto batch_size = static_cast<double>(opts.batch_size);
  Vector w = initial_point(spec, opts.w0);
  RandomSource sampler(opts.seed, kSampleStream);
  std::vector<std::size_t> batch;
  Vector u(d), u_sum(d), g(d);
  TrajectoryRecord traj;

  for (std::int64_t t = 0;; ++t) {
    EpochPlan plan = plan_epoch(spec, s, t, w);
    plan.bits = 0;
    plan.delta = 0.0;
    traj.append_anchor(anchor_row(spec, t, plan, w), w);
    if (t == opts.epochs) break;

    u = w;
    u_sum.setZero();
    for (std::int64_t k = 0; k < plan.K; ++k) {
      if (opts.averaging == Averaging::kAsWritten) u_sum += u;
      batch_gradient_sum(spec, sampler, opts.batch_size, u, batch, g);
      u = u - (plan.eta / batch_size) * g;
      if (opts.averaging == Averaging::kSkipAnchor) u_sum += u;
      if (opts.emission == Emission::kPerStep) traj.append(step_row(spec, t, k + 1, plan, u));
    }
    w = u_sum / static_cast<double>(plan.K);
  }
  return traj;
}

TrajectoryRecord run_qesgd(const ProblemSpec& spec, const ScheduleParams& s,
                           const QesgdOptions& opts) {
  s.validate();
  check_epoch_options(spec, opts.run);
  if (opts.bucket_size && *opts.bucket_size < 1) {
    throw std::invalid_argument("bucket_size must be >= 1");
  }
  const auto d = static_cast<Eigen::Index>(spec.d());
  const auto batch_size = static_cast<double>(opts.run.batch_size);
  Vector w = initial_point(spec, opts.run.w0);
  RandomSource sampler(opts.run.seed, kSampleStream);
  RandomSource quant_rng(opts.run.seed, kQuantStream);
  std::vector<std::size_t> batch;
  Vector z(d), z_hat(d), z_sum(d), u(d), g(d);
  TrajectoryRecord traj;

  for (std::int64_t t = 0;; ++t) {
    const EpochPlan plan = plan_epoch(spec, s, t, w);
    traj.append_anchor(anchor_row(spec, t, plan, w), w);
    if (t == opts.run.epochs) break;

    z.setZero();
    z_sum.setZero();
    for (std::int64_t k = 0; k < plan.K; ++k) {
      u = w + z;
      if (opts.run.averaging == Averaging::kAsWritten) z_sum += z;
      batch_gradient_sum(spec, sampler, opts.run.batch_size, u, batch, g);
      z_hat = z - (plan.eta / batch_size) * g;
      if (opts.mode == QuantizerMode::kIdentity) {
        z = z_hat;
      } else {
        quantize_displacement(view(z_hat), plan.delta, plan.bits, opts.bucket_size, quant_rng,
                              view(z));
      }
      if (opts.run.averaging == Averaging::kSkipAnchor) z_sum += z;
      if (opts.run.emission == Emission::kPerStep) {
        u = w + z;
        traj.append(step_row(spec, t, k + 1, plan, u));
      }
    }
    w = w + z_sum / static_cast<double>(plan.K);
  }
  return traj;
}

}  // namespace qesgd
