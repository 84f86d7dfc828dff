#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qesgd/problems.hpp"
#include "qesgd/random_source.hpp"
#include "qesgd/schedule.hpp"
#include "qesgd/trajectory.hpp"

namespace qesgd {

// Which inner iterates form the next anchor: u_{t,0..K-1} as the algorithms
// write it, or u_{t,1..K}. With K_t = 1 the first choice never moves.
enum class Averaging { kAsWritten, kSkipAnchor };
enum class Emission { kPerEpoch, kPerStep };
// kIdentity skips quantization of z; used to check the reduction to Epoch-SGD.
enum class QuantizerMode { kGrid, kIdentity };

struct EpochRunOptions {
  std::int64_t epochs = 0;  // T; T = 0 returns w0
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  Averaging averaging = Averaging::kAsWritten;
  Emission emission = Emission::kPerEpoch;
  Vector w0;  // empty means the zero vector
};

struct QesgdOptions {
  EpochRunOptions run;
  std::optional<std::size_t> bucket_size;
  QuantizerMode mode = QuantizerMode::kGrid;
};

// Plain per-step schedule: eta_s = eta0 / (s + 1) or eta0.
struct PerStepSchedule {
  double eta0 = 0.1;
  EtaRule rule = EtaRule::kOneOverT;
  std::int64_t total_steps = 0;
  std::int64_t report_every = 1;
};

// K_t steps at eta_t for each epoch, matching an Epoch-SGD run step for step.
struct EpochMatchedSchedule {
  ScheduleParams params;
  std::int64_t epochs = 0;
};

struct SgdOptions {
  std::variant<PerStepSchedule, EpochMatchedSchedule> schedule;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  Vector w0;
};

// Literal: delta = |g|. Scaled: delta = |g| / 2^(b-1).
enum class QsgdDelta { kGradientNorm, kScaledNorm };

struct QsgdOptions {
  SgdOptions sgd;
  int bits = 8;
  QsgdDelta delta = QsgdDelta::kGradientNorm;
};

// Draws batch_size indices uniformly with replacement.
void draw_batch(RandomSource& rng, std::size_t n, std::size_t batch_size,
                std::vector<std::size_t>& out);

Vector initial_point(const ProblemSpec& spec, const Vector& w0);

// Schedule values for one epoch, evaluated at anchor w.
struct EpochPlan {
  double eta = 0.0;
  std::int64_t K = 1;
  int bits = 0;
  double delta = 0.0;
  double grad_norm = 0.0;
};
EpochPlan plan_epoch(const ProblemSpec& spec, const ScheduleParams& s, std::int64_t t,
                     const Vector& w);

// Row for anchor w at epoch t (suboptimality and |grad F| filled in).
RoundMetrics anchor_row(const ProblemSpec& spec, std::int64_t t, const EpochPlan& plan,
                        const Vector& w);

// Quantizes the displacement z_hat into z using grid (delta, bits); with a
// bucket size each bucket gets min(max-abs rule, delta) as its own step.
void quantize_displacement(std::span<const double> z_hat, double delta, int bits,
                           std::optional<std::size_t> bucket_size, RandomSource& rng,
                           std::span<double> z);

// Mini-batch SGD, w <- w - eta/|B| sum grad f_i(w).
TrajectoryRecord run_sgd(const ProblemSpec& spec, const SgdOptions& opts);

// Epoch-SGD: K_t plain steps at eta_t from the anchor, next anchor is the
// average of the inner iterates. The schedule must already carry mu, kappa,
// d (see ScheduleParams::bind_problem).
TrajectoryRecord run_epoch_sgd(const ProblemSpec& spec, const ScheduleParams& s,
                               const EpochRunOptions& opts);

// Quantized Epoch-SGD. Inner state is the displacement z from the anchor; after
// each step z is re-quantized on the (delta_t, b_t) grid and u = w_t + z. The
// next anchor is w_t + (1/K_t) sum_k z_{t,k} with z_{t,0} = 0, which is the
// average of the u_{t,k}.
TrajectoryRecord run_qesgd(const ProblemSpec& spec, const ScheduleParams& s,
                           const QesgdOptions& opts);

// SGD on stochastically quantized gradients.
TrajectoryRecord run_qsgd(const ProblemSpec& spec, const QsgdOptions& opts);

}  // namespace qesgd
