#include "qesgd/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "qesgd/quant.hpp"

namespace qesgd {
namespace {

// ceil that ignores last-ulp noise, e.g. 1/(3 * (1/3) * 1) must give 1.
double tolerant_ceil(double x) {
  const double r = std::nearbyint(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return r;
  return std::ceil(x);
}

}  // namespace

std::string_view to_string(EtaRule r) {
  return r == EtaRule::kOneOverT ? "one-over-t" : "constant";
}
std::string_view to_string(EpochLengthRule r) {
  return r == EpochLengthRule::kCorollary ? "corollary" : "fixed";
}
std::string_view to_string(BitsRule r) {
  return r == BitsRule::kCorollary ? "corollary" : "fixed";
}
std::string_view to_string(DeltaRule r) {
  switch (r) {
    case DeltaRule::kLemma2Exact: return "lemma2-exact";
    case DeltaRule::kPractical: return "practical";
    case DeltaRule::kFixed: return "fixed";
  }
  return "?";
}

void ScheduleParams::validate() const {
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw std::invalid_argument("eta0 must be > 0");
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("c must be > 0");
  if (!(g0_norm >= 0.0)) throw std::invalid_argument("g0_norm must be >= 0");
  if (delta_rule == DeltaRule::kFixed && (!(fixed_delta > 0.0) || !std::isfinite(fixed_delta))) {
    throw std::invalid_argument("fixed delta must be > 0");
  }
  if (bits_min < 1 || bits_max > kMaxBits || bits_min > bits_max) {
    throw std::invalid_argument("bits range must satisfy 1 <= bits_min <= bits_max <= 16");
  }
  if (bits_rule == BitsRule::kFixed && (fixed_bits < bits_min || fixed_bits > bits_max)) {
    throw std::invalid_argument("fixed bits " + std::to_string(fixed_bits) + " outside [" +
                                std::to_string(bits_min) + ", " + std::to_string(bits_max) + "]");
  }
  if (epoch_rule == EpochLengthRule::kFixed && fixed_epoch_length < 1) {
    throw std::invalid_argument("fixed epoch length must be >= 1");
  }
  const bool needs_mu =
      epoch_rule == EpochLengthRule::kCorollary || delta_rule == DeltaRule::kLemma2Exact;
  if (needs_mu && !(mu > 0.0)) {
    throw std::invalid_argument(
        "the corollary epoch length and the lemma2-exact delta rule need mu > 0");
  }
  if (bits_rule == BitsRule::kCorollary && (!(kappa >= 1.0) || d < 1)) {
    throw std::invalid_argument("the corollary bits rule needs kappa >= 1 and d >= 1");
  }
}

void ScheduleParams::bind_problem(const ProblemSpec& spec, const Vector& w0) {
  mu = spec.mu();
  kappa = spec.kappa();
  d = spec.d();
  g0_norm = full_gradient(spec, w0).norm();
}

double schedule_eta(const ScheduleParams& s, std::int64_t t) {
  if (t < 0) throw std::invalid_argument("schedule_eta: t must be >= 0");
  return s.eta_rule == EtaRule::kConstant ? s.eta0 : s.eta0 / static_cast<double>(t + 1);
}

double unrounded_epoch_length(const ScheduleParams& s, std::int64_t t) {
  return 1.0 / (3.0 * s.mu * schedule_eta(s, t));
}

std::int64_t schedule_K(const ScheduleParams& s, std::int64_t t) {
  if (s.epoch_rule == EpochLengthRule::kFixed) return s.fixed_epoch_length;
  const double k = tolerant_ceil(unrounded_epoch_length(s, t));
  if (!(k < 1e15)) throw std::overflow_error("schedule_K: epoch length too large");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(k));
}

double unrounded_bits(const ScheduleParams& s, double epoch_length) {
  return std::log2(std::sqrt(s.kappa * static_cast<double>(s.d) * epoch_length));
}

int schedule_bits(const ScheduleParams& s, std::int64_t t) {
  if (s.bits_rule == BitsRule::kFixed) return s.fixed_bits;
  const double b =
      tolerant_ceil(unrounded_bits(s, static_cast<double>(schedule_K(s, t))));
  return static_cast<int>(std::clamp(b, static_cast<double>(s.bits_min),
                                     static_cast<double>(s.bits_max)));
}

double schedule_delta(const ScheduleParams& s, std::int64_t t, std::optional<double> grad_norm) {
  const double half_levels = std::ldexp(1.0, schedule_bits(s, t) - 1);
  double delta = 0.0;
  if (s.delta_rule == DeltaRule::kLemma2Exact) {
    if (!grad_norm) throw std::invalid_argument("lemma2-exact delta needs |grad F(w_t)|");
    if (!(*grad_norm >= 0.0)) throw std::invalid_argument("gradient norm must be >= 0");
    delta = *grad_norm / (s.mu * half_levels);
  } else if (s.delta_rule == DeltaRule::kFixed) {
    delta = s.fixed_delta;
  } else {
    if (!(s.g0_norm >= 0.0)) throw std::invalid_argument("g0_norm must be >= 0");
    delta = s.g0_norm / (s.c * std::sqrt(static_cast<double>(t + 1)) * half_levels);
  }
  return delta > 0.0 ? delta : std::numeric_limits<double>::min();
}

double contraction_coefficient(double mu, double eta, double epoch_length, double kappa,
                               std::size_t d, double bits) {
  return 1.0 / (mu * eta * epoch_length) +
         kappa * static_cast<double>(d) / (mu * eta * std::exp2(2.0 * bits));
}

}  // namespace qesgd
