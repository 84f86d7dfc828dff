#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "qesgd/problems.hpp"

namespace qesgd {

enum class EtaRule { kOneOverT, kConstant };
enum class EpochLengthRule { kCorollary, kFixed };
enum class BitsRule { kCorollary, kFixed };
enum class DeltaRule { kLemma2Exact, kPractical, kFixed };

std::string_view to_string(EtaRule r);
std::string_view to_string(EpochLengthRule r);
std::string_view to_string(BitsRule r);
std::string_view to_string(DeltaRule r);

// Per-epoch step size, epoch length, bit width and grid step.
//   eta_t = eta0 / (t + 1)                                  (one-over-t)
//   K_t   = max(1, ceil(1 / (3 mu eta_t)))                  (corollary)
//   b_t   = clamp(ceil(log2(sqrt(kappa d K_t))), min, max)  (corollary)
//   delta_t = |grad F(w_t)| / (mu 2^(b_t - 1))              (lemma2-exact)
//   delta_t = g0_norm / (c sqrt(t + 1) 2^(b_t - 1))         (practical)
//   delta_t = fixed_delta                                   (fixed)
struct ScheduleParams {
  double eta0 = 0.1;
  EtaRule eta_rule = EtaRule::kOneOverT;

  EpochLengthRule epoch_rule = EpochLengthRule::kCorollary;
  std::int64_t fixed_epoch_length = 1;

  BitsRule bits_rule = BitsRule::kCorollary;
  int fixed_bits = 8;
  int bits_min = 2;
  int bits_max = 16;

  DeltaRule delta_rule = DeltaRule::kPractical;
  double c = 3.0;
  double g0_norm = 0.0;
  double fixed_delta = 1e-3;

  double mu = 0.0;
  double kappa = 1.0;
  std::size_t d = 1;

  // Throws std::invalid_argument when a field is out of range or a rule is
  // missing the constants it needs.
  void validate() const;

  // Copies mu, kappa, d from the problem and caches |grad F(w0)|.
  void bind_problem(const ProblemSpec& spec, const Vector& w0);
};

double schedule_eta(const ScheduleParams& s, std::int64_t t);

// 1 / (3 mu eta_t) before rounding.
double unrounded_epoch_length(const ScheduleParams& s, std::int64_t t);
std::int64_t schedule_K(const ScheduleParams& s, std::int64_t t);

// log2(sqrt(kappa d K)) for a given K, before rounding or clamping.
double unrounded_bits(const ScheduleParams& s, double epoch_length);
int schedule_bits(const ScheduleParams& s, std::int64_t t);

// grad_norm is |grad F(w_t)| and is required by the lemma2-exact rule. A zero
// numerator yields the smallest positive normal double.
double schedule_delta(const ScheduleParams& s, std::int64_t t,
                      std::optional<double> grad_norm = std::nullopt);

// 1/(mu eta K) + kappa d / (mu eta 2^(2b)).
double contraction_coefficient(double mu, double eta, double epoch_length, double kappa,
                               std::size_t d, double bits);

}  // namespace qesgd
