#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qesgd/optimizers.hpp"
#include "qesgd/problems.hpp"
#include "qesgd/schedule.hpp"

namespace qesgd {

enum class MethodKind { kSgd, kEpochSgd, kQesgd, kQsgd };

std::string_view to_string(MethodKind m);

struct ProblemBlock {
  ProblemKind kind = ProblemKind::kRidge;
  std::size_t n = 1000;
  std::size_t d = 20;
  double lambda = 0.0;
  double condition_target = 50.0;
  double noise = 0.1;
  std::uint64_t seed = 7;
  std::string data;  // optional CSV path; replaces the synthetic generator

  friend bool operator==(const ProblemBlock&, const ProblemBlock&) = default;
};

struct MethodBlock {
  std::vector<MethodKind> names{MethodKind::kQesgd};
  double eta0 = 0.05;
  EtaRule eta_rule = EtaRule::kOneOverT;
  EpochLengthRule epoch_rule = EpochLengthRule::kCorollary;
  std::int64_t K = 1;  // used by the fixed epoch rule
  BitsRule bits_rule = BitsRule::kCorollary;
  int bits = 8;  // fixed bit width; also the QSGD width
  int bits_max = 16;
  DeltaRule delta_rule = DeltaRule::kPractical;
  double c = 3.0;
  double delta = 1e-3;  // used by the fixed delta rule
  std::optional<std::size_t> bucket_size;
  QsgdDelta qsgd_delta = QsgdDelta::kGradientNorm;
  Averaging averaging = Averaging::kAsWritten;

  friend bool operator==(const MethodBlock&, const MethodBlock&) = default;
};

struct RunBlock {
  std::int64_t epochs = 50;                  // T
  std::optional<std::int64_t> total_steps;  // per-step SGD/QSGD instead of epochs
  std::vector<std::uint64_t> seeds{1};
  std::size_t workers = 1;     // p
  std::size_t batch_size = 1;  // B
  std::int64_t report_every = 1;

  friend bool operator==(const RunBlock&, const RunBlock&) = default;
};

struct OutputBlock {
  std::string dir = "out";
  Emission emission = Emission::kPerEpoch;
  bool trace = false;
  std::int64_t fit_lo = 10;
  std::int64_t fit_hi = -1;  // -1: last epoch

  friend bool operator==(const OutputBlock&, const OutputBlock&) = default;
};

struct ExperimentConfig {
  ProblemBlock problem;
  MethodBlock method;
  RunBlock run;
  OutputBlock output;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct ConfigDiagnostic {
  std::size_t line = 0;  // 0 when the problem is not tied to one line
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigDiagnostic> diagnostics);
  const std::vector<ConfigDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<ConfigDiagnostic> diagnostics_;
};

// INI-style text with [problem], [method], [run] and [output] sections.
// '#' and ';' start comments. Unknown sections or keys, malformed values and
// out-of-range values are all collected and thrown as one ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

// Canonical text with every key written out; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace qesgd
