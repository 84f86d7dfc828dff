#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qesgd/config.hpp"
#include "qesgd/messages.hpp"
#include "qesgd/problems.hpp"
#include "qesgd/schedule.hpp"
#include "qesgd/trajectory.hpp"

namespace qesgd {

// Synthetic problem from the [problem] block, or the CSV dataset it names.
ProblemSpec build_problem(const ProblemBlock& block);

// Short identifier used to check that summaries describe the same problem.
std::string problem_id(const ProblemBlock& block);

// Schedule for the [method] block, bound to spec at w0 = 0.
ScheduleParams build_schedule(const MethodBlock& block, const ProblemSpec& spec);

struct CellResult {
  TrajectoryRecord trajectory;
  std::vector<LogEntry> trace;  // qesgd with output.trace only
  std::uint64_t rounds = 0;
};

// One (method, seed) run. QESGD goes through the parameter-server simulator
// so its byte counters are measured; the other methods get modeled counters
// for p workers: dense pushes and dense parameter broadcasts of 16 + 4d bytes
// each, except that QSGD pushes codec frames of b bits per coordinate.
CellResult run_cell(const ProblemSpec& spec, const ExperimentConfig& config, MethodKind method,
                    std::uint64_t seed);

struct MethodSummary {
  std::string method;
  std::string problem_id;
  std::size_t seeds = 0;
  int bits = 32;  // last-epoch width; 32 for full precision
  double initial_suboptimality = 0.0;  // medians across seeds
  double final_suboptimality = 0.0;
  double slope = 0.0;  // NaN when the fit window is too small
  double r2 = 0.0;
  std::uint64_t uplink_bytes = 0;
  std::uint64_t downlink_bytes = 0;
  std::uint64_t rounds = 0;

  friend bool operator==(const MethodSummary&, const MethodSummary&) = default;
};

struct MethodResult {
  MethodSummary summary;
  // Per emitted row, the median suboptimality across seeds (first seed's
  // schedule columns).
  std::vector<RoundMetrics> median_rows;
};

struct ExperimentResult {
  std::vector<MethodResult> methods;
  std::vector<std::filesystem::path> files;
};

// Runs every method over every seed. With an output directory it writes
// <method>_seed<s>.csv per cell, summary.csv, and <method>_seed<s>.trace when
// traces are requested; with std::nullopt nothing touches the disk.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir);

inline constexpr std::string_view kSummaryCsvHeader =
    "method,problem_id,seeds,bits,initial_suboptimality,final_suboptimality,slope,r2,"
    "uplink_bytes,downlink_bytes,rounds";

void write_summary_csv(std::ostream& os, const std::vector<MethodSummary>& rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<MethodSummary>& rows);
std::vector<MethodSummary> read_summary_csv(std::istream& is);
std::vector<MethodSummary> read_summary_csv(const std::filesystem::path& path);

}  // namespace qesgd
