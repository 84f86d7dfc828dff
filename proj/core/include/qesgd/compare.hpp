#pragma once

#include <string>
#include <vector>

#include "qesgd/experiment.hpp"

namespace qesgd {

struct ComparisonRow {
  std::string method;
  int bits = 32;
  double final_suboptimality = 0.0;
  double suboptimality_ratio = 0.0;  // method / baseline
  double slope = 0.0;
  std::uint64_t uplink_bytes = 0;
  std::uint64_t downlink_bytes = 0;
  double downlink_compression = 0.0;  // baseline downlink / method downlink
  double total_compression = 0.0;     // same for uplink + downlink
};

struct ComparisonReport {
  std::string problem_id;
  std::string baseline;
  std::vector<ComparisonRow> rows;
};

// The first summary is the baseline. Throws std::invalid_argument for fewer
// than two summaries or summaries from different problems.
ComparisonReport compare_methods(const std::vector<MethodSummary>& summaries);

std::string to_markdown(const ComparisonReport& report);
std::string to_csv(const ComparisonReport& report);

}  // namespace qesgd
