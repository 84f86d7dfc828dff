#include "qesgd/compare.hpp"

#include <limits>
#include <stdexcept>

#include "qesgd/format.hpp"

namespace qesgd {
namespace {

double ratio(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace

ComparisonReport compare_methods(const std::vector<MethodSummary>& summaries) {
  if (summaries.size() < 2) {
    throw std::invalid_argument("compare needs at least two method summaries");
  }
  const auto& base = summaries.front();
  for (const auto& s : summaries) {
    if (s.problem_id != base.problem_id) {
      throw std::invalid_argument("summaries describe different problems: '" + base.problem_id +
                                  "' vs '" + s.problem_id + "'");
    }
  }
  ComparisonReport report;
  report.problem_id = base.problem_id;
  report.baseline = base.method;
  const auto base_down = static_cast<double>(base.downlink_bytes);
  const auto base_total = static_cast<double>(base.uplink_bytes + base.downlink_bytes);
  for (const auto& s : summaries) {
    ComparisonRow row;
    row.method = s.method;
    row.bits = s.bits;
    row.final_suboptimality = s.final_suboptimality;
    row.suboptimality_ratio = ratio(s.final_suboptimality, base.final_suboptimality);
    row.slope = s.slope;
    row.uplink_bytes = s.uplink_bytes;
    row.downlink_bytes = s.downlink_bytes;
    row.downlink_compression = ratio(base_down, static_cast<double>(s.downlink_bytes));
    row.total_compression =
        ratio(base_total, static_cast<double>(s.uplink_bytes + s.downlink_bytes));
    report.rows.push_back(row);
  }
  return report;
}

std::string to_markdown(const ComparisonReport& report) {
  std::string out = "problem: " + report.problem_id + "\nbaseline: " + report.baseline + "\n\n";
  out +=
      "| method | bits | final subopt | ratio vs baseline | slope | uplink bytes | downlink "
      "bytes | downlink compression | total compression |\n";
  out += "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : report.rows) {
    out += "| " + r.method + " | " + std::to_string(r.bits) + " | " +
           format_double(r.final_suboptimality) + " | " + format_double(r.suboptimality_ratio) +
           " | " + format_double(r.slope) + " | " + std::to_string(r.uplink_bytes) + " | " +
           std::to_string(r.downlink_bytes) + " | " + format_double(r.downlink_compression) +
           " | " + format_double(r.total_compression) + " |\n";
  }
  return out;
}

std::string to_csv(const ComparisonReport& report) {
  std::string out =
      "method,bits,final_suboptimality,suboptimality_ratio,slope,uplink_bytes,downlink_bytes,"
      "downlink_compression,total_compression\n";
  for (const auto& r : report.rows) {
    out += r.method + "," + std::to_string(r.bits) + "," + format_double(r.final_suboptimality) +
           "," + format_double(r.suboptimality_ratio) + "," + format_double(r.slope) + "," +
           std::to_string(r.uplink_bytes) + "," + std::to_string(r.downlink_bytes) + "," +
           format_double(r.downlink_compression) + "," + format_double(r.total_compression) +
           "\n";
  }
  return out;
}

}  // namespace qesgd
