#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "qesgd/problems.hpp"

namespace qesgd {

// One emitted row. k == 0 rows describe the epoch anchor w_t together with the
// schedule values of epoch t; k > 0 rows (per-step emission) describe the
// inner iterate u_{t,k}. Byte counters are cumulative.
struct RoundMetrics {
  std::int64_t t = 0;
  std::int64_t k = 0;
  double eta = 0.0;
  std::int64_t K = 0;
  int bits = 0;
  double delta = 0.0;
  double suboptimality = 0.0;
  double grad_norm = 0.0;
  std::uint64_t uplink_bytes = 0;
  std::uint64_t downlink_bytes = 0;
};

// Append-only, ordered by (t, k). Anchors hold w_t for each k == 0 row.
class TrajectoryRecord {
 public:
  // Throws std::logic_error if (t, k) does not strictly follow the last row.
  void append(const RoundMetrics& row);
  void append_anchor(const RoundMetrics& row, const Vector& w);

  const std::vector<RoundMetrics>& rows() const { return rows_; }
  const std::vector<Vector>& anchors() const { return anchors_; }

  std::vector<RoundMetrics> epoch_rows() const;
  const RoundMetrics& last() const { return rows_.back(); }
  const Vector& final_point() const { return anchors_.back(); }
  bool empty() const { return rows_.empty(); }

 private:
  std::vector<RoundMetrics> rows_;
  std::vector<Vector> anchors_;
};

inline constexpr std::string_view kTrajectoryCsvHeader =
    "t,k,eta,K,bits,delta,suboptimality,grad_norm,uplink_bytes,downlink_bytes";

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& traj);
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj);
std::vector<RoundMetrics> read_trajectory_csv(std::istream& is);
std::vector<RoundMetrics> read_trajectory_csv(const std::filesystem::path& path);

}  // namespace qesgd
