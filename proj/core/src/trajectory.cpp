#include "qesgd/trajectory.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qesgd/format.hpp"

namespace qesgd {

void TrajectoryRecord::append(const RoundMetrics& row) {
  if (!rows_.empty()) {
    const auto& prev = rows_.back();
    const bool ordered = row.t > prev.t || (row.t == prev.t && row.k > prev.k);
    if (!ordered) throw std::logic_error("TrajectoryRecord: rows must be ordered by (t, k)");
  }
  rows_.push_back(row);
}

void TrajectoryRecord::append_anchor(const RoundMetrics& row, const Vector& w) {
  append(row);
  anchors_.push_back(w);
}

std::vector<RoundMetrics> TrajectoryRecord::epoch_rows() const {
  std::vector<RoundMetrics> out;
  for (const auto& r : rows_)
    if (r.k == 0) out.push_back(r);
  return out;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& traj) {
  std::string buf;
  buf += kTrajectoryCsvHeader;
  buf += '\n';
  for (const auto& r : traj.rows()) {
    buf += std::to_string(r.t) + ',' + std::to_string(r.k) + ',' + format_double(r.eta) + ',' +
           std::to_string(r.K) + ',' + std::to_string(r.bits) + ',' + format_double(r.delta) +
           ',' + format_double(r.suboptimality) + ',' + format_double(r.grad_norm) + ',' +
           std::to_string(r.uplink_bytes) + ',' + std::to_string(r.downlink_bytes) + '\n';
  }
  os << buf;
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_trajectory_csv(os, traj);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<RoundMetrics> read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kTrajectoryCsvHeader) {
    throw std::invalid_argument("trajectory csv: missing or unexpected header");
  }
  std::vector<RoundMetrics> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    RoundMetrics r;
    const bool ok = f.size() == 10 && parse_int(f[0], r.t) && parse_int(f[1], r.k) &&
                    parse_double(f[2], r.eta) && parse_int(f[3], r.K) && parse_int(f[4], r.bits) &&
                    parse_double(f[5], r.delta) && parse_double(f[6], r.suboptimality) &&
                    parse_double(f[7], r.grad_norm) && parse_int(f[8], r.uplink_bytes) &&
                    parse_int(f[9], r.downlink_bytes);
    if (!ok) throw std::invalid_argument("trajectory csv: bad row at line " + std::to_string(line_no));
    rows.push_back(r);
  }
  return rows;
}

std::vector<RoundMetrics> read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_trajectory_csv(is);
}

}  // namespace qesgd
