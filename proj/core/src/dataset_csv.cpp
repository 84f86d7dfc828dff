#include "qesgd/dataset_csv.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qesgd/format.hpp"

namespace qesgd {
namespace {

bool parse_row(std::string_view line, std::vector<double>& row) {
  row.clear();
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    const auto field = trim(line.substr(start, comma == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : comma - start));
    double v = 0.0;
    if (!parse_double(field, v)) return false;
    row.push_back(v);
    if (comma == std::string_view::npos) return true;
    start = comma + 1;
  }
}

}  // namespace

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::string line;
    for (std::size_t j = 0; j < data.d(); ++j) {
      line += format_double(data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      line += ',';
    }
    line += format_double(data.targets[static_cast<Eigen::Index>(i)]);
    line += '\n';
    os << line;
  }
}

Dataset read_dataset_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!parse_row(line, row)) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw std::invalid_argument("dataset csv: unparsable row at line " + std::to_string(line_no));
    }
    if (row.size() < 2) {
      throw std::invalid_argument("dataset csv: need at least one feature and a target (line " +
                                  std::to_string(line_no) + ")");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("dataset csv: ragged row at line " + std::to_string(line_no));
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw std::invalid_argument("dataset csv: no rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size() - 1);
  Dataset data;
  data.features.resize(n, d);
  data.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = r[static_cast<std::size_t>(j)];
    data.targets[i] = r.back();
  }
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_dataset_csv(os, data);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_dataset_csv(is);
}

}  // namespace qesgd
