#pragma once

#include <filesystem>
#include <iosfwd>

#include "qesgd/problems.hpp"

namespace qesgd {

// One row per sample: d feature columns, then the target. No header row is
// written; on read, a first line that does not parse as numbers is skipped.
// Values are written in shortest round-trip form, so write/read is lossless.
void write_dataset_csv(std::ostream& os, const Dataset& data);
// Malformed or ragged rows throw std::invalid_argument.
Dataset read_dataset_csv(std::istream& is);

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace qesgd
