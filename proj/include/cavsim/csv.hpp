#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cavsim/errors.hpp"

namespace cavsim {

/// Numeric CSV with '#'-prefixed 'key: value' metadata lines before the
/// header row.  Writes are atomic (temp file + rename) with fixed formatting,
/// so identical inputs give byte-identical files.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  const std::string& meta(const std::string& key) const;
  bool has_meta(const std::string& key) const;
  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace cavsim
