#include "cavsim/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cavsim {

const std::string& CsvTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  throw validation_error("csv: missing metadata '" + key + "'");
}

bool CsvTable::has_meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return true;
  return false;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> parts;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) parts.push_back(trim(cell));
  return parts;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("csv: cannot open '" + path + "'");

  CsvTable table;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      const std::string body = trim(trimmed.substr(1));
      const size_t colon = body.find(':');
      if (colon != std::string::npos)
        table.metadata.emplace_back(trim(body.substr(0, colon)), trim(body.substr(colon + 1)));
      continue;
    }
    if (!header_seen) {
      table.header = split_commas(trimmed);
      if (table.header.empty())
        throw validation_error(path + ":" + std::to_string(line_no) + ": empty header row");
      header_seen = true;
      continue;
    }
    const std::vector<std::string> cells = split_commas(trimmed);
    if (cells.size() != table.header.size())
      throw validation_error(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " columns, got " +
                             std::to_string(cells.size()));
    std::vector<double> row;
    for (size_t c = 0; c < cells.size(); ++c) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument("junk");
      } catch (const std::exception&) {
        throw validation_error(path + ":" + std::to_string(line_no) + ": column " +
                               std::to_string(c + 1) + " ('" + cells[c] + "') is not numeric");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) throw validation_error(path + ": no header row");
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path temp = target.string() + ".tmp";

  {
    std::ofstream out(temp, std::ios::trunc);
    if (!out) throw numeric_error("csv: cannot write '" + temp.string() + "'");
    for (const auto& [k, v] : table.metadata) out << "# " << k << ": " << v << "\n";
    for (size_t i = 0; i < table.header.size(); ++i)
      out << table.header[i] << (i + 1 < table.header.size() ? "," : "");
    out << "\n";
    char buffer[64];
    for (const std::vector<double>& row : table.rows) {
      if (row.size() != table.header.size())
        throw validation_error("csv: row width does not match header");
      for (size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buffer, sizeof buffer, "%.12g", row[i]);
        out << buffer << (i + 1 < row.size() ? "," : "");
      }
      out << "\n";
    }
  }
  std::filesystem::rename(temp, target);
}

}  // namespace cavsim
