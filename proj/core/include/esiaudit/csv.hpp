#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace esiaudit {

// Minimal RFC-4180 CSV support: quoted fields, embedded commas/quotes/
// newlines, header row required on read.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by header name; throws std::out_of_range on a missing column.
  size_t col(const std::string& name) const;

  const std::string& cell(size_t row, size_t column) const { return rows[row][column]; }

 private:
  mutable std::map<std::string, size_t> index_;
};

CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

}  // namespace esiaudit
