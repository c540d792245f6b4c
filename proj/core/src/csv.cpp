#include "esiaudit/csv.hpp"

#include <fstream>
#include <stdexcept>

namespace esiaudit {

size_t CsvTable::col(const std::string& name) const {
  if (index_.empty())
    for (size_t i = 0; i < header.size(); ++i) index_[header[i]] = i;
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("csv: no column named " + name);
  return it->second;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open " + path.string());

  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any_field = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    any_field = true;
  };
  auto end_record = [&] {
    if (!any_field && field.empty()) return;  // skip blank lines
    end_field();
    if (table.header.empty())
      table.header = std::move(record);
    else
      table.rows.push_back(std::move(record));
    record.clear();
    any_field = false;
  };

  for (size_t i = 0; i < data.size(); ++i) {
    char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
    } else {
      field += c;
    }
  }
  if (!field.empty() || any_field) end_record();
  return table;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_escape(fields[i]);
  }
  os << '\n';
}

}  // namespace esiaudit
