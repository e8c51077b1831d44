#include "skinbreather/csv.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace skinbreather {

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("csv: no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(row[i]);
  }
  out << "\r\n";
}

// One record, possibly spanning lines inside quotes. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false, started = false;
  char c;
  while (in.get(c)) {
    started = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else if (c == '\n') {
      break;
    } else {
      field += c;
    }
  }
  if (quoted) throw std::runtime_error("csv: unterminated quoted field");
  if (started) fields.push_back(std::move(field));
  return started;
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  out << "# " << table.manifest.dump() << "\r\n";
  write_row(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::logic_error("csv: row width does not match header");
    write_row(out, row);
  }
}

void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, table);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string first;
  if (!std::getline(in, first) || first.rfind("# ", 0) != 0) throw std::runtime_error("csv: missing manifest line");
  if (!first.empty() && first.back() == '\r') first.pop_back();
  try {
    table.manifest = nlohmann::json::parse(first.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("csv: bad manifest: ") + e.what());
  }
  if (!read_record(in, table.header)) throw std::runtime_error("csv: missing header row");
  std::vector<std::string> row;
  while (read_record(in, row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != table.header.size()) throw std::runtime_error("csv: row width does not match header");
    table.rows.push_back(row);
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace skinbreather
