#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace skinbreather {

/// RFC-4180 table preceded by one '#'-prefixed JSON line describing the run.
struct CsvTable {
  nlohmann::json manifest = nlohmann::json::object();
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by name; throws std::out_of_range if missing.
  std::size_t column(const std::string& name) const;
};

std::string csv_escape(const std::string& field);

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

/// Throws std::runtime_error on malformed input.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

}  // namespace skinbreather
