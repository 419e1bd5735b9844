#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mmfuse {

// String table as read from a UTF-8 CSV file with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
std::string csv_escape(const std::string& field);

// Shortest decimal form that round-trips the double.
std::string format_double(double v);

}  // namespace mmfuse
