#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace idense::io {

/// In-memory CSV table: one header row plus data rows, all fields as strings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each data row.
  std::vector<std::size_t> lines;

  std::optional<std::size_t> column(std::string_view name) const;
  /// Column index, or SchemaError naming the column.
  std::size_t require_column(std::string_view name, std::string_view context) const;
};

/// RFC 4180 parsing: quoted fields, doubled quotes, CRLF tolerated, blank lines skipped.
CsvTable parse_csv(std::string_view text, std::string_view context = "csv");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Fixed-point with the given number of decimals, "-0.0000" normalised to "0.0000".
std::string format_fixed(double value, int decimals = 4);

/// Shortest representation that round-trips to the same double.
std::string format_exact(double value);

double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace idense::io
