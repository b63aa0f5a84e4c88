#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdid {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of the named column, if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

// RFC-4180 reader: header row required, quoted fields may contain commas,
// doubled quotes and line breaks. CRLF and LF line endings are accepted.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

void write_csv_row(std::ostream& out, std::span<const std::string> fields);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// Full-field parse with '.' as decimal separator; nullopt unless the whole
// field is a number.
std::optional<double> parse_double(std::string_view field);

}  // namespace cdid
