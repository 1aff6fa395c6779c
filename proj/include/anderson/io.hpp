#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace anderson::io {

/// Header plus rows of already formatted fields.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> fields);
  void add_numeric_row(std::initializer_list<double> values);
};

/// RFC 4180 field quoting: fields containing a comma, quote, CR or LF are
/// quoted with inner quotes doubled.
std::string csv_field(std::string_view field);

/// Header line plus one line per row, CRLF-free (LF terminators).
std::string to_csv(const CsvTable& table);

/// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Hex SHA-1 of "blob <size>\0" + content, as git computes object ids.
std::string git_blob_sha1(std::string_view content);

}  // namespace anderson::io
