#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pvgrid {

/// Raised for anything wrong with user-supplied input. Carries the file and
/// (1-based, header = row 1) row so messages can point at the offending line.
class InputError : public std::runtime_error {
public:
  InputError(std::string file, std::size_t row, const std::string &what);
  explicit InputError(const std::string &what);

  const std::string &file() const { return file_; }
  std::size_t row() const { return row_; }

private:
  std::string file_;
  std::size_t row_ = 0;
};

/// A comma-separated table with a header row. Columns are looked up by name.
class CsvTable {
public:
  static CsvTable read(const std::filesystem::path &path);
  static CsvTable parse(std::string_view text, std::string source_name);

  const std::string &source() const { return source_; }
  std::size_t rows() const { return cells_.size(); }
  bool has_column(std::string_view name) const;
  const std::vector<std::string> &header() const { return header_; }

  const std::string &text(std::size_t row, std::string_view column) const;
  double number(std::size_t row, std::string_view column) const;
  long long integer(std::size_t row, std::string_view column) const;
  /// Semicolon separated list of numbers inside one cell, e.g. "1e6;0.9e6".
  std::vector<double> number_list(std::size_t row, std::string_view column) const;

  /// Row number as it appears in the file (header is row 1).
  std::size_t file_row(std::size_t row) const { return row + 2; }

private:
  std::size_t column_index(std::string_view name) const;

  std::string source_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> cells_;
};

/// Shortest round-trip decimal form of a double; used everywhere output must
/// be byte-stable.
std::string format_number(double value);

double parse_number(std::string_view text);

/// Writes `header` then `rows` as comma-separated lines.
void write_csv(const std::filesystem::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<std::string>> &rows);

} // namespace pvgrid
