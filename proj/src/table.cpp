#include "pvgrid/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace pvgrid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.emplace_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

} // namespace

InputError::InputError(std::string file, std::size_t row, const std::string &what)
    : std::runtime_error(row > 0 ? fmt::format("{}:{}: {}", file, row, what)
                                 : fmt::format("{}: {}", file, what)),
      file_(std::move(file)), row_(row) {}

InputError::InputError(const std::string &what) : std::runtime_error(what) {}

CsvTable CsvTable::read(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError(path.string(), 0, "missing file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

CsvTable CsvTable::parse(std::string_view text, std::string source_name) {
  CsvTable table;
  table.source_ = std::move(source_name);
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    auto line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == text.size())
        break;
      continue;
    }
    auto fields = split_line(line);
    if (!have_header) {
      table.header_ = fields;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (!table.index_.emplace(fields[i], i).second)
          throw InputError(table.source_, line_no, "duplicate column '" + fields[i] + "'");
      }
      have_header = true;
    } else {
      if (fields.size() != table.header_.size())
        throw InputError(table.source_, line_no,
                         fmt::format("expected {} fields, found {}", table.header_.size(),
                                     fields.size()));
      table.cells_.push_back(std::move(fields));
    }
    if (end == text.size())
      break;
  }
  if (!have_header)
    throw InputError(table.source_, 0, "empty table (no header row)");
  return table;
}

bool CsvTable::has_column(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

std::size_t CsvTable::column_index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    throw InputError(source_, 1, fmt::format("missing column '{}'", name));
  return it->second;
}

const std::string &CsvTable::text(std::size_t row, std::string_view column) const {
  return cells_.at(row)[column_index(column)];
}

double CsvTable::number(std::size_t row, std::string_view column) const {
  const auto &cell = text(row, column);
  try {
    return parse_number(cell);
  } catch (const std::exception &) {
    throw InputError(source_, file_row(row),
                     fmt::format("column '{}': cannot parse '{}' as a number", column, cell));
  }
}

long long CsvTable::integer(std::size_t row, std::string_view column) const {
  double v = number(row, column);
  if (std::floor(v) != v)
    throw InputError(source_, file_row(row),
                     fmt::format("column '{}': expected an integer, found '{}'", column,
                                 text(row, column)));
  return static_cast<long long>(v);
}

std::vector<double> CsvTable::number_list(std::size_t row, std::string_view column) const {
  const auto &cell = text(row, column);
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    auto pos = cell.find(';', start);
    auto piece = trim(std::string_view(cell).substr(start, pos - start));
    try {
      out.push_back(parse_number(piece));
    } catch (const std::exception &) {
      throw InputError(source_, file_row(row),
                       fmt::format("column '{}': cannot parse '{}' as a number list", column,
                                   cell));
    }
    if (pos == std::string::npos)
      break;
    start = pos + 1;
  }
  return out;
}

std::string format_number(double value) {
  if (value == 0.0)
    return "0"; // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+')
    text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument(fmt::format("not a number: '{}'", text));
  if (!std::isfinite(value))
    throw std::invalid_argument(fmt::format("non-finite number: '{}'", text));
  return value;
}

void write_csv(const std::filesystem::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<std::string>> &rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << fmt::format("{}\n", fmt::join(header, ","));
  for (const auto &row : rows)
    out << fmt::format("{}\n", fmt::join(row, ","));
}

} // namespace pvgrid
