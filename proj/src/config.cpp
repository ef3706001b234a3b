#include "pvgrid/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pvgrid/table.hpp"

namespace pvgrid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"')
      quoted = !quoted;
    else if (line[i] == '#' && !quoted)
      return line.substr(0, i);
  }
  return line;
}

bool is_quoted(std::string_view s) {
  return s.size() >= 2 && s.front() == '"' && s.back() == '"';
}

Config::Value parse_scalar_or_array(std::string_view raw, const std::string &source,
                                    std::size_t line) {
  raw = trim(raw);
  if (raw.empty())
    throw InputError(source, line, "missing value");
  if (raw == "true")
    return true;
  if (raw == "false")
    return false;
  if (is_quoted(raw))
    return std::string(raw.substr(1, raw.size() - 2));
  if (raw.front() == '[') {
    if (raw.back() != ']')
      throw InputError(source, line, "unterminated array");
    auto body = trim(raw.substr(1, raw.size() - 2));
    std::vector<double> nums;
    std::vector<std::string> strs;
    std::size_t start = 0;
    while (!body.empty() && start <= body.size()) {
      auto pos = body.find(',', start);
      auto item = trim(body.substr(start, pos == std::string_view::npos ? pos : pos - start));
      if (!item.empty()) {
        if (is_quoted(item))
          strs.emplace_back(item.substr(1, item.size() - 2));
        else {
          try {
            nums.push_back(parse_number(item));
          } catch (const std::exception &) {
            throw InputError(source, line, fmt::format("bad array element '{}'", item));
          }
        }
      }
      if (pos == std::string_view::npos)
        break;
      start = pos + 1;
    }
    if (!nums.empty() && !strs.empty())
      throw InputError(source, line, "mixed array types");
    if (!strs.empty())
      return strs;
    return nums;
  }
  try {
    return parse_number(raw);
  } catch (const std::exception &) {
    throw InputError(source, line, fmt::format("cannot parse value '{}'", raw));
  }
}

std::string render(const Config::Value &v) {
  struct Visitor {
    std::string operator()(double d) const { return format_number(d); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const std::string &s) const { return "\"" + s + "\""; }
    std::string operator()(const std::vector<double> &xs) const {
      std::vector<std::string> parts;
      for (double x : xs)
        parts.push_back(format_number(x));
      return fmt::format("[{}]", fmt::join(parts, ", "));
    }
    std::string operator()(const std::vector<std::string> &xs) const {
      std::vector<std::string> parts;
      for (const auto &x : xs)
        parts.push_back("\"" + x + "\"");
      return fmt::format("[{}]", fmt::join(parts, ", "));
    }
  };
  return std::visit(Visitor{}, v);
}

} // namespace

Config Config::read(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError(path.string(), 0, "missing file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

Config Config::parse(std::string_view text, const std::string &source_name) {
  Config cfg;
  cfg.source_ = source_name;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(strip_comment(line));
    if (body.empty())
      continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw InputError(source_name, line_no, "malformed section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      continue;
    }
    auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw InputError(source_name, line_no, "expected 'key = value'");
    auto key = std::string(trim(body.substr(0, eq)));
    if (key.empty())
      throw InputError(source_name, line_no, "empty key");
    auto full = section.empty() ? key : section + "." + key;
    cfg.values_[full] = parse_scalar_or_array(body.substr(eq + 1), source_name, line_no);
  }
  return cfg;
}

double Config::number(const std::string &key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return fallback;
  if (auto *d = std::get_if<double>(&it->second))
    return *d;
  throw InputError(source_, 0, fmt::format("key '{}' must be a number", key));
}

long long Config::integer(const std::string &key, long long fallback) const {
  double v = number(key, static_cast<double>(fallback));
  if (std::floor(v) != v)
    throw InputError(source_, 0, fmt::format("key '{}' must be an integer", key));
  return static_cast<long long>(v);
}

bool Config::boolean(const std::string &key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return fallback;
  if (auto *b = std::get_if<bool>(&it->second))
    return *b;
  throw InputError(source_, 0, fmt::format("key '{}' must be true or false", key));
}

std::string Config::text(const std::string &key, const std::string &fallback) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return fallback;
  if (auto *s = std::get_if<std::string>(&it->second))
    return *s;
  throw InputError(source_, 0, fmt::format("key '{}' must be a quoted string", key));
}

std::vector<double> Config::numbers(const std::string &key, std::vector<double> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return fallback;
  if (auto *xs = std::get_if<std::vector<double>>(&it->second))
    return *xs;
  if (auto *d = std::get_if<double>(&it->second))
    return {*d};
  throw InputError(source_, 0, fmt::format("key '{}' must be a list of numbers", key));
}

double Config::require_number(const std::string &key) const {
  if (!contains(key))
    throw InputError(source_, 0, fmt::format("missing required key '{}'", key));
  return number(key, 0.0);
}

void Config::merge(const Config &other) {
  for (const auto &[k, v] : other.values_)
    values_[k] = v;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto &[k, v] : values_)
    out += fmt::format("{} = {}\n", k, render(v));
  return out;
}

} // namespace pvgrid
