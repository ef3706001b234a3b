#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pvgrid {

/// Flat key/value configuration read from a small TOML subset:
/// `[section]` headers, `key = value` lines, `#` comments. Values are
/// numbers, quoted strings, true/false, or single-line arrays of those.
/// Keys are stored as "section.key".
class Config {
public:
  using Value = std::variant<double, bool, std::string, std::vector<double>,
                             std::vector<std::string>>;

  static Config read(const std::filesystem::path &path);
  static Config parse(std::string_view text, const std::string &source_name);

  bool contains(const std::string &key) const { return values_.count(key) > 0; }

  double number(const std::string &key, double fallback) const;
  long long integer(const std::string &key, long long fallback) const;
  bool boolean(const std::string &key, bool fallback) const;
  std::string text(const std::string &key, const std::string &fallback) const;
  std::vector<double> numbers(const std::string &key, std::vector<double> fallback) const;

  double require_number(const std::string &key) const;

  void set(const std::string &key, Value value) { values_[key] = std::move(value); }
  /// Later values win.
  void merge(const Config &other);

  /// Canonical text form (sorted keys); stable across runs.
  std::string canonical() const;

  const std::map<std::string, Value> &values() const { return values_; }

  bool operator==(const Config &other) const { return values_ == other.values_; }

private:
  std::string source_;
  std::map<std::string, Value> values_;
};

} // namespace pvgrid
