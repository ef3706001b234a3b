#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pvgrid {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

enum class RowSense { le, ge, eq };

struct LpVariable {
  std::string name;
  double lo = 0.0;
  double hi = infinity;
  bool integer = false;
};

struct LpRow {
  std::string name;
  std::string family; // constraint family, used by audits
  std::vector<std::pair<std::size_t, double>> terms;
  RowSense sense = RowSense::le;
  double rhs = 0.0;
};

enum class VarRole { dispatch, unserved, flow_forward, flow_reverse, pv_built };

/// Identifies a model variable by what it represents. Unused coordinates are 0.
struct VarKey {
  VarRole role = VarRole::dispatch;
  std::size_t region = 0;
  std::size_t unit = 0; // unit group or interface index
  int year = 0;
  std::size_t block = 0;

  auto operator<=>(const VarKey &) const = default;
};

/// Minimization problem  min c'x + offset  s.t. rows, lo <= x <= hi,
/// some x integer.
class LinearProgramSpec {
public:
  std::string name = "model";

  std::size_t add_variable(std::string name, double lo, double hi, double cost,
                           bool integer = false);
  std::size_t add_variable(const VarKey &key, std::string name, double lo, double hi, double cost,
                           bool integer = false);
  std::size_t add_row(LpRow row);

  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_rows() const { return rows_.size(); }
  const std::vector<LpVariable> &variables() const { return vars_; }
  const std::vector<LpRow> &rows() const { return rows_; }
  const std::vector<double> &objective() const { return cost_; }
  double objective_offset() const { return offset_; }
  void add_objective_offset(double v) { offset_ += v; }
  void set_cost(std::size_t j, double c) { cost_.at(j) = c; }
  void set_bounds(std::size_t j, double lo, double hi);

  const std::map<VarKey, std::size_t> &index() const { return index_; }
  std::size_t at(const VarKey &key) const;
  bool contains(const VarKey &key) const { return index_.count(key) > 0; }

  bool has_integers() const;
  double objective_value(std::span<const double> x) const;
  double row_activity(std::size_t i, std::span<const double> x) const;
  /// Signed violation of row i (0 when satisfied).
  double row_violation(std::size_t i, std::span<const double> x) const;
  /// Largest row or bound violation.
  double max_violation(std::span<const double> x) const;

  /// Throws std::logic_error if a row references an undeclared variable or
  /// a bound pair is inverted.
  void check_well_formed() const;

private:
  std::vector<LpVariable> vars_;
  std::vector<double> cost_;
  double offset_ = 0.0;
  std::vector<LpRow> rows_;
  std::map<VarKey, std::size_t> index_;
};

/// Fixed-field MPS. Column and row names are emitted as 8-character codes
/// (Cnnnnnnn, Rnnnnnnn) and the descriptive names go to comment lines, so any
/// strict fixed-format reader accepts the file. The objective constant is
/// written as the negated RHS of the objective row.
void write_mps(const LinearProgramSpec &spec, std::ostream &out);
void write_mps(const LinearProgramSpec &spec, const std::filesystem::path &path);
/// Reads what `write_mps` produces (and ordinary fixed or free MPS with
/// ROWS/COLUMNS/RHS/BOUNDS/MARKER sections). Names come back as the MPS codes.
LinearProgramSpec read_mps(std::istream &in);

/// Reads an external solver's column values: one "name value" pair per line,
/// names being either the MPS codes or the descriptive variable names.
std::vector<double> read_solution_values(const LinearProgramSpec &spec, std::istream &in);

} // namespace pvgrid
