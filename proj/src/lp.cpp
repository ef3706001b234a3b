#include "pvgrid/lp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "pvgrid/table.hpp"

namespace pvgrid {

std::size_t LinearProgramSpec::add_variable(std::string name, double lo, double hi, double cost,
                                            bool integer) {
  vars_.push_back({std::move(name), lo, hi, integer});
  cost_.push_back(cost);
  return vars_.size() - 1;
}

std::size_t LinearProgramSpec::add_variable(const VarKey &key, std::string name, double lo,
                                            double hi, double cost, bool integer) {
  if (index_.count(key))
    throw std::logic_error("duplicate variable key for " + name);
  auto j = add_variable(std::move(name), lo, hi, cost, integer);
  index_.emplace(key, j);
  return j;
}

std::size_t LinearProgramSpec::add_row(LpRow row) {
  rows_.push_back(std::move(row));
  return rows_.size() - 1;
}

void LinearProgramSpec::set_bounds(std::size_t j, double lo, double hi) {
  vars_.at(j).lo = lo;
  vars_.at(j).hi = hi;
}

std::size_t LinearProgramSpec::at(const VarKey &key) const {
  auto it = index_.find(key);
  if (it == index_.end())
    throw std::out_of_range("no variable for key");
  return it->second;
}

bool LinearProgramSpec::has_integers() const {
  return std::any_of(vars_.begin(), vars_.end(), [](const auto &v) { return v.integer; });
}

double LinearProgramSpec::objective_value(std::span<const double> x) const {
  double obj = offset_;
  for (std::size_t j = 0; j < cost_.size(); ++j)
    obj += cost_[j] * x[j];
  return obj;
}

double LinearProgramSpec::row_activity(std::size_t i, std::span<const double> x) const {
  double a = 0.0;
  for (const auto &[j, v] : rows_[i].terms)
    a += v * x[j];
  return a;
}

double LinearProgramSpec::row_violation(std::size_t i, std::span<const double> x) const {
  const auto &row = rows_[i];
  double a = row_activity(i, x);
  switch (row.sense) {
  case RowSense::le:
    return std::max(0.0, a - row.rhs);
  case RowSense::ge:
    return std::max(0.0, row.rhs - a);
  case RowSense::eq:
    return std::abs(a - row.rhs);
  }
  return 0.0;
}

double LinearProgramSpec::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i)
    worst = std::max(worst, row_violation(i, x));
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max(worst, vars_[j].lo - x[j]);
    worst = std::max(worst, x[j] - vars_[j].hi);
  }
  return worst;
}

void LinearProgramSpec::check_well_formed() const {
  for (const auto &v : vars_)
    if (!(v.lo <= v.hi))
      throw std::logic_error(fmt::format("variable {} has lo > hi", v.name));
  for (const auto &row : rows_)
    for (const auto &[j, coef] : row.terms) {
      if (j >= vars_.size())
        throw std::logic_error(fmt::format("row {} references undeclared variable {}", row.name, j));
      if (!std::isfinite(coef))
        throw std::logic_error(fmt::format("row {} has a non-finite coefficient", row.name));
    }
}

namespace {

std::string col_code(std::size_t j) { return fmt::format("C{:07d}", j); }
std::string row_code(std::size_t i) { return fmt::format("R{:07d}", i); }

// Fixed MPS number field is 12 characters wide.
std::string mps_number(double v) {
  for (int prec = 12; prec >= 1; --prec) {
    auto s = fmt::format("{:.{}g}", v, prec);
    if (s.size() <= 12)
      return s;
  }
  return fmt::format("{:.6e}", v);
}

void entry(std::ostream &out, const std::string &f2, const std::string &f3, double v) {
  // Fields start at columns 5, 15 and 25.
  fmt::print(out, "    {:<8}  {:<8}  {:>12}\n", f2, f3, mps_number(v));
}

} // namespace

void write_mps(const LinearProgramSpec &spec, std::ostream &out) {
  const auto &vars = spec.variables();
  const auto &rows = spec.rows();
  fmt::print(out, "* {} variables, {} rows\n", vars.size(), rows.size());
  for (std::size_t j = 0; j < vars.size(); ++j)
    fmt::print(out, "* {} {}\n", col_code(j), vars[j].name);
  for (std::size_t i = 0; i < rows.size(); ++i)
    fmt::print(out, "* {} {}\n", row_code(i), rows[i].name);
  fmt::print(out, "NAME          {}\n", spec.name.substr(0, 8));
  fmt::print(out, "ROWS\n N  COST\n");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char s = rows[i].sense == RowSense::le ? 'L' : rows[i].sense == RowSense::ge ? 'G' : 'E';
    fmt::print(out, " {}  {}\n", s, row_code(i));
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> cols(vars.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto &[j, v] : rows[i].terms)
      if (v != 0.0)
        cols[j].emplace_back(i, v);

  fmt::print(out, "COLUMNS\n");
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (vars[j].integer != in_int) {
      fmt::print(out, "    MARKER{:02d}  'MARKER'                 '{}'\n", marker++,
                 vars[j].integer ? "INTORG" : "INTEND");
      in_int = vars[j].integer;
    }
    auto code = col_code(j);
    if (spec.objective()[j] != 0.0 || cols[j].empty())
      entry(out, code, "COST", spec.objective()[j]);
    for (const auto &[i, v] : cols[j])
      entry(out, code, row_code(i), v);
  }
  if (in_int)
    fmt::print(out, "    MARKER{:02d}  'MARKER'                 'INTEND'\n", marker++);

  fmt::print(out, "RHS\n");
  if (spec.objective_offset() != 0.0)
    entry(out, "RHS", "COST", -spec.objective_offset());
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].rhs != 0.0)
      entry(out, "RHS", row_code(i), rows[i].rhs);

  fmt::print(out, "BOUNDS\n");
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto &v = vars[j];
    auto code = col_code(j);
    auto bound = [&](const char *kind, double value) {
      fmt::print(out, " {} BND       {:<8}  {:>12}\n", kind, code, mps_number(value));
    };
    if (v.lo == v.hi) {
      bound("FX", v.lo);
      continue;
    }
    if (v.lo == -infinity && v.hi == infinity) {
      fmt::print(out, " FR BND       {}\n", code);
      continue;
    }
    if (v.lo == -infinity)
      fmt::print(out, " MI BND       {}\n", code);
    else if (v.lo != 0.0)
      bound("LO", v.lo);
    if (v.hi != infinity)
      bound("UP", v.hi);
    else if (v.integer)
      fmt::print(out, " PL BND       {}\n", code);
  }
  fmt::print(out, "ENDATA\n");
}

void write_mps(const LinearProgramSpec &spec, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  write_mps(spec, out);
}

LinearProgramSpec read_mps(std::istream &in) {
  LinearProgramSpec spec;
  std::string objective_row;
  std::unordered_map<std::string, std::size_t> row_index;
  std::unordered_map<std::string, std::size_t> col_index;
  std::vector<LpRow> rows;
  std::string section;
  bool integer_mode = false;
  std::string line;
  std::size_t line_no = 0;
  double offset = 0.0;

  auto fail = [&](const std::string &msg) { throw InputError("mps", line_no, msg); };
  auto column = [&](const std::string &name) {
    auto it = col_index.find(name);
    if (it != col_index.end())
      return it->second;
    auto j = spec.add_variable(name, 0.0, infinity, 0.0, integer_mode);
    col_index.emplace(name, j);
    return j;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line[0] == '*')
      continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;)
      tok.push_back(t);
    if (tok.empty())
      continue;
    if (line[0] != ' ') {
      section = tok[0];
      if (section == "NAME" && tok.size() > 1)
        spec.name = tok[1];
      if (section == "ENDATA")
        break;
      continue;
    }
    if (section == "ROWS") {
      if (tok.size() != 2)
        fail("bad ROWS entry");
      if (tok[0] == "N") {
        if (objective_row.empty())
          objective_row = tok[1];
        continue;
      }
      LpRow row;
      row.name = tok[1];
      row.sense = tok[0] == "L" ? RowSense::le : tok[0] == "G" ? RowSense::ge : RowSense::eq;
      if (tok[0] != "L" && tok[0] != "G" && tok[0] != "E")
        fail("unknown row type " + tok[0]);
      row_index.emplace(row.name, rows.size());
      rows.push_back(std::move(row));
    } else if (section == "COLUMNS") {
      if (tok.size() >= 3 && tok[1] == "'MARKER'") {
        integer_mode = tok[2] == "'INTORG'";
        continue;
      }
      if (tok.size() != 3 && tok.size() != 5)
        fail("bad COLUMNS entry");
      auto j = column(tok[0]);
      for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
        double v = parse_number(tok[k + 1]);
        if (tok[k] == objective_row)
          spec.set_cost(j, v);
        else {
          auto it = row_index.find(tok[k]);
          if (it == row_index.end())
            fail("unknown row " + tok[k]);
          rows[it->second].terms.emplace_back(j, v);
        }
      }
    } else if (section == "RHS") {
      if (tok.size() != 3 && tok.size() != 5)
        fail("bad RHS entry");
      for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
        double v = parse_number(tok[k + 1]);
        if (tok[k] == objective_row)
          offset = -v;
        else {
          auto it = row_index.find(tok[k]);
          if (it == row_index.end())
            fail("unknown row " + tok[k]);
          rows[it->second].rhs = v;
        }
      }
    } else if (section == "BOUNDS") {
      if (tok.size() < 3)
        fail("bad BOUNDS entry");
      auto it = col_index.find(tok[2]);
      if (it == col_index.end())
        fail("unknown column " + tok[2]);
      auto j = it->second;
      auto v = spec.variables()[j];
      const auto &kind = tok[0];
      double val = tok.size() > 3 ? parse_number(tok[3]) : 0.0;
      if (kind == "UP")
        v.hi = val;
      else if (kind == "LO")
        v.lo = val;
      else if (kind == "FX")
        v.lo = v.hi = val;
      else if (kind == "FR") {
        v.lo = -infinity;
        v.hi = infinity;
      } else if (kind == "MI")
        v.lo = -infinity;
      else if (kind == "PL")
        v.hi = infinity;
      else if (kind == "BV") {
        v.lo = 0.0;
        v.hi = 1.0;
        v.integer = true;
      } else
        fail("unsupported bound type " + kind);
      spec.set_bounds(j, v.lo, v.hi);
    } else {
      fail("data outside a known section");
    }
  }
  for (auto &row : rows)
    spec.add_row(std::move(row));
  spec.add_objective_offset(offset);
  return spec;
}

std::vector<double> read_solution_values(const LinearProgramSpec &spec, std::istream &in) {
  std::unordered_map<std::string, std::size_t> names;
  for (std::size_t j = 0; j < spec.num_variables(); ++j) {
    names.emplace(col_code(j), j);
    names.emplace(spec.variables()[j].name, j);
  }
  std::vector<double> x(spec.num_variables(), 0.0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string name, value;
    if (!(ss >> name) || name[0] == '#')
      continue;
    if (!(ss >> value))
      throw InputError("solution", line_no, "expected 'name value'");
    auto it = names.find(name);
    if (it == names.end())
      throw InputError("solution", line_no, "unknown variable " + name);
    x[it->second] = parse_number(value);
  }
  return x;
}

} // namespace pvgrid
