#include <algorithm>
#include <cmath>
#include <limits>

#include "pvgrid/solver.hpp"

namespace pvgrid {

namespace {

constexpr double pivot_tol = 1e-9;
constexpr double optimality_tol = 1e-9;
constexpr double degenerate_step = 1e-12;
constexpr long bland_after = 1000;
constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

// Solves M z = r in place (M is n x n row-major, destroyed). Returns false
// when M is numerically singular.
bool dense_solve(std::vector<double> M, std::vector<double> &r, std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i)
    perm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(M[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(M[i * n + k]) > best) {
        best = std::abs(M[i * n + k]);
        p = i;
      }
    if (best < 1e-13)
      return false;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j)
        std::swap(M[k * n + j], M[p * n + j]);
      std::swap(r[k], r[p]);
    }
    double piv = M[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      double f = M[i * n + k] / piv;
      if (f == 0.0)
        continue;
      for (std::size_t j = k; j < n; ++j)
        M[i * n + j] -= f * M[k * n + j];
      r[i] -= f * r[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = r[k];
    for (std::size_t j = k + 1; j < n; ++j)
      s -= M[k * n + j] * r[j];
    r[k] = s / M[k * n + k];
  }
  return true;
}

class DenseSimplex {
public:
  DenseSimplex(const LinearProgramSpec &spec, std::span<const double> lo,
               std::span<const double> hi, const SolverOptions &opts)
      : spec_(spec), opts_(opts) {
    build(lo, hi);
  }

  LpSolution run() {
    LpSolution sol;
    if (trivially_infeasible_) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    init_tableau();
    // Phase 1: minimize the artificial sum.
    std::vector<double> phase1(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      if (artificial_[j])
        phase1[j] = 1.0;
    price(phase1);
    auto st = iterate(phase1);
    sol.iterations = iterations_;
    if (st == LpStatus::iteration_limit) {
      sol.status = st;
      return sol;
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      if (artificial_[basis_[i]])
        infeas += std::max(0.0, xb_[i]);
    if (infeas > feas_tol_) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    // Artificials are pinned at zero from here on.
    for (std::size_t j = 0; j < n_; ++j)
      if (artificial_[j])
        upper_[j] = 0.0;
    drive_out_artificials();

    price(cost_);
    st = iterate(cost_);
    sol.iterations = iterations_;
    if (st != LpStatus::optimal) {
      sol.status = st;
      return sol;
    }
    refactor();
    extract(sol);
    sol.status = LpStatus::optimal;
    return sol;
  }

private:
  struct ColumnMap {
    std::size_t col = none;
    double sign = 1.0;
    double shift = 0.0;
    std::size_t neg_col = none; // free variables: x = x+ - x-
  };

  void build(std::span<const double> lo, std::span<const double> hi) {
    const auto &vars = spec_.variables();
    const std::size_t nv = vars.size();
    map_.resize(nv);
    std::size_t ncol = 0;
    std::vector<double> col_upper;
    std::vector<double> col_cost;
    double cmax = 0.0;
    for (std::size_t j = 0; j < nv; ++j)
      cmax = std::max(cmax, std::abs(spec_.objective()[j]));
    cost_scale_ = cmax > 0.0 ? cmax : 1.0;
    for (std::size_t j = 0; j < nv; ++j) {
      double l = lo[j], h = hi[j];
      double c = spec_.objective()[j] / cost_scale_;
      auto &cm = map_[j];
      if (l > h) {
        trivially_infeasible_ = true;
        l = h;
      }
      if (std::isfinite(l)) {
        cm = {ncol++, 1.0, l, none};
        col_upper.push_back(h - l);
        col_cost.push_back(c);
      } else if (std::isfinite(h)) {
        cm = {ncol++, -1.0, h, none};
        col_upper.push_back(infinity);
        col_cost.push_back(-c);
      } else {
        cm = {ncol++, 1.0, 0.0, ncol++};
        col_upper.push_back(infinity);
        col_upper.push_back(infinity);
        col_cost.push_back(c);
        col_cost.push_back(-c);
      }
    }
    structural_ = ncol;

    // Dense structural rows with shifts folded into the rhs.
    const auto &rows = spec_.rows();
    std::vector<std::vector<double>> dense;
    std::vector<double> rhs;
    std::vector<RowSense> sense;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<double> a(structural_, 0.0);
      double b = rows[i].rhs;
      for (const auto &[j, v] : rows[i].terms) {
        const auto &cm = map_[j];
        a[cm.col] += v * cm.sign;
        if (cm.neg_col != none)
          a[cm.neg_col] -= v;
        b -= v * cm.shift;
      }
      double amax = 0.0;
      for (double x : a)
        amax = std::max(amax, std::abs(x));
      if (amax == 0.0) {
        bool ok = rows[i].sense == RowSense::le   ? b >= -1e-9
                  : rows[i].sense == RowSense::ge ? b <= 1e-9
                                                  : std::abs(b) <= 1e-9;
        if (!ok)
          trivially_infeasible_ = true;
        row_of_.push_back(none);
        continue;
      }
      double f = 1.0 / amax;
      RowSense s = rows[i].sense;
      if (b * f < 0.0) {
        f = -f;
        if (s == RowSense::le)
          s = RowSense::ge;
        else if (s == RowSense::ge)
          s = RowSense::le;
      }
      for (double &x : a)
        x *= f;
      row_of_.push_back(dense.size());
      row_factor_.push_back(f);
      dense.push_back(std::move(a));
      rhs.push_back(b * f);
      sense.push_back(s);
    }
    m_ = dense.size();

    std::size_t nslack = 0, nart = 0;
    for (auto s : sense) {
      if (s != RowSense::eq)
        ++nslack;
      if (s != RowSense::le)
        ++nart;
    }
    n_ = structural_ + nslack + nart;
    A0_.assign(m_ * n_, 0.0);
    upper_ = col_upper;
    upper_.resize(n_, infinity);
    cost_ = col_cost;
    cost_.resize(n_, 0.0);
    artificial_.assign(n_, 0);
    basis_.assign(m_, none);
    unit_col_.assign(m_, none);
    b_ = rhs;
    std::size_t next_slack = structural_, next_art = structural_ + nslack;
    for (std::size_t i = 0; i < m_; ++i) {
      std::copy(dense[i].begin(), dense[i].end(), A0_.begin() + i * n_);
      if (sense[i] == RowSense::le) {
        A0_[i * n_ + next_slack] = 1.0;
        basis_[i] = next_slack;
        unit_col_[i] = next_slack;
        ++next_slack;
      } else {
        if (sense[i] == RowSense::ge)
          A0_[i * n_ + next_slack++] = -1.0;
        A0_[i * n_ + next_art] = 1.0;
        artificial_[next_art] = 1;
        basis_[i] = next_art;
        unit_col_[i] = next_art;
        ++next_art;
      }
    }
    double bmax = 0.0;
    for (double x : b_)
      bmax = std::max(bmax, std::abs(x));
    feas_tol_ = 1e-9 * (1.0 + bmax);
  }

  void init_tableau() {
    T_ = A0_;
    xb_ = b_;
    state_.assign(n_, -1);
    for (std::size_t i = 0; i < m_; ++i)
      state_[basis_[i]] = 0;
  }

  void price(const std::vector<double> &c) {
    d_ = c;
    for (std::size_t i = 0; i < m_; ++i) {
      double cb = c[basis_[i]];
      if (cb == 0.0)
        continue;
      const double *row = &T_[i * n_];
      for (std::size_t j = 0; j < n_; ++j)
        d_[j] -= cb * row[j];
    }
    for (std::size_t i = 0; i < m_; ++i)
      d_[basis_[i]] = 0.0;
  }

  bool movable(std::size_t j) const {
    if (state_[j] == 0)
      return false;
    if (artificial_[j] && upper_[j] == 0.0)
      return false;
    return upper_[j] > 0.0;
  }

  std::size_t choose_entering(bool bland) const {
    std::size_t best = none;
    double best_score = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (!movable(j))
        continue;
      double score = state_[j] < 0 ? -d_[j] : d_[j];
      if (score <= optimality_tol)
        continue;
      if (bland)
        return j;
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  void pivot(std::size_t r, std::size_t q) {
    double *prow = &T_[r * n_];
    double piv = prow[q];
    for (std::size_t j = 0; j < n_; ++j)
      prow[j] /= piv;
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r)
        continue;
      double *row = &T_[i * n_];
      double f = row[q];
      if (f == 0.0)
        continue;
      for (std::size_t j = 0; j < n_; ++j)
        row[j] -= f * prow[j];
      row[q] = 0.0;
    }
    double f = d_[q];
    if (f != 0.0) {
      for (std::size_t j = 0; j < n_; ++j)
        d_[j] -= f * prow[j];
      d_[q] = 0.0;
    }
  }

  LpStatus iterate(const std::vector<double> &) {
    bool bland = false;
    long degenerate = 0;
    while (true) {
      if (iterations_ >= opts_.max_iterations)
        return LpStatus::iteration_limit;
      auto q = choose_entering(bland);
      if (q == none)
        return LpStatus::optimal;
      const double dir = state_[q] < 0 ? 1.0 : -1.0;

      double theta = upper_[q];
      std::size_t leave = none;
      double leave_alpha = 0.0;
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < m_; ++i) {
        double alpha = dir * T_[i * n_ + q];
        double t;
        bool to_upper;
        if (alpha > pivot_tol) {
          t = std::max(0.0, xb_[i]) / alpha;
          to_upper = false;
        } else if (alpha < -pivot_tol && std::isfinite(upper_[basis_[i]])) {
          t = std::max(0.0, upper_[basis_[i]] - xb_[i]) / -alpha;
          to_upper = true;
        } else {
          continue;
        }
        bool take;
        if (leave == none)
          take = t <= theta;
        else {
          double eps = 1e-12 * (1.0 + std::abs(theta));
          if (t < theta - eps)
            take = true;
          else if (t <= theta + eps)
            take = bland ? basis_[i] < basis_[leave] : std::abs(alpha) > std::abs(leave_alpha);
          else
            take = false;
        }
        if (take) {
          theta = t;
          leave = i;
          leave_alpha = alpha;
          leave_to_upper = to_upper;
        }
      }
      if (!std::isfinite(theta))
        return LpStatus::unbounded;

      ++iterations_;
      if (theta <= degenerate_step) {
        if (++degenerate > bland_after)
          bland = true;
      }
      for (std::size_t i = 0; i < m_; ++i)
        xb_[i] -= theta * dir * T_[i * n_ + q];

      if (leave == none) {
        state_[q] = static_cast<signed char>(-state_[q]); // bound flip
        continue;
      }
      double entering_value = dir > 0 ? theta : upper_[q] - theta;
      std::size_t out = basis_[leave];
      pivot(leave, q);
      basis_[leave] = q;
      state_[q] = 0;
      state_[out] = leave_to_upper ? 1 : -1;
      xb_[leave] = entering_value;
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (!artificial_[basis_[r]])
        continue;
      std::size_t q = none;
      double best = 1e-7;
      for (std::size_t j = 0; j < n_; ++j) {
        if (artificial_[j] || state_[j] != -1)
          continue;
        if (std::abs(T_[r * n_ + j]) > best) {
          best = std::abs(T_[r * n_ + j]);
          q = j;
        }
      }
      if (q == none)
        continue; // redundant row; the artificial stays basic at zero
      std::size_t out = basis_[r];
      // Degenerate pivot: the entering column keeps value 0, others unchanged
      // up to the artificial's (tiny) value.
      double value = xb_[r];
      double piv = T_[r * n_ + q];
      for (std::size_t i = 0; i < m_; ++i)
        if (i != r)
          xb_[i] -= value / piv * T_[i * n_ + q];
      pivot(r, q);
      basis_[r] = q;
      state_[q] = 0;
      state_[out] = -1;
      xb_[r] = value / piv;
    }
  }

  // Recomputes basic values and duals from the original columns.
  void refactor() {
    std::vector<double> B(m_ * m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < m_; ++k)
        B[i * m_ + k] = A0_[i * n_ + basis_[k]];
    std::vector<double> r = b_;
    for (std::size_t j = 0; j < n_; ++j)
      if (state_[j] == 1)
        for (std::size_t i = 0; i < m_; ++i)
          r[i] -= A0_[i * n_ + j] * upper_[j];
    if (dense_solve(B, r, m_)) {
      for (std::size_t i = 0; i < m_; ++i) {
        double ub = upper_[basis_[i]];
        double v = r[i];
        if (v < 0.0 && v > -feas_tol_)
          v = 0.0;
        if (std::isfinite(ub) && v > ub && v < ub + feas_tol_)
          v = ub;
        xb_[i] = v;
      }
    }
    std::vector<double> Bt(m_ * m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < m_; ++k)
        Bt[k * m_ + i] = B[i * m_ + k];
    std::vector<double> y(m_);
    for (std::size_t k = 0; k < m_; ++k)
      y[k] = cost_[basis_[k]];
    if (dense_solve(Bt, y, m_))
      y_ = y;
    else {
      // Fall back to the tableau's reduced costs of the initial unit columns.
      y_.assign(m_, 0.0);
      for (std::size_t i = 0; i < m_; ++i)
        y_[i] = cost_[unit_col_[i]] - d_[unit_col_[i]];
    }
  }

  void extract(LpSolution &sol) const {
    std::vector<double> xc(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      if (state_[j] == 1)
        xc[j] = upper_[j];
    for (std::size_t i = 0; i < m_; ++i)
      xc[basis_[i]] = xb_[i];
    const auto nv = spec_.num_variables();
    sol.values.assign(nv, 0.0);
    for (std::size_t j = 0; j < nv; ++j) {
      const auto &cm = map_[j];
      double v = cm.shift + cm.sign * xc[cm.col];
      if (cm.neg_col != none)
        v -= xc[cm.neg_col];
      sol.values[j] = v;
    }
    sol.objective = spec_.objective_value(sol.values);

    const auto &rows = spec_.rows();
    sol.duals.assign(rows.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto k = row_of_[i];
      if (k != none)
        sol.duals[i] = y_[k] * row_factor_[k] * cost_scale_;
    }
    sol.reduced_costs = spec_.objective();
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (const auto &[j, v] : rows[i].terms)
        sol.reduced_costs[j] -= sol.duals[i] * v;
  }

  const LinearProgramSpec &spec_;
  const SolverOptions &opts_;
  bool trivially_infeasible_ = false;
  std::vector<ColumnMap> map_;
  std::size_t structural_ = 0;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  double cost_scale_ = 1.0;
  double feas_tol_ = 1e-9;
  std::vector<double> A0_;
  std::vector<double> b_;
  std::vector<double> cost_;
  std::vector<double> upper_;
  std::vector<char> artificial_;
  std::vector<std::size_t> row_of_;     // spec row -> tableau row
  std::vector<double> row_factor_;      // tableau row scaling incl. sign flip
  std::vector<std::size_t> unit_col_;   // initial identity column per row
  std::vector<double> T_;
  std::vector<double> d_;
  std::vector<std::size_t> basis_;
  std::vector<signed char> state_; // 0 basic, -1 at lower, +1 at upper
  std::vector<double> xb_;
  std::vector<double> y_;
  long iterations_ = 0;
};

} // namespace

std::string_view to_string(LpStatus s) {
  switch (s) {
  case LpStatus::optimal:
    return "optimal";
  case LpStatus::infeasible:
    return "infeasible";
  case LpStatus::unbounded:
    return "unbounded";
  case LpStatus::iteration_limit:
    return "iteration_limit";
  }
  return "?";
}

SolverOptions SolverOptions::from_config(const Config &cfg) {
  SolverOptions o;
  o.max_iterations = cfg.integer("solver.max_iterations", o.max_iterations);
  o.max_nodes = cfg.integer("solver.max_nodes", o.max_nodes);
  o.abs_gap = cfg.number("solver.abs_gap", o.abs_gap);
  o.rel_gap = cfg.number("solver.rel_gap", o.rel_gap);
  o.time_limit_seconds = cfg.number("solver.time_limit_seconds", o.time_limit_seconds);
  return o;
}

LpSolution solve_lp(const LinearProgramSpec &spec, std::span<const double> lo,
                    std::span<const double> hi, const SolverOptions &opts) {
  spec.check_well_formed();
  DenseSimplex simplex(spec, lo, hi, opts);
  return simplex.run();
}

LpSolution solve_lp(const LinearProgramSpec &spec, const SolverOptions &opts) {
  std::vector<double> lo, hi;
  for (const auto &v : spec.variables()) {
    lo.push_back(v.lo);
    hi.push_back(v.hi);
  }
  return solve_lp(spec, lo, hi, opts);
}

double dual_objective(const LinearProgramSpec &spec, const LpSolution &sol) {
  double cmax = 0.0;
  for (double c : spec.objective())
    cmax = std::max(cmax, std::abs(c));
  const double zero = 1e-9 * (1.0 + cmax);
  double value = spec.objective_offset();
  for (std::size_t i = 0; i < spec.num_rows(); ++i)
    value += spec.rows()[i].rhs * sol.duals[i];
  for (std::size_t j = 0; j < spec.num_variables(); ++j) {
    double r = sol.reduced_costs[j];
    const auto &v = spec.variables()[j];
    if (r > zero)
      value += std::isfinite(v.lo) ? r * v.lo : -infinity;
    else if (r < -zero)
      value += std::isfinite(v.hi) ? r * v.hi : -infinity;
    else if (std::isfinite(v.lo) || std::isfinite(v.hi))
      value += r * (std::isfinite(v.lo) ? v.lo : v.hi);
  }
  return value;
}

} // namespace pvgrid
