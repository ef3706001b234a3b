#pragma once

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "pvgrid/config.hpp"
#include "pvgrid/lp.hpp"

namespace pvgrid {

struct SolverOptions {
  long max_iterations = 200000; // simplex pivots per LP
  long max_nodes = 100000;
  double abs_gap = 1e-6;
  double rel_gap = 1e-9;
  double time_limit_seconds = 3600.0;
  /// Node log destination; nothing is logged when null.
  std::ostream *log = nullptr;

  static SolverOptions from_config(const Config &cfg);
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };
enum class MilpStatus { optimal, infeasible, unbounded, gap_limit, node_limit, time_limit };

std::string_view to_string(LpStatus s);
std::string_view to_string(MilpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> values;
  /// One multiplier per row, sign convention of a minimization Lagrangian:
  /// `<=` rows get y <= 0, `>=` rows y >= 0.
  std::vector<double> duals;
  /// c_j - y'A_j per variable.
  std::vector<double> reduced_costs;
  long iterations = 0;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::infeasible;
  bool has_incumbent = false;
  LpSolution incumbent;
  double bound = -infinity;
  double gap = infinity;
  long nodes_explored = 0;
  /// Incumbent objective after each improvement, and the global bound each
  /// time a node is taken off the queue.
  std::vector<double> incumbent_history;
  std::vector<double> bound_history;
};

/// Dense bounded-variable primal simplex: two phases, Dantzig pricing with a
/// switch to Bland's rule after 1000 degenerate pivots, and a final
/// refactorization of the optimal basis to clean up values and duals.
LpSolution solve_lp(const LinearProgramSpec &spec, const SolverOptions &opts = {});

/// Same LP with the variable bounds replaced by `lo`/`hi`.
LpSolution solve_lp(const LinearProgramSpec &spec, std::span<const double> lo,
                    std::span<const double> hi, const SolverOptions &opts = {});

/// Best-bound branch-and-bound on the integer-flagged variables. Branches on
/// the most fractional variable (ties to the lowest index); nodes with equal
/// bound leave the queue in creation order.
MilpSolution solve_milp(const LinearProgramSpec &spec, const SolverOptions &opts = {});

/// Weak-duality value  b'y + sum_j (bound picked by sign of reduced cost) + offset.
/// Equals the primal objective at an optimal basis; -inf when a reduced cost
/// pushes against an infinite bound.
double dual_objective(const LinearProgramSpec &spec, const LpSolution &sol);

} // namespace pvgrid
