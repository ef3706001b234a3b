#include <chrono>
#include <cmath>
#include <ostream>
#include <memory>
#include <optional>
#include <queue>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "pvgrid/solver.hpp"

namespace pvgrid {

namespace {

constexpr double integrality_tol = 1e-6;

struct Node {
  long id = 0;
  int depth = 0;
  double bound = 0.0;
  std::vector<double> lo;
  std::vector<double> hi;
  LpSolution lp;
};

struct NodeOrder {
  bool operator()(const Node *a, const Node *b) const {
    if (a->bound != b->bound)
      return a->bound > b->bound;
    return a->id > b->id; // FIFO among equal bounds
  }
};

// Most fractional integer variable, ties to the lowest index; none if integral.
std::optional<std::size_t> branching_variable(const LinearProgramSpec &spec,
                                              const std::vector<double> &x) {
  std::optional<std::size_t> best;
  double best_score = integrality_tol;
  for (std::size_t j = 0; j < spec.num_variables(); ++j) {
    if (!spec.variables()[j].integer)
      continue;
    double frac = x[j] - std::floor(x[j]);
    double score = std::min(frac, 1.0 - frac);
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

} // namespace

std::string_view to_string(MilpStatus s) {
  switch (s) {
  case MilpStatus::optimal:
    return "optimal";
  case MilpStatus::infeasible:
    return "infeasible";
  case MilpStatus::unbounded:
    return "unbounded";
  case MilpStatus::gap_limit:
    return "gap_limit";
  case MilpStatus::node_limit:
    return "node_limit";
  case MilpStatus::time_limit:
    return "time_limit";
  }
  return "?";
}

MilpSolution solve_milp(const LinearProgramSpec &spec, const SolverOptions &opts) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  MilpSolution result;
  auto log = [&](const Node &n, double bound, const std::string &action) {
    if (opts.log)
      fmt::print(*opts.log, "node {} depth {} bound {} action {}\n", n.id, n.depth,
                 fmt::format("{:.10g}", bound), action);
  };

  std::vector<std::unique_ptr<Node>> storage;
  std::priority_queue<Node *, std::vector<Node *>, NodeOrder> open;
  long next_id = 0;

  auto make_node = [&](std::vector<double> lo, std::vector<double> hi, int depth) {
    auto n = std::make_unique<Node>();
    n->id = next_id++;
    n->depth = depth;
    n->lo = std::move(lo);
    n->hi = std::move(hi);
    n->lp = solve_lp(spec, n->lo, n->hi, opts);
    n->bound = n->lp.objective;
    storage.push_back(std::move(n));
    return storage.back().get();
  };

  // Accepts an integral LP point as incumbent candidate.
  auto accept = [&](const Node &n) {
    LpSolution cand = n.lp;
    bool exact = true;
    for (std::size_t j = 0; j < spec.num_variables(); ++j)
      if (spec.variables()[j].integer && std::abs(cand.values[j] - std::round(cand.values[j])) > 1e-9)
        exact = false;
    if (!exact) {
      // Re-solve with the integers fixed so continuous values match them.
      auto lo = n.lo, hi = n.hi;
      for (std::size_t j = 0; j < spec.num_variables(); ++j)
        if (spec.variables()[j].integer)
          lo[j] = hi[j] = std::round(cand.values[j]);
      auto fixed = solve_lp(spec, lo, hi, opts);
      if (fixed.status == LpStatus::optimal)
        cand = std::move(fixed);
    }
    for (std::size_t j = 0; j < spec.num_variables(); ++j)
      if (spec.variables()[j].integer)
        cand.values[j] = std::round(cand.values[j]);
    cand.objective = spec.objective_value(cand.values);
    if (!result.has_incumbent || cand.objective < result.incumbent.objective) {
      result.has_incumbent = true;
      result.incumbent = std::move(cand);
      result.incumbent_history.push_back(result.incumbent.objective);
      return true;
    }
    return false;
  };

  auto prune_tol = [&] {
    double inc = result.incumbent.objective;
    return std::max(opts.abs_gap, opts.rel_gap * std::max(1.0, std::abs(inc)));
  };

  std::vector<double> lo, hi;
  for (const auto &v : spec.variables()) {
    lo.push_back(v.lo);
    hi.push_back(v.hi);
  }
  Node *root = make_node(lo, hi, 0);
  result.nodes_explored = 1;
  if (root->lp.status == LpStatus::infeasible) {
    log(*root, infinity, "infeasible");
    result.status = MilpStatus::infeasible;
    return result;
  }
  if (root->lp.status == LpStatus::unbounded) {
    log(*root, -infinity, "unbounded");
    result.status = MilpStatus::unbounded;
    return result;
  }
  if (root->lp.status == LpStatus::iteration_limit) {
    log(*root, -infinity, "iteration_limit");
    result.status = MilpStatus::node_limit;
    return result;
  }
  open.push(root);

  MilpStatus stop = MilpStatus::optimal;
  bool first = true;
  bool incomplete = false; // some child LP hit its iteration limit
  while (!open.empty()) {
    Node *n = open.top();
    double global = n->bound;
    if (result.has_incumbent)
      global = std::min(global, result.incumbent.objective);
    if (result.bound_history.empty() || global >= result.bound_history.back())
      result.bound_history.push_back(global);
    else
      result.bound_history.push_back(result.bound_history.back());

    if (result.has_incumbent && n->bound >= result.incumbent.objective - prune_tol()) {
      // Best-bound order: every remaining node is at least as bad.
      while (!open.empty()) {
        log(*open.top(), open.top()->bound, "pruned");
        open.pop();
      }
      break;
    }
    open.pop();
    if (!first) {
      if (result.nodes_explored >= opts.max_nodes) {
        open.push(n);
        stop = MilpStatus::node_limit;
        break;
      }
      auto elapsed = std::chrono::duration<double>(clock::now() - start).count();
      if (elapsed > opts.time_limit_seconds) {
        open.push(n);
        stop = MilpStatus::time_limit;
        break;
      }
    }
    first = false;

    auto branch = branching_variable(spec, n->lp.values);
    if (!branch) {
      bool improved = accept(*n);
      log(*n, n->bound, improved ? "integral incumbent" : "integral");
      continue;
    }
    const std::size_t j = *branch;
    const double v = n->lp.values[j];
    log(*n, n->bound, fmt::format("branch {} at {:.6g}", spec.variables()[j].name, v));

    auto down_hi = n->hi;
    down_hi[j] = std::floor(v);
    auto up_lo = n->lo;
    up_lo[j] = std::ceil(v);
    for (int side = 0; side < 2; ++side) {
      Node *child = side == 0 ? make_node(n->lo, down_hi, n->depth + 1)
                              : make_node(up_lo, n->hi, n->depth + 1);
      ++result.nodes_explored;
      if (child->lp.status == LpStatus::infeasible) {
        log(*child, infinity, "infeasible");
        continue;
      }
      if (child->lp.status != LpStatus::optimal) {
        incomplete = true;
        log(*child, -infinity, std::string(to_string(child->lp.status)));
        continue;
      }
      if (result.has_incumbent && child->bound >= result.incumbent.objective - prune_tol()) {
        log(*child, child->bound, "pruned");
        continue;
      }
      open.push(child);
    }
  }

  double bound = result.has_incumbent ? result.incumbent.objective : infinity;
  if (!open.empty())
    bound = std::min(bound, open.top()->bound);
  result.bound = bound;
  if (!result.has_incumbent) {
    result.status = stop == MilpStatus::optimal ? MilpStatus::infeasible : stop;
    return result;
  }
  const double inc = result.incumbent.objective;
  result.gap = std::max(0.0, (inc - bound) / std::max(1.0, std::abs(inc)));
  if (stop != MilpStatus::optimal)
    result.status = stop;
  else if (!incomplete && inc - bound <= opts.abs_gap + 1e-9 * std::max(1.0, std::abs(inc)))
    result.status = MilpStatus::optimal;
  else
    result.status = MilpStatus::gap_limit;
  return result;
}

} // namespace pvgrid
