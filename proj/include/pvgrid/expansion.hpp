#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pvgrid/blocks.hpp"
#include "pvgrid/case.hpp"
#include "pvgrid/lp.hpp"
#include "pvgrid/solver.hpp"

namespace pvgrid {

/// Present-value coefficient per planning year. The final year carries the
/// perpetuity tail (costs of that year repeat forever after).
struct DiscountSchedule {
  std::vector<double> d_y; // d_y[y - 1]

  double at(int year) const { return d_y.at(year - 1); }
};

/// Throws InputError when discount_rate <= 0 or n_years < 1.
DiscountSchedule build_discount_schedule(const PlanningHorizon &horizon);

/// How emission tonnage is derived from dispatch.
///   output:     tons = e * MWh        (e read as ton per MWh-equivalent)
///   heat_input: tons = e * R_H * MWh  (e read as ton per MBtu)
enum class EmissionBasis { output, heat_input };

struct ExpansionOptions {
  EmissionBasis emission_basis = EmissionBasis::output;

  /// Reads `expansion.emission_basis` ("output" or "heat_input").
  static ExpansionOptions from_config(const Config &cfg);
};

struct CostBreakdown {
  double pv_expansion = 0.0;
  double fixed_om = 0.0;
  double var_om = 0.0;
  double fuel = 0.0;
  double emission = 0.0;
  double wheeling = 0.0;
  double lost_load = 0.0;
  double total = 0.0;

  double sum_of_parts() const {
    return pv_expansion + fixed_om + var_om + fuel + emission + wheeling + lost_load;
  }
  /// (name, value) pairs in a fixed order, total last.
  std::vector<std::pair<std::string, double>> items() const;
};

/// Decision arrays of a plan. Years are 1-based in the API and 0-based in
/// the storage (index y - 1).
struct ExpansionSolution {
  std::vector<std::vector<double>> pv_built;               // [region][y]
  std::vector<std::vector<std::vector<double>>> dispatch;  // [unit][y][block], MW per unit
  std::vector<std::vector<std::vector<double>>> unserved;  // [region][y][block], MW
  std::vector<std::vector<std::vector<double>>> flows;     // [interface][y][block], MW
  CostBreakdown cost;

  std::string status = "none";
  double objective = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  long nodes = 0;
};

/// All-zero arrays shaped for the case and schedule.
ExpansionSolution zero_solution(const PlanningCase &pc, const BlockSchedule &sched);

/// Units of a group in service in `year`: existing count, plus everything
/// built up to and including that year for the region's PV group.
double units_in_service(const PlanningCase &pc, const ExpansionSolution &sol, std::size_t unit,
                        int year);
/// PV capacity (MW) of a region in `year`.
double pv_capacity_mw(const PlanningCase &pc, const ExpansionSolution &sol, std::size_t region,
                      int year);

/// Available-capacity factor (1 - F_MOR * MF - F_FOR) clamped to [0, 1].
double derating_factor(const PlanningCase &pc, std::size_t unit, std::size_t block);

/// Throws InputError on any dimension mismatch.
CostBreakdown evaluate_cost_breakdown(const PlanningCase &pc, const BlockSchedule &sched,
                                      const ExpansionSolution &sol,
                                      const ExpansionOptions &opts = {});

/// Variables (keyed by VarKey):
///   dispatch (unit, year, block): group total MW
///   unserved (region, year, block), flow_forward / flow_reverse (interface, year, block)
///   pv_built (region, year): integer
/// Row families: balance, adequacy, pv_output, rps, compatibility. Capacity,
/// interface and build limits are variable bounds.
LinearProgramSpec build_expansion_lp(const PlanningCase &pc, const BlockSchedule &sched,
                                     const ExpansionOptions &opts = {});

ExpansionSolution solution_from_lp(const PlanningCase &pc, const BlockSchedule &sched,
                                   const LinearProgramSpec &spec, std::span<const double> values);
std::vector<double> lp_vector_from_solution(const PlanningCase &pc, const BlockSchedule &sched,
                                            const LinearProgramSpec &spec,
                                            const ExpansionSolution &sol);

struct PlanResult {
  LinearProgramSpec spec;
  MilpSolution milp;
  ExpansionSolution solution; // meaningful when milp.has_incumbent
};

/// Builds and solves the expansion problem and evaluates its cost breakdown.
PlanResult plan_expansion(const PlanningCase &pc, const BlockSchedule &sched,
                          const SolverOptions &solver = {}, const ExpansionOptions &opts = {});

struct AuditFamily {
  std::string name;
  double max_residual = 0.0;
  std::string worst; // location of the largest residual
};

struct AuditReport {
  std::vector<AuditFamily> families;
  double tol = 0.0;

  bool pass() const;
  double max_residual() const;
  const AuditFamily &family(const std::string &name) const;
};

/// Residuals evaluated straight from the case data, independent of the LP.
/// Families: balance, build_limit, integrality, capacity, unserved, adequacy,
/// interface, rps, pv_output, compatibility.
AuditReport audit_solution(const PlanningCase &pc, const BlockSchedule &sched,
                           const ExpansionSolution &sol, double tol);

void write_solution_json(const PlanningCase &pc, const ExpansionSolution &sol,
                         const std::string &bundle_hash, const std::filesystem::path &path);
/// Returns the solution and the bundle hash stored with it.
std::pair<ExpansionSolution, std::string> read_solution_json(const PlanningCase &pc,
                                                             const BlockSchedule &sched,
                                                             const std::filesystem::path &path);

} // namespace pvgrid
