#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvgrid/blocks.hpp"
#include "pvgrid/case.hpp"
#include "pvgrid/expansion.hpp"

namespace pvgrid {

/// A scenario that cannot be built at the requested level. `shortfall_mw`
/// is positive when PV availability is what ran out.
class ScenarioError : public std::runtime_error {
public:
  ScenarioError(const std::string &what, double shortfall_mw = 0.0)
      : std::runtime_error(what), shortfall_mw_(shortfall_mw) {}
  double shortfall_mw() const { return shortfall_mw_; }

private:
  double shortfall_mw_;
};

/// A conventional unit group as committed in a dynamic case. Machine rating
/// is taken as p_max MVA per unit.
struct MachineGroup {
  std::string id;
  UnitKind kind = UnitKind::gas;
  double p_max = 0.0;    // MW per unit
  int online_count = 0;
  double dispatch_mw = 0.0; // whole group
  double inertia_h = 0.0;
  double droop = 0.05;
  double governor_tg = 5.0;

  double rating_mva() const { return p_max * online_count; }
  double per_unit_dispatch() const { return online_count > 0 ? dispatch_mw / online_count : 0.0; }

  bool operator==(const MachineGroup &) const = default;
};

struct DynamicRegion {
  std::string id;
  std::vector<MachineGroup> machines;
  double pv_mw = 0.0;
  double load_mw = 0.0;
  double initial_angle = 0.0; // rad

  double conventional_mw() const;
  double rating_mva() const;
  /// Sum of H * S over online machines, MW*s.
  double stored_energy() const;

  bool operator==(const DynamicRegion &) const = default;
};

struct TieLine {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  double stiffness = 0.0; // MW/rad
  double capacity = 0.0;  // MW

  bool operator==(const TieLine &) const = default;
};

struct DynamicCase {
  double level = 0.0;
  int year = 0;          // 0 for the base fleet
  std::size_t block = 0;
  double f0 = 60.0;
  std::vector<DynamicRegion> regions;
  std::vector<TieLine> ties;

  double total_generation() const;
  double total_pv() const;
  double pv_share() const;
  double stored_energy() const;
  /// Flow on a tie at the initial angles, positive from -> to.
  double tie_flow(std::size_t tie) const;
  /// Generation - load - net export of a region at the initial state.
  double balance_residual(std::size_t region) const;
  double max_balance_residual() const;

  bool operator==(const DynamicCase &) const = default;
};

/// Indices into `fleet`, best displacement candidate first. PV and wind are
/// never candidates.
std::vector<std::size_t> rank_displacement_candidates(const std::vector<MachineGroup> &fleet);

struct DisplacementStep {
  std::size_t machine = 0; // index into the fleet
  std::string id;
  double mw_displaced = 0.0;
  int whole_units_removed = 0;
  double partial_mw = 0.0;
};

struct DisplacementPlan {
  std::vector<DisplacementStep> steps;

  double total_mw() const;
};

/// Greedy walk down the ranked fleet: whole units go while the next one
/// fits, then one group is scaled down for the remainder. Throws
/// ScenarioError when the target exceeds the displaceable dispatch.
DisplacementPlan build_displacement_plan(const std::vector<MachineGroup> &fleet, double target_mw);
void apply_displacement(std::vector<MachineGroup> &fleet, const DisplacementPlan &plan);

/// The validated fleet: every existing unit online at its validated
/// dispatch, PV at its validated output, load equal to local generation.
DynamicCase base_dynamic_case(const PlanningCase &pc);

/// "peak_solar" picks the block with the largest system PV availability
/// (capacity times CF) across all years; "Y:S" names year Y, block S.
const TimeBlock &select_block(const PlanningCase &pc, const BlockSchedule &sched,
                              const ExpansionSolution &sol, const std::string &selector);

/// PV available in each region at the block: capacity in the block's year
/// times the block CF.
std::vector<double> pv_available_mw(const PlanningCase &pc, const ExpansionSolution &sol,
                                    const TimeBlock &block);

/// Level 0 returns the base fleet. Otherwise system PV is raised to
/// level * generation, spread over regions in proportion to their spare PV
/// availability at the block; each region displaces its own conventional
/// output first and exports what it cannot absorb. Throws ScenarioError
/// when the level is unbuildable.
DynamicCase build_dynamic_case(const PlanningCase &pc, const ExpansionSolution &sol,
                               const TimeBlock &block, double level);

void write_dynamic_case_json(const DynamicCase &dc, const std::filesystem::path &path);
DynamicCase read_dynamic_case_json(const std::filesystem::path &path);

} // namespace pvgrid
