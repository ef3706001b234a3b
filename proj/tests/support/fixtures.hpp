#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pvgrid/blocks.hpp"
#include "pvgrid/case.hpp"
#include "pvgrid/expansion.hpp"

namespace fixtures {

std::filesystem::path source_dir();
std::filesystem::path tiny3_dir();
/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string &name);

pvgrid::Region make_region(const std::string &id, int n_years);
pvgrid::UnitGroup make_unit(const pvgrid::PlanningCase &pc, const std::string &id,
                            const std::string &region, pvgrid::UnitKind kind, double p_max,
                            int count, double validated_dispatch);
pvgrid::Interface make_interface(const pvgrid::PlanningCase &pc, const std::string &id,
                                 const std::string &from, const std::string &to, double capacity);

/// Case with the given regions, no units, and no series.
pvgrid::PlanningCase skeleton(const std::vector<std::string> &regions, int n_years,
                              double discount_rate = 0.05, int hours = 8760);
/// Sets each region's validated total to the sum of its units.
void sync_validated_totals(pvgrid::PlanningCase &pc);
/// Constant hourly series for every (region, year).
void fill_constant_series(pvgrid::PlanningCase &pc, double load, double cf);

/// Schedule built directly from per-year block lists (duration, load, cf).
struct BlockSpec {
  double duration_fraction;
  std::vector<double> load;
  std::vector<double> cf;
};
pvgrid::BlockSchedule schedule_from(const std::vector<std::vector<BlockSpec>> &years);

struct Instance {
  pvgrid::PlanningCase pc;
  pvgrid::BlockSchedule sched;
};

/// Random expansion instance: `regions` regions in a chain, `years` years,
/// `blocks` blocks per year, pv_built limits in 0..5.
Instance random_expansion_instance(std::mt19937_64 &rng, int regions, int years, int blocks);

/// Exhaustive optimum: every build vector within the limits, each priced by
/// per-block dispatch LPs written independently of the model builder.
/// Returns +inf when nothing is feasible.
double enumerate_expansion_optimum(const pvgrid::PlanningCase &pc,
                                   const pvgrid::BlockSchedule &sched,
                                   const pvgrid::ExpansionOptions &opts = {});

/// Closed-form discount coefficient by summing the geometric tail term by term.
double discount_by_series(double d, int n_years, int year);

/// tiny3 partitioned with k = 8, seed 7, and planned; computed once.
struct Tiny3Plan {
  pvgrid::PlanningCase pc;
  pvgrid::BlockSchedule sched;
  pvgrid::PlanResult result;
};
const Tiny3Plan &tiny3_plan();

} // namespace fixtures
