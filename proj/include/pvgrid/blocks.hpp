#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pvgrid/case.hpp"

namespace pvgrid {

/// One representative steady-state operating condition of a year.
struct TimeBlock {
  int year = 1;          // 1-based
  std::size_t block = 0; // 0-based within the year
  double duration_fraction = 0.0;
  std::vector<double> load_mw; // per region
  std::vector<double> pv_cf;   // per region

  bool operator==(const TimeBlock &) const = default;
};

struct BlockSchedule {
  /// years[y - 1][s]
  std::vector<std::vector<TimeBlock>> years;
  /// assignment[y - 1][hour] = block index
  std::vector<std::vector<std::size_t>> assignment;

  int n_years() const { return static_cast<int>(years.size()); }
  std::size_t blocks_in(int year) const { return years.at(year - 1).size(); }
  const TimeBlock &block(int year, std::size_t s) const { return years.at(year - 1).at(s); }

  bool operator==(const BlockSchedule &) const = default;
};

/// Load-solar time-block partition. Each year's hours are clustered by
/// k-means on [normalized load..., normalized solar cf...] per region. Hours
/// dark in every region and lit hours are never mixed (when k >= 2 and both
/// exist). Centers are added one at a time by D^2 sampling from `seed`,
/// followed by Lloyd iterations (capped at 100 per stage), so the run for k
/// is a prefix of the run for k + 1.
///
/// Blocks are numbered by descending total load. Fewer than k blocks come
/// back only when a year has fewer than k distinct hour vectors.
BlockSchedule partition_blocks(const PlanningCase &pc, std::size_t k_per_year,
                               std::uint64_t seed);

struct PartitionYearReport {
  int year = 1;
  std::size_t blocks = 0;
  double duration_sum = 0.0;
  /// (sum_s DF * L * T - sum_h load) per region, MWh.
  std::vector<double> energy_error_mwh;
  /// Largest |energy error| / hourly energy over regions.
  double max_relative_energy_error = 0.0;
  std::size_t zero_cf_blocks = 0;
  /// Within-block sum of squared deviations in the normalized feature space.
  double within_sse = 0.0;
};

struct PartitionReport {
  std::vector<PartitionYearReport> years;
};

/// Throws InputError when `sched` does not fit `pc` (years, regions, hours).
PartitionReport partition_report(const BlockSchedule &sched, const PlanningCase &pc);

/// blocks.csv: year, block, duration_fraction, load_<region>..., cf_<region>...
/// assignment.csv: year, hour, block
void write_block_schedule(const BlockSchedule &sched, const PlanningCase &pc,
                          const std::filesystem::path &dir);
BlockSchedule read_block_schedule(const std::filesystem::path &dir, const PlanningCase &pc);

} // namespace pvgrid
