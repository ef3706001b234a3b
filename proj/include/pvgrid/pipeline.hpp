#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pvgrid/blocks.hpp"
#include "pvgrid/case.hpp"
#include "pvgrid/dynamics.hpp"
#include "pvgrid/expansion.hpp"

namespace pvgrid {

inline constexpr const char *tool_version = "pvgrid 0.1.0";

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_internal = 1, exit_input = 2, exit_solver = 3 };

/// SHA-256 over every file of the bundle: sorted relative paths and contents.
std::string bundle_hash(const std::filesystem::path &bundle);

/// A loaded, validated bundle with the effective configuration, plus the
/// run directory all stages write into.
struct RunContext {
  std::filesystem::path bundle;
  std::filesystem::path out;
  PlanningCase pc;
  std::string hash;
};

/// Loads and validates the bundle. `config_path` entries override the
/// bundle's config.toml (horizon keys excepted); `seed` overrides
/// partition.seed. Throws InputError on any input or validation problem.
RunContext open_run(const std::filesystem::path &bundle, const std::filesystem::path &out,
                    const std::optional<std::filesystem::path> &config_path = std::nullopt,
                    std::optional<std::uint64_t> seed = std::nullopt);

struct SweepSpec {
  std::vector<double> levels{0.05, 0.25, 0.45, 0.65};
  std::string block = "peak_solar";
  std::string trip_region;
  double trip_mw = 0.0;
  int workers = 1;

  /// Reads `sweep.*`. The trip is `sweep.trip_mw`, or
  /// `sweep.trip_fraction_of_load` times the base system load (default
  /// 0.003); the region defaults to the first one.
  static SweepSpec from_config(const PlanningCase &pc);
};

struct SweepRow {
  double level = 0.0;
  std::string status = "ok"; // ok, unbuildable, unstable
  double pv_share = 0.0;
  double stored_energy = 0.0;
  double flat_max_deviation = 0.0;
  bool flat_pass = false;
  FrequencyMetrics metrics;
  double shortfall_mw = 0.0;
  std::string note;
};

/// Builds, flat-runs and disturbs one scenario per level, writing
/// scenario.json, flat.csv, trace.csv and metrics.json under
/// `dir`/level_<level>. Levels run on up to `spec.workers` threads.
std::vector<SweepRow> run_sweep(const PlanningCase &pc, const BlockSchedule &sched,
                                const ExpansionSolution &sol, const SweepSpec &spec,
                                const SimConfig &sim, const std::filesystem::path &dir);

/// Stages. Each writes under ctx.out, records itself in manifest.json and
/// returns an exit code.
int cmd_partition(const RunContext &ctx, std::optional<std::size_t> k = std::nullopt);
int cmd_plan(const RunContext &ctx);
int cmd_sweep(const RunContext &ctx,
              const std::optional<std::filesystem::path> &solution = std::nullopt);
/// Writes report.md from whatever stage outputs exist; missing pieces are
/// named in the report. Returns exit_input when the run has no manifest.
int cmd_report(const std::filesystem::path &out);
int cmd_run_all(const RunContext &ctx);

} // namespace pvgrid
