#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pvgrid/config.hpp"

namespace pvgrid {

enum class UnitKind { retiring, oil, coal, gas, nuclear, hydro, wind, pv };

std::string_view to_string(UnitKind kind);
std::optional<UnitKind> parse_unit_kind(std::string_view text);

struct PlanningHorizon {
  int n_years = 1;
  double discount_rate = 0.05;
  int hours_per_year = 8760;

  bool operator==(const PlanningHorizon &) const = default;
};

/// Per-year vectors are dense (length n_years) once loaded.
struct Region {
  std::string id;
  std::string name;
  std::vector<double> pv_build_cost;  // $/unit
  std::vector<double> land_cost;      // $/unit
  std::vector<double> pv_build_limit; // units per year
  double voll = 0.0;                  // $/MWh
  std::vector<double> reserve_margin; // MW
  std::vector<double> rps;            // fraction of capacity
  /// One entry per block index; a single entry applies to every block.
  std::vector<double> maintenance_factor;
  double validated_dispatch_total = 0.0; // MW

  double maintenance_factor_at(std::size_t block) const;

  bool operator==(const Region &) const = default;
};

struct UnitGroup {
  std::string id;
  std::string region;
  std::size_t region_index = 0;
  UnitKind kind = UnitKind::gas;
  double p_max = 0.0; // MW per unit
  int existing_count = 0;
  double fixed_om = 0.0;  // $/MW-year
  double var_om = 0.0;    // $/MWh
  double heat_rate = 0.0; // MBtu/MWh
  std::vector<double> fuel_price; // $/MBtu per year
  double emission_coeff = 0.0;    // ton/MBtu
  std::vector<double> emission_price; // $/ton per year
  double forced_outage_rate = 0.0;
  double maintenance_outage_rate = 0.0;
  double inertia_h = 0.0;      // s on unit MVA base
  double governor_droop = 0.0; // per unit
  double governor_tg = 5.0;    // s
  double validated_dispatch = 0.0; // MW, whole group

  bool is_pv() const { return kind == UnitKind::pv; }

  bool operator==(const UnitGroup &) const = default;
};

/// Positive flow runs from `from_region` to `to_region`.
struct Interface {
  std::string id;
  std::string from_region;
  std::string to_region;
  std::size_t from_index = 0;
  std::size_t to_index = 0;
  double capacity = 0.0;       // MW
  double wheeling_price = 0.0; // $/MWh
  double sync_stiffness = 0.0; // MW/rad

  bool operator==(const Interface &) const = default;
};

struct HourlySeries {
  std::string region;
  std::size_t region_index = 0;
  int year = 1; // 1-based
  std::vector<double> load_mw;
  std::vector<double> solar_cf;

  bool operator==(const HourlySeries &) const = default;
};

struct PlanningCase {
  PlanningHorizon horizon;
  std::vector<Region> regions;
  std::vector<UnitGroup> units;
  std::vector<Interface> interfaces;
  std::vector<HourlySeries> series; // ordered by (year, region)
  Config config;

  std::optional<std::size_t> find_region(std::string_view id) const;
  const HourlySeries &series_for(std::size_t region, int year) const;
  std::vector<std::size_t> units_in(std::size_t region) const;
  /// The region's PV group, which also parameterizes newly built PV.
  std::optional<std::size_t> pv_unit(std::size_t region) const;

  bool operator==(const PlanningCase &) const = default;
};

struct Violation {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Reads a case bundle directory:
///   config.toml, regions.csv, units.csv, interfaces.csv,
///   series/<region>_<year>.csv (hour, load_mw, solar_cf)
/// Throws InputError naming file and row for missing files, bad rows,
/// dangling ids and invariant violations.
PlanningCase load_case_bundle(const std::filesystem::path &dir);

/// Writes a bundle that `load_case_bundle` reads back to an equal case.
void write_case_bundle(const PlanningCase &pc, const std::filesystem::path &dir);

ValidationReport validate_case(const PlanningCase &pc);

} // namespace pvgrid
