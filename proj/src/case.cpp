#include "pvgrid/case.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "pvgrid/table.hpp"

namespace pvgrid {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kind_names[] = {"retiring", "oil",   "coal", "gas",
                                           "nuclear",  "hydro", "wind", "pv"};

// One value or n_years values; expanded to n_years.
std::vector<double> per_year(const CsvTable &t, std::size_t row, std::string_view col,
                             int n_years) {
  auto xs = t.number_list(row, col);
  if (xs.size() == 1)
    return std::vector<double>(static_cast<std::size_t>(n_years), xs.front());
  if (xs.size() != static_cast<std::size_t>(n_years))
    throw InputError(t.source(), t.file_row(row),
                     fmt::format("column '{}': expected 1 or {} values, found {}", col, n_years,
                                 xs.size()));
  return xs;
}

std::string join_numbers(const std::vector<double> &xs) {
  // Collapse a constant vector to a single value.
  bool constant = !xs.empty();
  for (double x : xs)
    constant = constant && x == xs.front();
  if (constant)
    return format_number(xs.front());
  std::vector<std::string> parts;
  for (double x : xs)
    parts.push_back(format_number(x));
  return fmt::format("{}", fmt::join(parts, ";"));
}

void require_unique(const CsvTable &t, std::size_t row, std::set<std::string> &seen,
                    const std::string &id) {
  if (id.empty())
    throw InputError(t.source(), t.file_row(row), "empty id");
  if (!seen.insert(id).second)
    throw InputError(t.source(), t.file_row(row), fmt::format("duplicate id '{}'", id));
}

std::string entity_path(std::string_view file, std::size_t index, const std::string &id,
                        std::string_view field) {
  return fmt::format("{}:{} ({}) {}", file, index + 2, id, field);
}

} // namespace

std::string_view to_string(UnitKind kind) { return kind_names[static_cast<int>(kind)]; }

std::optional<UnitKind> parse_unit_kind(std::string_view text) {
  for (int i = 0; i < 8; ++i)
    if (kind_names[i] == text)
      return static_cast<UnitKind>(i);
  return std::nullopt;
}

double Region::maintenance_factor_at(std::size_t block) const {
  if (maintenance_factor.empty())
    return 0.0;
  // Blocks past the end of the list reuse the last value.
  return maintenance_factor[std::min(block, maintenance_factor.size() - 1)];
}

std::optional<std::size_t> PlanningCase::find_region(std::string_view id) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].id == id)
      return i;
  return std::nullopt;
}

const HourlySeries &PlanningCase::series_for(std::size_t region, int year) const {
  for (const auto &s : series)
    if (s.region_index == region && s.year == year)
      return s;
  throw InputError(fmt::format("no series for region '{}' year {}", regions.at(region).id, year));
}

std::vector<std::size_t> PlanningCase::units_in(std::size_t region) const {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < units.size(); ++g)
    if (units[g].region_index == region)
      out.push_back(g);
  return out;
}

std::optional<std::size_t> PlanningCase::pv_unit(std::size_t region) const {
  for (std::size_t g = 0; g < units.size(); ++g)
    if (units[g].region_index == region && units[g].is_pv())
      return g;
  return std::nullopt;
}

std::string ValidationReport::to_string() const {
  std::string out;
  for (const auto &v : violations)
    out += fmt::format("{}: {}\n", v.path, v.message);
  return out;
}

ValidationReport validate_case(const PlanningCase &pc) {
  ValidationReport rep;
  auto flag = [&](std::string path, std::string msg) {
    rep.violations.push_back({std::move(path), std::move(msg)});
  };
  const auto &h = pc.horizon;
  if (h.n_years < 1)
    flag("config.toml horizon.n_years", "n_years must be >= 1");
  if (!(h.discount_rate > 0.0))
    flag("config.toml horizon.discount_rate", "discount_rate must be > 0");
  if (h.hours_per_year <= 0)
    flag("config.toml horizon.hours_per_year", "hours_per_year must be > 0");
  const auto years = static_cast<std::size_t>(std::max(h.n_years, 0));

  auto check_years = [&](const std::string &path, const std::vector<double> &xs) {
    if (xs.size() != years)
      flag(path, fmt::format("expected {} yearly values, found {}", years, xs.size()));
  };
  auto check_nonneg = [&](const std::string &path, const std::vector<double> &xs) {
    for (double x : xs)
      if (x < 0.0) {
        flag(path, "must be >= 0");
        return;
      }
  };
  auto check_unit = [&](const std::string &path, const std::vector<double> &xs) {
    for (double x : xs)
      if (x < 0.0 || x > 1.0) {
        flag(path, "must lie in [0,1]");
        return;
      }
  };

  std::set<std::string> region_ids;
  for (std::size_t i = 0; i < pc.regions.size(); ++i) {
    const auto &r = pc.regions[i];
    auto p = [&](std::string_view f) { return entity_path("regions.csv", i, r.id, f); };
    if (!region_ids.insert(r.id).second)
      flag(p("id"), "duplicate region id");
    check_years(p("pv_build_cost"), r.pv_build_cost);
    check_years(p("land_cost"), r.land_cost);
    check_years(p("pv_build_limit"), r.pv_build_limit);
    check_years(p("reserve_margin"), r.reserve_margin);
    check_years(p("rps"), r.rps);
    check_nonneg(p("pv_build_cost"), r.pv_build_cost);
    check_nonneg(p("land_cost"), r.land_cost);
    check_nonneg(p("pv_build_limit"), r.pv_build_limit);
    for (double x : r.pv_build_limit)
      if (std::floor(x) != x) {
        flag(p("pv_build_limit"), "must be whole units");
        break;
      }
    check_nonneg(p("reserve_margin"), r.reserve_margin);
    if (r.voll < 0.0)
      flag(p("voll"), "must be >= 0");
    check_unit(p("rps"), r.rps);
    if (r.maintenance_factor.empty())
      flag(p("maintenance_factor"), "at least one value required");
    check_unit(p("maintenance_factor"), r.maintenance_factor);
    if (r.validated_dispatch_total < 0.0)
      flag(p("validated_dispatch_total"), "must be >= 0");
  }

  std::set<std::string> unit_ids;
  std::vector<double> dispatch_sum(pc.regions.size(), 0.0);
  std::vector<int> pv_groups(pc.regions.size(), 0);
  for (std::size_t i = 0; i < pc.units.size(); ++i) {
    const auto &u = pc.units[i];
    auto p = [&](std::string_view f) { return entity_path("units.csv", i, u.id, f); };
    if (!unit_ids.insert(u.id).second)
      flag(p("id"), "duplicate unit group id");
    if (u.region_index >= pc.regions.size() || pc.regions[u.region_index].id != u.region) {
      flag(p("region"), fmt::format("dangling region id '{}'", u.region));
      continue;
    }
    if (!(u.p_max > 0.0))
      flag(p("p_max"), "must be > 0");
    if (u.existing_count < 0)
      flag(p("existing_count"), "must be >= 0");
    if (u.fixed_om < 0.0)
      flag(p("fixed_om"), "must be >= 0");
    if (u.var_om < 0.0)
      flag(p("var_om"), "must be >= 0");
    if (u.heat_rate < 0.0)
      flag(p("heat_rate"), "must be >= 0");
    if (u.emission_coeff < 0.0)
      flag(p("emission_coeff"), "must be >= 0");
    check_years(p("fuel_price"), u.fuel_price);
    check_years(p("emission_price"), u.emission_price);
    check_nonneg(p("fuel_price"), u.fuel_price);
    check_nonneg(p("emission_price"), u.emission_price);
    check_unit(p("forced_outage_rate"), {u.forced_outage_rate});
    check_unit(p("maintenance_outage_rate"), {u.maintenance_outage_rate});
    if (u.is_pv()) {
      if (u.inertia_h != 0.0)
        flag(p("inertia_h"), "inertia_h must be 0 for pv");
      ++pv_groups[u.region_index];
    } else {
      if (!(u.inertia_h > 0.0))
        flag(p("inertia_h"), "inertia_h must be > 0 for synchronous kinds");
      if (!(u.governor_droop > 0.0))
        flag(p("governor_droop"), "governor_droop must be > 0 for synchronous kinds");
      if (!(u.governor_tg > 0.0))
        flag(p("governor_tg"), "governor_tg must be > 0");
    }
    if (u.validated_dispatch < 0.0)
      flag(p("validated_dispatch"), "must be >= 0");
    if (u.validated_dispatch > u.p_max * u.existing_count + 1e-9)
      flag(p("validated_dispatch"), "exceeds installed capacity p_max * existing_count");
    dispatch_sum[u.region_index] += u.validated_dispatch;
  }
  for (std::size_t r = 0; r < pc.regions.size(); ++r) {
    const auto &reg = pc.regions[r];
    if (pv_groups[r] > 1)
      flag(entity_path("regions.csv", r, reg.id, "pv"), "at most one pv unit group per region");
    if (std::abs(dispatch_sum[r] - reg.validated_dispatch_total) >
        1e-6 * std::max(1.0, reg.validated_dispatch_total))
      flag(entity_path("regions.csv", r, reg.id, "validated_dispatch_total"),
           fmt::format("must equal the sum of unit validated_dispatch ({})",
                       format_number(dispatch_sum[r])));
  }

  std::set<std::string> iface_ids;
  for (std::size_t i = 0; i < pc.interfaces.size(); ++i) {
    const auto &l = pc.interfaces[i];
    auto p = [&](std::string_view f) { return entity_path("interfaces.csv", i, l.id, f); };
    if (!iface_ids.insert(l.id).second)
      flag(p("id"), "duplicate interface id");
    if (!pc.find_region(l.from_region))
      flag(p("from_region"), fmt::format("dangling region id '{}'", l.from_region));
    if (!pc.find_region(l.to_region))
      flag(p("to_region"), fmt::format("dangling region id '{}'", l.to_region));
    if (l.from_region == l.to_region)
      flag(p("to_region"), "from_region and to_region must differ");
    if (l.capacity < 0.0)
      flag(p("capacity"), "must be >= 0");
    if (l.wheeling_price < 0.0)
      flag(p("wheeling_price"), "must be >= 0");
    if (!(l.sync_stiffness > 0.0))
      flag(p("sync_stiffness"), "must be > 0");
  }

  for (std::size_t r = 0; r < pc.regions.size(); ++r) {
    for (int y = 1; y <= h.n_years; ++y) {
      int found = 0;
      for (const auto &s : pc.series)
        if (s.region_index == r && s.year == y && s.region == pc.regions[r].id)
          ++found;
      if (found != 1)
        flag(fmt::format("series/{}_{}.csv", pc.regions[r].id, y),
             found == 0 ? "missing series" : "duplicate series");
    }
  }
  for (const auto &s : pc.series) {
    auto base = fmt::format("series/{}_{}.csv", s.region, s.year);
    if (s.load_mw.size() != static_cast<std::size_t>(h.hours_per_year) ||
        s.solar_cf.size() != static_cast<std::size_t>(h.hours_per_year)) {
      flag(base, fmt::format("expected {} hourly rows, found {}", h.hours_per_year,
                             s.load_mw.size()));
      continue;
    }
    for (std::size_t t = 0; t < s.load_mw.size(); ++t) {
      if (s.load_mw[t] < 0.0) {
        flag(fmt::format("{}:{} load_mw", base, t + 2), "load must be >= 0");
        break;
      }
    }
    for (std::size_t t = 0; t < s.solar_cf.size(); ++t) {
      if (s.solar_cf[t] < 0.0 || s.solar_cf[t] > 1.0) {
        flag(fmt::format("{}:{} solar_cf", base, t + 2),
             fmt::format("value {} outside bounds [0,1]", format_number(s.solar_cf[t])));
        break;
      }
    }
  }
  return rep;
}

PlanningCase load_case_bundle(const fs::path &dir) {
  PlanningCase pc;
  pc.config = Config::read(dir / "config.toml");
  pc.horizon.n_years = static_cast<int>(pc.config.integer("horizon.n_years", 1));
  pc.horizon.discount_rate = pc.config.require_number("horizon.discount_rate");
  pc.horizon.hours_per_year = static_cast<int>(pc.config.integer("horizon.hours_per_year", 8760));
  if (pc.horizon.n_years < 1)
    throw InputError((dir / "config.toml").string(), 0, "horizon.n_years must be >= 1");
  if (pc.horizon.hours_per_year < 1)
    throw InputError((dir / "config.toml").string(), 0, "horizon.hours_per_year must be >= 1");
  const int ny = pc.horizon.n_years;

  auto regions = CsvTable::read(dir / "regions.csv");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < regions.rows(); ++i) {
    Region r;
    r.id = regions.text(i, "id");
    require_unique(regions, i, seen, r.id);
    r.name = regions.has_column("name") ? regions.text(i, "name") : r.id;
    r.pv_build_cost = per_year(regions, i, "pv_build_cost", ny);
    r.land_cost = per_year(regions, i, "land_cost", ny);
    r.pv_build_limit = per_year(regions, i, "pv_build_limit", ny);
    r.voll = regions.number(i, "voll");
    r.reserve_margin = per_year(regions, i, "reserve_margin", ny);
    r.rps = per_year(regions, i, "rps", ny);
    r.maintenance_factor = regions.number_list(i, "maintenance_factor");
    r.validated_dispatch_total = regions.number(i, "validated_dispatch_total");
    pc.regions.push_back(std::move(r));
  }

  auto resolve = [&](const CsvTable &t, std::size_t row, std::string_view col) {
    const auto &id = t.text(row, col);
    auto idx = pc.find_region(id);
    if (!idx)
      throw InputError(t.source(), t.file_row(row),
                       fmt::format("dangling region id '{}' in column '{}'", id, col));
    return *idx;
  };

  auto units = CsvTable::read(dir / "units.csv");
  seen.clear();
  for (std::size_t i = 0; i < units.rows(); ++i) {
    UnitGroup u;
    u.id = units.text(i, "id");
    require_unique(units, i, seen, u.id);
    u.region = units.text(i, "region");
    u.region_index = resolve(units, i, "region");
    auto kind = parse_unit_kind(units.text(i, "kind"));
    if (!kind)
      throw InputError(units.source(), units.file_row(i),
                       fmt::format("unknown kind '{}'", units.text(i, "kind")));
    u.kind = *kind;
    u.p_max = units.number(i, "p_max");
    u.existing_count = static_cast<int>(units.integer(i, "existing_count"));
    u.fixed_om = units.number(i, "fixed_om");
    u.var_om = units.number(i, "var_om");
    u.heat_rate = units.number(i, "heat_rate");
    u.fuel_price = per_year(units, i, "fuel_price", ny);
    u.emission_coeff = units.number(i, "emission_coeff");
    u.emission_price = per_year(units, i, "emission_price", ny);
    u.forced_outage_rate = units.number(i, "forced_outage_rate");
    u.maintenance_outage_rate = units.number(i, "maintenance_outage_rate");
    u.inertia_h = units.number(i, "inertia_h");
    u.governor_droop = units.number(i, "governor_droop");
    if (units.has_column("governor_tg"))
      u.governor_tg = units.number(i, "governor_tg");
    u.validated_dispatch = units.number(i, "validated_dispatch");
    pc.units.push_back(std::move(u));
  }

  auto ifaces = CsvTable::read(dir / "interfaces.csv");
  seen.clear();
  for (std::size_t i = 0; i < ifaces.rows(); ++i) {
    Interface l;
    l.id = ifaces.text(i, "id");
    require_unique(ifaces, i, seen, l.id);
    l.from_region = ifaces.text(i, "from_region");
    l.to_region = ifaces.text(i, "to_region");
    l.from_index = resolve(ifaces, i, "from_region");
    l.to_index = resolve(ifaces, i, "to_region");
    l.capacity = ifaces.number(i, "capacity");
    l.wheeling_price = ifaces.number(i, "wheeling_price");
    l.sync_stiffness = ifaces.number(i, "sync_stiffness");
    pc.interfaces.push_back(std::move(l));
  }

  for (int y = 1; y <= ny; ++y) {
    for (std::size_t r = 0; r < pc.regions.size(); ++r) {
      auto path = dir / "series" / fmt::format("{}_{}.csv", pc.regions[r].id, y);
      auto t = CsvTable::read(path);
      HourlySeries s;
      s.region = pc.regions[r].id;
      s.region_index = r;
      s.year = y;
      s.load_mw.reserve(t.rows());
      s.solar_cf.reserve(t.rows());
      for (std::size_t i = 0; i < t.rows(); ++i) {
        if (t.integer(i, "hour") != static_cast<long long>(i))
          throw InputError(t.source(), t.file_row(i),
                           fmt::format("hour column must count 0,1,2,...; expected {}", i));
        s.load_mw.push_back(t.number(i, "load_mw"));
        s.solar_cf.push_back(t.number(i, "solar_cf"));
      }
      if (s.load_mw.empty())
        throw InputError(t.source(), 0, "empty series");
      pc.series.push_back(std::move(s));
    }
  }

  auto report = validate_case(pc);
  if (!report.ok())
    throw InputError(dir.string(), 0, "invalid case bundle:\n" + report.to_string());
  return pc;
}

void write_case_bundle(const PlanningCase &pc, const fs::path &dir) {
  fs::create_directories(dir / "series");
  {
    Config cfg = pc.config;
    cfg.set("horizon.n_years", static_cast<double>(pc.horizon.n_years));
    cfg.set("horizon.discount_rate", pc.horizon.discount_rate);
    cfg.set("horizon.hours_per_year", static_cast<double>(pc.horizon.hours_per_year));
    // Top-level keys first, then one [section] block per prefix.
    std::ofstream out(dir / "config.toml", std::ios::binary);
    std::map<std::string, Config> sections;
    for (const auto &[key, value] : cfg.values()) {
      auto dot = key.find('.');
      if (dot == std::string::npos)
        sections[""].set(key, value);
      else
        sections[key.substr(0, dot)].set(key.substr(dot + 1), value);
    }
    for (const auto &[name, body] : sections) {
      if (!name.empty())
        out << "[" << name << "]\n";
      out << body.canonical();
    }
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto &r : pc.regions) {
    std::vector<std::string> mf;
    for (double x : r.maintenance_factor)
      mf.push_back(format_number(x));
    rows.push_back({r.id, r.name, join_numbers(r.pv_build_cost), join_numbers(r.land_cost),
                    join_numbers(r.pv_build_limit), format_number(r.voll),
                    join_numbers(r.reserve_margin), join_numbers(r.rps),
                    fmt::format("{}", fmt::join(mf, ";")),
                    format_number(r.validated_dispatch_total)});
  }
  write_csv(dir / "regions.csv",
            {"id", "name", "pv_build_cost", "land_cost", "pv_build_limit", "voll",
             "reserve_margin", "rps", "maintenance_factor", "validated_dispatch_total"},
            rows);

  rows.clear();
  for (const auto &u : pc.units)
    rows.push_back({u.id, u.region, std::string(to_string(u.kind)), format_number(u.p_max),
                    std::to_string(u.existing_count), format_number(u.fixed_om),
                    format_number(u.var_om), format_number(u.heat_rate),
                    join_numbers(u.fuel_price), format_number(u.emission_coeff),
                    join_numbers(u.emission_price), format_number(u.forced_outage_rate),
                    format_number(u.maintenance_outage_rate), format_number(u.inertia_h),
                    format_number(u.governor_droop), format_number(u.governor_tg),
                    format_number(u.validated_dispatch)});
  write_csv(dir / "units.csv",
            {"id", "region", "kind", "p_max", "existing_count", "fixed_om", "var_om",
             "heat_rate", "fuel_price", "emission_coeff", "emission_price",
             "forced_outage_rate", "maintenance_outage_rate", "inertia_h", "governor_droop",
             "governor_tg", "validated_dispatch"},
            rows);

  rows.clear();
  for (const auto &l : pc.interfaces)
    rows.push_back({l.id, l.from_region, l.to_region, format_number(l.capacity),
                    format_number(l.wheeling_price), format_number(l.sync_stiffness)});
  write_csv(dir / "interfaces.csv",
            {"id", "from_region", "to_region", "capacity", "wheeling_price", "sync_stiffness"},
            rows);

  for (const auto &s : pc.series) {
    rows.clear();
    for (std::size_t t = 0; t < s.load_mw.size(); ++t)
      rows.push_back({std::to_string(t), format_number(s.load_mw[t]),
                      format_number(s.solar_cf[t])});
    write_csv(dir / "series" / fmt::format("{}_{}.csv", s.region, s.year),
              {"hour", "load_mw", "solar_cf"}, rows);
  }
}

} // namespace pvgrid
