#include "pvgrid/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "pvgrid/table.hpp"

namespace pvgrid {

namespace {

using Json = nlohmann::ordered_json;

double hours(const PlanningCase &pc) { return static_cast<double>(pc.horizon.hours_per_year); }

double emission_factor(const UnitGroup &u, const ExpansionOptions &opts) {
  return opts.emission_basis == EmissionBasis::heat_input ? u.emission_coeff * u.heat_rate
                                                          : u.emission_coeff;
}

// $ per MWh of group output in `year`, before discounting and duration weighting.
double running_cost_per_mwh(const UnitGroup &u, int year, const ExpansionOptions &opts) {
  const auto y = static_cast<std::size_t>(year - 1);
  return u.var_om + u.heat_rate * u.fuel_price[y] + u.emission_price[y] * emission_factor(u, opts);
}

std::string block_tag(const std::string &id, int year, std::size_t block) {
  return fmt::format("{},y{},s{}", id, year, block);
}

void check_shape(const PlanningCase &pc, const BlockSchedule &sched, const ExpansionSolution &sol) {
  const int ny = pc.horizon.n_years;
  auto fail = [](const std::string &what) { throw InputError("solution shape: " + what); };
  if (sched.n_years() != ny)
    fail("schedule has a different number of years than the case");
  if (sol.pv_built.size() != pc.regions.size() || sol.unserved.size() != pc.regions.size())
    fail("region count mismatch");
  if (sol.dispatch.size() != pc.units.size())
    fail("unit group count mismatch");
  if (sol.flows.size() != pc.interfaces.size())
    fail("interface count mismatch");
  auto check_blocks = [&](const std::vector<std::vector<double>> &v, const std::string &what) {
    if (v.size() != static_cast<std::size_t>(ny))
      fail(what + ": year count mismatch");
    for (int y = 1; y <= ny; ++y)
      if (v[y - 1].size() != sched.blocks_in(y))
        fail(what + ": block count mismatch in year " + std::to_string(y));
  };
  for (const auto &r : sol.pv_built)
    if (r.size() != static_cast<std::size_t>(ny))
      fail("pv_built: year count mismatch");
  for (const auto &g : sol.dispatch)
    check_blocks(g, "dispatch");
  for (const auto &r : sol.unserved)
    check_blocks(r, "unserved");
  for (const auto &l : sol.flows)
    check_blocks(l, "flows");
}

} // namespace

DiscountSchedule build_discount_schedule(const PlanningHorizon &horizon) {
  if (!(horizon.discount_rate > 0.0))
    throw InputError(fmt::format("discount rate must be > 0 (got {})", horizon.discount_rate));
  if (horizon.n_years < 1)
    throw InputError(fmt::format("n_years must be >= 1 (got {})", horizon.n_years));
  const double g = 1.0 + horizon.discount_rate;
  const int n = horizon.n_years;
  DiscountSchedule ds;
  for (int y = 1; y < n; ++y)
    ds.d_y.push_back(std::pow(g, -y));
  ds.d_y.push_back(std::pow(g, -n) + std::pow(g, -(n + 1)) / (1.0 - 1.0 / g));
  return ds;
}

ExpansionOptions ExpansionOptions::from_config(const Config &cfg) {
  ExpansionOptions o;
  auto basis = cfg.text("expansion.emission_basis", "output");
  if (basis == "output")
    o.emission_basis = EmissionBasis::output;
  else if (basis == "heat_input")
    o.emission_basis = EmissionBasis::heat_input;
  else
    throw InputError("config.toml", 0,
                     "expansion.emission_basis must be \"output\" or \"heat_input\", got \"" + basis + "\"");
  return o;
}

std::vector<std::pair<std::string, double>> CostBreakdown::items() const {
  return {{"pv_expansion", pv_expansion}, {"fixed_om", fixed_om}, {"var_om", var_om},
          {"fuel", fuel},                 {"emission", emission}, {"wheeling", wheeling},
          {"lost_load", lost_load},       {"total", total}};
}

ExpansionSolution zero_solution(const PlanningCase &pc, const BlockSchedule &sched) {
  const int ny = pc.horizon.n_years;
  auto blocks = [&] {
    std::vector<std::vector<double>> v;
    for (int y = 1; y <= ny; ++y)
      v.emplace_back(sched.blocks_in(y), 0.0);
    return v;
  };
  ExpansionSolution sol;
  sol.pv_built.assign(pc.regions.size(), std::vector<double>(ny, 0.0));
  sol.dispatch.assign(pc.units.size(), blocks());
  sol.unserved.assign(pc.regions.size(), blocks());
  sol.flows.assign(pc.interfaces.size(), blocks());
  return sol;
}

double units_in_service(const PlanningCase &pc, const ExpansionSolution &sol, std::size_t unit,
                        int year) {
  const auto &u = pc.units.at(unit);
  double n = u.existing_count;
  if (u.is_pv())
    for (int y = 1; y <= year; ++y)
      n += sol.pv_built.at(u.region_index).at(y - 1);
  return n;
}

double pv_capacity_mw(const PlanningCase &pc, const ExpansionSolution &sol, std::size_t region,
                      int year) {
  auto g = pc.pv_unit(region);
  if (!g)
    return 0.0;
  return pc.units[*g].p_max * units_in_service(pc, sol, *g, year);
}

double derating_factor(const PlanningCase &pc, std::size_t unit, std::size_t block) {
  const auto &u = pc.units.at(unit);
  double mf = pc.regions.at(u.region_index).maintenance_factor_at(block);
  return std::clamp(1.0 - u.maintenance_outage_rate * mf - u.forced_outage_rate, 0.0, 1.0);
}

CostBreakdown evaluate_cost_breakdown(const PlanningCase &pc, const BlockSchedule &sched,
                                      const ExpansionSolution &sol, const ExpansionOptions &opts) {
  check_shape(pc, sched, sol);
  const auto ds = build_discount_schedule(pc.horizon);
  const double T = hours(pc);
  CostBreakdown c;
  for (int y = 1; y <= pc.horizon.n_years; ++y) {
    const double D = ds.at(y);
    const auto yi = static_cast<std::size_t>(y - 1);
    for (std::size_t r = 0; r < pc.regions.size(); ++r) {
      const auto &reg = pc.regions[r];
      c.pv_expansion += D * (reg.pv_build_cost[yi] + reg.land_cost[yi]) * sol.pv_built[r][yi];
      for (std::size_t s = 0; s < sched.blocks_in(y); ++s)
        c.lost_load += D * T * sched.block(y, s).duration_fraction * reg.voll * sol.unserved[r][yi][s];
    }
    for (std::size_t g = 0; g < pc.units.size(); ++g) {
      const auto &u = pc.units[g];
      const double n = units_in_service(pc, sol, g, y);
      c.fixed_om += D * u.fixed_om * u.p_max * n;
      double energy = 0.0; // MWh-equivalent per hour of year, duration weighted
      for (std::size_t s = 0; s < sched.blocks_in(y); ++s)
        energy += sched.block(y, s).duration_fraction * sol.dispatch[g][yi][s] * n;
      c.fuel += D * T * u.heat_rate * u.fuel_price[yi] * energy;
      c.var_om += D * T * u.var_om * energy;
      c.emission += D * u.emission_price[yi] * emission_factor(u, opts) * T * energy;
    }
    for (std::size_t l = 0; l < pc.interfaces.size(); ++l)
      for (std::size_t s = 0; s < sched.blocks_in(y); ++s)
        c.wheeling += D * T * sched.block(y, s).duration_fraction * pc.interfaces[l].wheeling_price *
                      std::abs(sol.flows[l][yi][s]);
  }
  c.total = c.sum_of_parts();
  return c;
}

LinearProgramSpec build_expansion_lp(const PlanningCase &pc, const BlockSchedule &sched,
                                     const ExpansionOptions &opts) {
  if (sched.n_years() != pc.horizon.n_years)
    throw InputError("block schedule does not match the case horizon");
  const auto ds = build_discount_schedule(pc.horizon);
  const double T = hours(pc);
  const int ny = pc.horizon.n_years;
  LinearProgramSpec spec;
  spec.name = "pv_expansion";

  // Build decisions first so their indices are stable and small.
  for (std::size_t r = 0; r < pc.regions.size(); ++r) {
    const auto &reg = pc.regions[r];
    auto pv = pc.pv_unit(r);
    for (int y = 1; y <= ny; ++y) {
      const auto yi = static_cast<std::size_t>(y - 1);
      double cost = ds.at(y) * (reg.pv_build_cost[yi] + reg.land_cost[yi]);
      if (pv) {
        const auto &u = pc.units[*pv];
        // Fixed O&M of a unit built in year y accrues in y and every later year.
        for (int later = y; later <= ny; ++later)
          cost += ds.at(later) * u.fixed_om * u.p_max;
      }
      double limit = pv ? reg.pv_build_limit[yi] : 0.0;
      spec.add_variable(VarKey{VarRole::pv_built, r, 0, y, 0}, "pv_built[" + reg.id + ",y" + std::to_string(y) + "]",
                        0.0, limit, cost, true);
    }
  }

  for (int y = 1; y <= ny; ++y) {
    const double D = ds.at(y);
    for (std::size_t s = 0; s < sched.blocks_in(y); ++s) {
      const double w = D * T * sched.block(y, s).duration_fraction;
      for (std::size_t g = 0; g < pc.units.size(); ++g) {
        const auto &u = pc.units[g];
        double hi = u.is_pv() ? infinity : derating_factor(pc, g, s) * u.p_max * u.existing_count;
        spec.add_variable(VarKey{VarRole::dispatch, u.region_index, g, y, s},
                          "dispatch[" + block_tag(u.id, y, s) + "]", 0.0, hi,
                          w * running_cost_per_mwh(u, y, opts));
      }
      for (std::size_t r = 0; r < pc.regions.size(); ++r) {
        const auto &reg = pc.regions[r];
        spec.add_variable(VarKey{VarRole::unserved, r, 0, y, s}, "unserved[" + block_tag(reg.id, y, s) + "]",
                          0.0, sched.block(y, s).load_mw[r], w * reg.voll);
      }
      for (std::size_t l = 0; l < pc.interfaces.size(); ++l) {
        const auto &itf = pc.interfaces[l];
        spec.add_variable(VarKey{VarRole::flow_forward, itf.from_index, l, y, s},
                          "flow_fwd[" + block_tag(itf.id, y, s) + "]", 0.0, itf.capacity,
                          w * itf.wheeling_price);
        spec.add_variable(VarKey{VarRole::flow_reverse, itf.from_index, l, y, s},
                          "flow_rev[" + block_tag(itf.id, y, s) + "]", 0.0, itf.capacity,
                          w * itf.wheeling_price);
      }
    }
  }

  // Existing capacity carries fixed O&M regardless of decisions.
  for (int y = 1; y <= ny; ++y)
    for (const auto &u : pc.units)
      spec.add_objective_offset(ds.at(y) * u.fixed_om * u.p_max * u.existing_count);

  auto built = [&](std::size_t r, int y) { return spec.at(VarKey{VarRole::pv_built, r, 0, y, 0}); };

  for (int y = 1; y <= ny; ++y) {
    const auto yi = static_cast<std::size_t>(y - 1);
    for (std::size_t s = 0; s < sched.blocks_in(y); ++s) {
      const auto &blk = sched.block(y, s);
      for (std::size_t r = 0; r < pc.regions.size(); ++r) {
        const auto &reg = pc.regions[r];
        const double load = blk.load_mw[r];
        const std::string tag = block_tag(reg.id, y, s);

        LpRow bal{"balance[" + tag + "]", "balance", {}, RowSense::eq, load};
        for (std::size_t g = 0; g < pc.units.size(); ++g)
          if (pc.units[g].region_index == r)
            bal.terms.emplace_back(spec.at(VarKey{VarRole::dispatch, r, g, y, s}), 1.0);
        bal.terms.emplace_back(spec.at(VarKey{VarRole::unserved, r, 0, y, s}), 1.0);
        for (std::size_t l = 0; l < pc.interfaces.size(); ++l) {
          const auto &itf = pc.interfaces[l];
          double sign = itf.to_index == r ? 1.0 : itf.from_index == r ? -1.0 : 0.0;
          if (sign == 0.0)
            continue;
          bal.terms.emplace_back(spec.at(VarKey{VarRole::flow_forward, itf.from_index, l, y, s}), sign);
          bal.terms.emplace_back(spec.at(VarKey{VarRole::flow_reverse, itf.from_index, l, y, s}), -sign);
        }
        spec.add_row(std::move(bal));

        // Served load plus reserve must fit in available capacity.
        double firm = 0.0;
        for (std::size_t g = 0; g < pc.units.size(); ++g) {
          const auto &u = pc.units[g];
          if (u.region_index == r && !u.is_pv())
            firm += derating_factor(pc, g, s) * u.p_max * u.existing_count;
        }
        LpRow adq{"adequacy[" + tag + "]", "adequacy", {}, RowSense::ge,
                  load + reg.reserve_margin[yi] - firm};
        adq.terms.emplace_back(spec.at(VarKey{VarRole::unserved, r, 0, y, s}), 1.0);
        if (auto pv = pc.pv_unit(r)) {
          const auto &u = pc.units[*pv];
          const double per_unit = blk.pv_cf[r] * u.p_max;
          adq.rhs -= per_unit * u.existing_count;
          for (int yb = 1; yb <= y; ++yb)
            adq.terms.emplace_back(built(r, yb), per_unit);

          LpRow out{"pv_output[" + tag + "]", "pv_output", {}, RowSense::le,
                    per_unit * u.existing_count};
          out.terms.emplace_back(spec.at(VarKey{VarRole::dispatch, r, *pv, y, s}), 1.0);
          for (int yb = 1; yb <= y; ++yb)
            out.terms.emplace_back(built(r, yb), -per_unit);
          spec.add_row(std::move(out));
        }
        spec.add_row(std::move(adq));
      }
    }

    for (std::size_t r = 0; r < pc.regions.size(); ++r) {
      const auto &reg = pc.regions[r];
      const double rps = reg.rps[yi];
      if (rps <= 0.0)
        continue;
      double conventional = 0.0;
      for (const auto &u : pc.units)
        if (u.region_index == r && !u.is_pv())
          conventional += u.p_max * u.existing_count;
      // pv >= rps * (conventional + pv), with pv = P_max (x0 + built so far)
      LpRow row{"rps[" + reg.id + ",y" + std::to_string(y) + "]", "rps", {}, RowSense::ge,
                rps * conventional};
      if (auto pv = pc.pv_unit(r)) {
        const auto &u = pc.units[*pv];
        const double c = (1.0 - rps) * u.p_max;
        row.rhs -= c * u.existing_count;
        for (int yb = 1; yb <= y; ++yb)
          row.terms.emplace_back(built(r, yb), c);
      }
      spec.add_row(std::move(row));
    }
  }

  for (std::size_t r = 0; r < pc.regions.size(); ++r) {
    auto pv = pc.pv_unit(r);
    if (!pv)
      continue;
    const auto &u = pc.units[*pv];
    const auto &reg = pc.regions[r];
    // Cumulative build only grows, so the final year is the binding one.
    LpRow row{"compatibility[" + reg.id + "]", "compatibility", {}, RowSense::le,
              reg.validated_dispatch_total - u.p_max * u.existing_count};
    for (int y = 1; y <= ny; ++y)
      row.terms.emplace_back(built(r, y), u.p_max);
    spec.add_row(std::move(row));
  }
  return spec;
}

ExpansionSolution solution_from_lp(const PlanningCase &pc, const BlockSchedule &sched,
                                   const LinearProgramSpec &spec, std::span<const double> values) {
  if (values.size() != spec.num_variables())
    throw InputError("solution vector length does not match the model");
  auto sol = zero_solution(pc, sched);
  const int ny = pc.horizon.n_years;
  for (std::size_t r = 0; r < pc.regions.size(); ++r)
    for (int y = 1; y <= ny; ++y)
      sol.pv_built[r][y - 1] = std::round(values[spec.at(VarKey{VarRole::pv_built, r, 0, y, 0})]);
  for (int y = 1; y <= ny; ++y)
    for (std::size_t s = 0; s < sched.blocks_in(y); ++s) {
      for (std::size_t g = 0; g < pc.units.size(); ++g) {
        double total = values[spec.at(VarKey{VarRole::dispatch, pc.units[g].region_index, g, y, s})];
        double n = units_in_service(pc, sol, g, y);
        sol.dispatch[g][y - 1][s] = n > 0.0 ? total / n : 0.0;
      }
      for (std::size_t r = 0; r < pc.regions.size(); ++r)
        sol.unserved[r][y - 1][s] = values[spec.at(VarKey{VarRole::unserved, r, 0, y, s})];
      for (std::size_t l = 0; l < pc.interfaces.size(); ++l) {
        auto from = pc.interfaces[l].from_index;
        sol.flows[l][y - 1][s] = values[spec.at(VarKey{VarRole::flow_forward, from, l, y, s})] -
                                 values[spec.at(VarKey{VarRole::flow_reverse, from, l, y, s})];
      }
    }
  return sol;
}

std::vector<double> lp_vector_from_solution(const PlanningCase &pc, const BlockSchedule &sched,
                                            const LinearProgramSpec &spec,
                                            const ExpansionSolution &sol) {
  check_shape(pc, sched, sol);
  std::vector<double> x(spec.num_variables(), 0.0);
  const int ny = pc.horizon.n_years;
  for (std::size_t r = 0; r < pc.regions.size(); ++r)
    for (int y = 1; y <= ny; ++y)
      x[spec.at(VarKey{VarRole::pv_built, r, 0, y, 0})] = sol.pv_built[r][y - 1];
  for (int y = 1; y <= ny; ++y)
    for (std::size_t s = 0; s < sched.blocks_in(y); ++s) {
      for (std::size_t g = 0; g < pc.units.size(); ++g)
        x[spec.at(VarKey{VarRole::dispatch, pc.units[g].region_index, g, y, s})] =
            sol.dispatch[g][y - 1][s] * units_in_service(pc, sol, g, y);
      for (std::size_t r = 0; r < pc.regions.size(); ++r)
        x[spec.at(VarKey{VarRole::unserved, r, 0, y, s})] = sol.unserved[r][y - 1][s];
      for (std::size_t l = 0; l < pc.interfaces.size(); ++l) {
        auto from = pc.interfaces[l].from_index;
        double f = sol.flows[l][y - 1][s];
        x[spec.at(VarKey{VarRole::flow_forward, from, l, y, s})] = std::max(f, 0.0);
        x[spec.at(VarKey{VarRole::flow_reverse, from, l, y, s})] = std::max(-f, 0.0);
      }
    }
  return x;
}

PlanResult plan_expansion(const PlanningCase &pc, const BlockSchedule &sched,
                          const SolverOptions &solver, const ExpansionOptions &opts) {
  PlanResult res;
  res.spec = build_expansion_lp(pc, sched, opts);
  res.milp = solve_milp(res.spec, solver);
  if (res.milp.has_incumbent) {
    res.solution = solution_from_lp(pc, sched, res.spec, res.milp.incumbent.values);
    res.solution.cost = evaluate_cost_breakdown(pc, sched, res.solution, opts);
  } else {
    res.solution = zero_solution(pc, sched);
  }
  res.solution.status = std::string(to_string(res.milp.status));
  res.solution.objective = res.milp.has_incumbent ? res.milp.incumbent.objective : 0.0;
  res.solution.bound = res.milp.bound;
  res.solution.gap = res.milp.gap;
  res.solution.nodes = res.milp.nodes_explored;
  return res;
}

bool AuditReport::pass() const { return max_residual() <= tol; }

double AuditReport::max_residual() const {
  double m = 0.0;
  for (const auto &f : families)
    m = std::max(m, f.max_residual);
  return m;
}

const AuditFamily &AuditReport::family(const std::string &name) const {
  for (const auto &f : families)
    if (f.name == name)
      return f;
  throw std::out_of_range("no audit family " + name);
}

AuditReport audit_solution(const PlanningCase &pc, const BlockSchedule &sched,
                           const ExpansionSolution &sol, double tol) {
  check_shape(pc, sched, sol);
  AuditReport rep;
  rep.tol = tol;
  for (const char *name : {"balance", "build_limit", "integrality", "capacity", "unserved",
                           "adequacy", "interface", "rps", "pv_output", "compatibility"})
    rep.families.push_back({name, 0.0, ""});
  auto note = [&](const char *family, double residual, const std::string &where) {
    for (auto &f : rep.families)
      if (f.name == family && residual > f.max_residual) {
        f.max_residual = residual;
        f.worst = where;
      }
  };

  const int ny = pc.horizon.n_years;
  for (std::size_t r = 0; r < pc.regions.size(); ++r) {
    const auto &reg = pc.regions[r];
    auto pv = pc.pv_unit(r);
    for (int y = 1; y <= ny; ++y) {
      const auto yi = static_cast<std::size_t>(y - 1);
      const std::string where = reg.id + ",y" + std::to_string(y);
      const double b = sol.pv_built[r][yi];
      const double limit = pv ? reg.pv_build_limit[yi] : 0.0;
      note("build_limit", std::max({0.0, b - limit, -b}), where);
      note("integrality", std::abs(b - std::round(b)), where);
      if (reg.rps[yi] > 0.0) {
        double conventional = 0.0;
        for (const auto &u : pc.units)
          if (u.region_index == r && !u.is_pv())
            conventional += u.p_max * u.existing_count;
        double pv_cap = pv_capacity_mw(pc, sol, r, y);
        note("rps", reg.rps[yi] * (conventional + pv_cap) - pv_cap, where);
      }
    }
    note("compatibility", pv_capacity_mw(pc, sol, r, ny) - reg.validated_dispatch_total, reg.id);
  }

  for (int y = 1; y <= ny; ++y) {
    const auto yi = static_cast<std::size_t>(y - 1);
    for (std::size_t s = 0; s < sched.blocks_in(y); ++s) {
      const auto &blk = sched.block(y, s);
      std::vector<double> supply(pc.regions.size(), 0.0), firm(pc.regions.size(), 0.0);
      for (std::size_t g = 0; g < pc.units.size(); ++g) {
        const auto &u = pc.units[g];
        const std::string where = block_tag(u.id, y, s);
        const double n = units_in_service(pc, sol, g, y);
        const double p = sol.dispatch[g][yi][s];
        supply[u.region_index] += p * n;
        note("capacity", -p * n, where);
        if (u.is_pv())
          note("pv_output", p * n - blk.pv_cf[u.region_index] * u.p_max * n, where);
        else {
          double cap = derating_factor(pc, g, s) * u.p_max * u.existing_count;
          note("capacity", p * n - cap, where);
          firm[u.region_index] += cap;
        }
      }
      for (std::size_t l = 0; l < pc.interfaces.size(); ++l) {
        const auto &itf = pc.interfaces[l];
        const double f = sol.flows[l][yi][s];
        note("interface", std::abs(f) - itf.capacity, block_tag(itf.id, y, s));
        supply[itf.to_index] += f;
        supply[itf.from_index] -= f;
      }
      for (std::size_t r = 0; r < pc.regions.size(); ++r) {
        const auto &reg = pc.regions[r];
        const std::string where = block_tag(reg.id, y, s);
        const double u = sol.unserved[r][yi][s];
        const double load = blk.load_mw[r];
        note("unserved", std::max(-u, u - load), where);
        note("balance", std::abs(supply[r] + u - load), where);
        double pv_avail = blk.pv_cf[r] * pv_capacity_mw(pc, sol, r, y);
        note("adequacy", load + reg.reserve_margin[yi] - (firm[r] + pv_avail + u), where);
      }
    }
  }
  return rep;
}

void write_solution_json(const PlanningCase &pc, const ExpansionSolution &sol,
                         const std::string &bundle_hash, const std::filesystem::path &path) {
  Json j;
  j["bundle_hash"] = bundle_hash;
  j["status"] = sol.status;
  j["objective"] = sol.objective;
  j["bound"] = sol.bound;
  j["gap"] = sol.gap;
  j["nodes"] = sol.nodes;
  Json cost = Json::object();
  for (const auto &[k, v] : sol.cost.items())
    cost[k] = v;
  j["cost_breakdown"] = cost;
  Json built = Json::object(), unserved = Json::object(), dispatch = Json::object(),
       flows = Json::object();
  for (std::size_t r = 0; r < pc.regions.size(); ++r) {
    built[pc.regions[r].id] = sol.pv_built[r];
    unserved[pc.regions[r].id] = sol.unserved[r];
  }
  for (std::size_t g = 0; g < pc.units.size(); ++g)
    dispatch[pc.units[g].id] = sol.dispatch[g];
  for (std::size_t l = 0; l < pc.interfaces.size(); ++l)
    flows[pc.interfaces[l].id] = sol.flows[l];
  j["pv_built"] = built;
  j["dispatch_mw_per_unit"] = dispatch;
  j["unserved_mw"] = unserved;
  j["flows_mw"] = flows;
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

std::pair<ExpansionSolution, std::string> read_solution_json(const PlanningCase &pc,
                                                             const BlockSchedule &sched,
                                                             const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError(path.string(), 0, "cannot open solution file");
  Json j;
  try {
    j = Json::parse(in);
    ExpansionSolution sol;
    sol.status = j.at("status").get<std::string>();
    sol.objective = j.at("objective").get<double>();
    sol.bound = j.at("bound").get<double>();
    sol.gap = j.at("gap").get<double>();
    sol.nodes = j.at("nodes").get<long>();
    const auto &cost = j.at("cost_breakdown");
    sol.cost.pv_expansion = cost.at("pv_expansion");
    sol.cost.fixed_om = cost.at("fixed_om");
    sol.cost.var_om = cost.at("var_om");
    sol.cost.fuel = cost.at("fuel");
    sol.cost.emission = cost.at("emission");
    sol.cost.wheeling = cost.at("wheeling");
    sol.cost.lost_load = cost.at("lost_load");
    sol.cost.total = cost.at("total");
    for (const auto &reg : pc.regions) {
      sol.pv_built.push_back(j.at("pv_built").at(reg.id).get<std::vector<double>>());
      sol.unserved.push_back(
          j.at("unserved_mw").at(reg.id).get<std::vector<std::vector<double>>>());
    }
    for (const auto &u : pc.units)
      sol.dispatch.push_back(
          j.at("dispatch_mw_per_unit").at(u.id).get<std::vector<std::vector<double>>>());
    for (const auto &itf : pc.interfaces)
      sol.flows.push_back(j.at("flows_mw").at(itf.id).get<std::vector<std::vector<double>>>());
    check_shape(pc, sched, sol);
    return {std::move(sol), j.at("bundle_hash").get<std::string>()};
  } catch (const nlohmann::json::exception &e) {
    throw InputError(path.string(), 0, std::string("malformed solution: ") + e.what());
  }
}

} // namespace pvgrid
