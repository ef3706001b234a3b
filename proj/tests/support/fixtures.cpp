#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "pvgrid/solver.hpp"

namespace fs = std::filesystem;
using namespace pvgrid;

namespace fixtures {

fs::path source_dir() { return fs::path(PVGRID_SOURCE_DIR); }

fs::path tiny3_dir() { return source_dir() / "cases" / "tiny3"; }

fs::path scratch_dir(const std::string &name) {
  auto dir = fs::temp_directory_path() / ("pvgrid_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Region make_region(const std::string &id, int n_years) {
  Region r;
  r.id = id;
  r.name = id;
  r.pv_build_cost.assign(n_years, 0.0);
  r.land_cost.assign(n_years, 0.0);
  r.pv_build_limit.assign(n_years, 0.0);
  r.voll = 1000.0;
  r.reserve_margin.assign(n_years, 0.0);
  r.rps.assign(n_years, 0.0);
  r.maintenance_factor = {0.0};
  return r;
}

UnitGroup make_unit(const PlanningCase &pc, const std::string &id, const std::string &region,
                    UnitKind kind, double p_max, int count, double validated_dispatch) {
  UnitGroup u;
  u.id = id;
  u.region = region;
  u.region_index = *pc.find_region(region);
  u.kind = kind;
  u.p_max = p_max;
  u.existing_count = count;
  u.fuel_price.assign(pc.horizon.n_years, 0.0);
  u.emission_price.assign(pc.horizon.n_years, 0.0);
  if (kind != UnitKind::pv) {
    u.inertia_h = 4.0;
    u.governor_droop = 0.05;
  }
  u.validated_dispatch = validated_dispatch;
  return u;
}

Interface make_interface(const PlanningCase &pc, const std::string &id, const std::string &from,
                         const std::string &to, double capacity) {
  Interface l;
  l.id = id;
  l.from_region = from;
  l.to_region = to;
  l.from_index = *pc.find_region(from);
  l.to_index = *pc.find_region(to);
  l.capacity = capacity;
  l.sync_stiffness = 1000.0;
  return l;
}

PlanningCase skeleton(const std::vector<std::string> &regions, int n_years, double discount_rate,
                      int hours) {
  PlanningCase pc;
  pc.horizon = {n_years, discount_rate, hours};
  for (const auto &id : regions)
    pc.regions.push_back(make_region(id, n_years));
  return pc;
}

void sync_validated_totals(PlanningCase &pc) {
  for (auto &r : pc.regions)
    r.validated_dispatch_total = 0.0;
  for (const auto &u : pc.units)
    pc.regions[u.region_index].validated_dispatch_total += u.validated_dispatch;
}

void fill_constant_series(PlanningCase &pc, double load, double cf) {
  pc.series.clear();
  for (int y = 1; y <= pc.horizon.n_years; ++y)
    for (std::size_t r = 0; r < pc.regions.size(); ++r) {
      HourlySeries s;
      s.region = pc.regions[r].id;
      s.region_index = r;
      s.year = y;
      s.load_mw.assign(pc.horizon.hours_per_year, load);
      s.solar_cf.assign(pc.horizon.hours_per_year, cf);
      pc.series.push_back(std::move(s));
    }
}

BlockSchedule schedule_from(const std::vector<std::vector<BlockSpec>> &years) {
  BlockSchedule sched;
  for (std::size_t y = 0; y < years.size(); ++y) {
    std::vector<TimeBlock> blocks;
    for (std::size_t s = 0; s < years[y].size(); ++s)
      blocks.push_back({static_cast<int>(y + 1), s, years[y][s].duration_fraction, years[y][s].load,
                        years[y][s].cf});
    sched.years.push_back(std::move(blocks));
    sched.assignment.emplace_back();
  }
  return sched;
}

Instance random_expansion_instance(std::mt19937_64 &rng, int regions, int years, int blocks) {
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  std::vector<std::string> ids;
  for (int r = 0; r < regions; ++r)
    ids.push_back("r" + std::to_string(r));
  Instance inst;
  auto &pc = inst.pc;
  pc = skeleton(ids, years, uni(0.03, 0.12));
  const UnitKind thermal[] = {UnitKind::coal, UnitKind::gas, UnitKind::oil, UnitKind::retiring};

  for (int r = 0; r < regions; ++r) {
    auto &reg = pc.regions[r];
    reg.voll = uni(400, 3000);
    reg.maintenance_factor.clear();
    for (int s = 0; s < blocks; ++s)
      reg.maintenance_factor.push_back(uni(0, 1));
    const bool has_pv = uni(0, 1) < 0.85;
    for (int y = 0; y < years; ++y) {
      reg.pv_build_cost[y] = uni(5e6, 6e7);
      reg.land_cost[y] = uni(0, 5e6);
      reg.pv_build_limit[y] = has_pv ? pick(0, 5) : 0;
      reg.reserve_margin[y] = uni(0, 30);
      reg.rps[y] = has_pv && uni(0, 1) < 0.3 ? uni(0.02, 0.2) : 0.0;
    }
    const int n_thermal = pick(1, 2);
    for (int k = 0; k < n_thermal; ++k) {
      auto u = make_unit(pc, ids[r] + "_t" + std::to_string(k), ids[r], thermal[pick(0, 3)],
                         uni(40, 150), pick(1, 3), 0.0);
      u.fixed_om = uni(5000, 40000);
      u.var_om = uni(1, 6);
      u.heat_rate = uni(7, 12);
      u.emission_coeff = uni(0.2, 1.0);
      for (int y = 0; y < years; ++y) {
        u.fuel_price[y] = uni(2, 12);
        u.emission_price[y] = uni(0, 50);
      }
      u.forced_outage_rate = uni(0, 0.1);
      u.maintenance_outage_rate = uni(0, 0.1);
      u.validated_dispatch = 0.6 * u.p_max * u.existing_count;
      pc.units.push_back(u);
    }
    if (has_pv) {
      auto u = make_unit(pc, ids[r] + "_pv", ids[r], UnitKind::pv, uni(20, 60), pick(0, 1), 0.0);
      u.fixed_om = uni(5000, 20000);
      u.var_om = uni(0, 1);
      u.validated_dispatch = 0.3 * u.p_max * u.existing_count;
      pc.units.push_back(u);
    }
  }
  sync_validated_totals(pc);
  // Shrink some compatibility caps so they bind.
  for (auto &reg : pc.regions)
    reg.validated_dispatch_total *= uni(0.5, 1.5);
  for (int r = 0; r + 1 < regions; ++r) {
    auto l = make_interface(pc, "l" + std::to_string(r), ids[r], ids[r + 1], uni(0, 80));
    l.wheeling_price = uni(0, 5);
    pc.interfaces.push_back(l);
  }

  std::vector<std::vector<BlockSpec>> sched(years);
  for (int y = 0; y < years; ++y) {
    std::vector<double> w;
    for (int s = 0; s < blocks; ++s)
      w.push_back(uni(0.1, 1.0));
    double total = 0;
    for (double v : w)
      total += v;
    for (int s = 0; s < blocks; ++s) {
      BlockSpec b{w[s] / total, {}, {}};
      const bool dark = uni(0, 1) < 0.3;
      for (int r = 0; r < regions; ++r) {
        b.load.push_back(uni(50, 300));
        b.cf.push_back(dark ? 0.0 : uni(0.1, 0.9));
      }
      sched[y].push_back(b);
    }
  }
  inst.sched = schedule_from(sched);
  return inst;
}

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double mf_at(const Region &r, std::size_t s) {
  return r.maintenance_factor[std::min(s, r.maintenance_factor.size() - 1)];
}

// Cost of one block's dispatch given in-service PV counts per region.
double block_dispatch_cost(const PlanningCase &pc, const BlockSchedule &sched, int y,
                           std::size_t s, const std::vector<int> &pv_count, double weight,
                           const ExpansionOptions &opts) {
  const auto &blk = sched.block(y, s);
  const auto yi = static_cast<std::size_t>(y - 1);
  LinearProgramSpec lp;
  std::vector<std::size_t> gen(pc.units.size());
  for (std::size_t g = 0; g < pc.units.size(); ++g) {
    const auto &u = pc.units[g];
    double cap = u.is_pv()
                     ? blk.pv_cf[u.region_index] * u.p_max * pv_count[u.region_index]
                     : clamp01(1.0 - u.maintenance_outage_rate * mf_at(pc.regions[u.region_index], s) -
                               u.forced_outage_rate) *
                           u.p_max * u.existing_count;
    double tons = opts.emission_basis == EmissionBasis::heat_input ? u.emission_coeff * u.heat_rate
                                                                   : u.emission_coeff;
    double c = u.var_om + u.heat_rate * u.fuel_price[yi] + u.emission_price[yi] * tons;
    gen[g] = lp.add_variable("g" + std::to_string(g), 0, cap, weight * c);
  }
  std::vector<std::size_t> shed(pc.regions.size());
  for (std::size_t r = 0; r < pc.regions.size(); ++r)
    shed[r] = lp.add_variable("u" + std::to_string(r), 0, blk.load_mw[r], weight * pc.regions[r].voll);
  std::vector<std::size_t> flow(pc.interfaces.size()), mag(pc.interfaces.size());
  for (std::size_t l = 0; l < pc.interfaces.size(); ++l) {
    const auto &itf = pc.interfaces[l];
    flow[l] = lp.add_variable("f" + std::to_string(l), -itf.capacity, itf.capacity, 0.0);
    mag[l] = lp.add_variable("m" + std::to_string(l), 0, infinity, weight * itf.wheeling_price);
    lp.add_row({"abs+", "x", {{mag[l], 1.0}, {flow[l], -1.0}}, RowSense::ge, 0.0});
    lp.add_row({"abs-", "x", {{mag[l], 1.0}, {flow[l], 1.0}}, RowSense::ge, 0.0});
  }
  for (std::size_t r = 0; r < pc.regions.size(); ++r) {
    LpRow bal{"bal", "x", {{shed[r], 1.0}}, RowSense::eq, blk.load_mw[r]};
    double firm = 0.0, pv_avail = 0.0;
    for (std::size_t g = 0; g < pc.units.size(); ++g) {
      const auto &u = pc.units[g];
      if (u.region_index != r)
        continue;
      bal.terms.emplace_back(gen[g], 1.0);
      if (u.is_pv())
        pv_avail += blk.pv_cf[r] * u.p_max * pv_count[r];
      else
        firm += lp.variables()[gen[g]].hi;
    }
    for (std::size_t l = 0; l < pc.interfaces.size(); ++l) {
      if (pc.interfaces[l].to_index == r)
        bal.terms.emplace_back(flow[l], 1.0);
      if (pc.interfaces[l].from_index == r)
        bal.terms.emplace_back(flow[l], -1.0);
    }
    lp.add_row(bal);
    lp.add_row({"adq", "x", {{shed[r], 1.0}}, RowSense::ge,
                blk.load_mw[r] + pc.regions[r].reserve_margin[yi] - firm - pv_avail});
  }
  auto sol = solve_lp(lp);
  return sol.status == LpStatus::optimal ? sol.objective : infinity;
}

} // namespace

double discount_by_series(double d, int n_years, int year) {
  const long double g = 1.0L + d;
  if (year < n_years)
    return static_cast<double>(1.0L / std::pow(g, year));
  long double sum = 0.0L, term = 1.0L / std::pow(g, n_years);
  while (term > 1e-22L * sum || sum == 0.0L) {
    sum += term;
    term /= g;
  }
  return static_cast<double>(sum);
}

double enumerate_expansion_optimum(const PlanningCase &pc, const BlockSchedule &sched,
                                   const ExpansionOptions &opts) {
  const int ny = pc.horizon.n_years;
  const std::size_t nr = pc.regions.size();
  std::vector<double> D(ny);
  for (int y = 1; y <= ny; ++y)
    D[y - 1] = discount_by_series(pc.horizon.discount_rate, ny, y);
  const double T = pc.horizon.hours_per_year;

  std::vector<const UnitGroup *> pv(nr, nullptr);
  for (const auto &u : pc.units)
    if (u.is_pv())
      pv[u.region_index] = &u;

  // Odometer over build[r][y] in 0..limit.
  std::vector<int> limit(nr * ny), b(nr * ny, 0);
  for (std::size_t r = 0; r < nr; ++r)
    for (int y = 0; y < ny; ++y)
      limit[r * ny + y] = pv[r] ? static_cast<int>(pc.regions[r].pv_build_limit[y]) : 0;

  std::map<std::tuple<int, std::size_t, std::vector<int>>, double> memo;
  double best = infinity;
  while (true) {
    bool ok = true;
    double cost = 0.0;
    std::vector<std::vector<int>> count(ny, std::vector<int>(nr, 0));
    for (std::size_t r = 0; r < nr && ok; ++r) {
      int cum = pv[r] ? pv[r]->existing_count : 0;
      for (int y = 0; y < ny; ++y) {
        cum += b[r * ny + y];
        count[y][r] = cum;
        const auto &reg = pc.regions[r];
        cost += D[y] * (reg.pv_build_cost[y] + reg.land_cost[y]) * b[r * ny + y];
        double pv_cap = pv[r] ? pv[r]->p_max * cum : 0.0;
        if (reg.rps[y] > 0.0) {
          double conv = 0.0;
          for (const auto &u : pc.units)
            if (u.region_index == r && !u.is_pv())
              conv += u.p_max * u.existing_count;
          if (pv_cap < reg.rps[y] * (conv + pv_cap) - 1e-9)
            ok = false;
        }
        if (y == ny - 1 && pv_cap > reg.validated_dispatch_total + 1e-9)
          ok = false;
      }
    }
    if (ok) {
      for (int y = 0; y < ny; ++y)
        for (const auto &u : pc.units) {
          double n = u.existing_count;
          if (u.is_pv())
            n = count[y][u.region_index];
          cost += D[y] * u.fixed_om * u.p_max * n;
        }
      for (int y = 1; y <= ny && cost < infinity; ++y)
        for (std::size_t s = 0; s < sched.blocks_in(y); ++s) {
          auto key = std::make_tuple(y, s, count[y - 1]);
          auto it = memo.find(key);
          if (it == memo.end()) {
            double w = D[y - 1] * T * sched.block(y, s).duration_fraction;
            it = memo.emplace(key, block_dispatch_cost(pc, sched, y, s, count[y - 1], w, opts)).first;
          }
          cost += it->second;
        }
      best = std::min(best, cost);
    }
    std::size_t i = 0;
    while (i < b.size() && b[i] == limit[i])
      b[i++] = 0;
    if (i == b.size())
      break;
    ++b[i];
  }
  return best;
}

} // namespace fixtures

namespace fixtures {

const Tiny3Plan &tiny3_plan() {
  static const Tiny3Plan plan = [] {
    Tiny3Plan p;
    p.pc = pvgrid::load_case_bundle(tiny3_dir());
    p.sched = pvgrid::partition_blocks(p.pc, 8, 7);
    p.result = pvgrid::plan_expansion(p.pc, p.sched);
    return p;
  }();
  return plan;
}

} // namespace fixtures
