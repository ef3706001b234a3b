#include "pvgrid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <json.hpp>

#include "pvgrid/table.hpp"

namespace pvgrid {

using Json = nlohmann::ordered_json;

namespace {

constexpr double mw_tol = 1e-9;

int displacement_priority(UnitKind kind) {
  switch (kind) {
  case UnitKind::retiring: return 0;
  case UnitKind::oil: return 1;
  case UnitKind::coal: return 2;
  case UnitKind::gas: return 3;
  case UnitKind::nuclear: return 4;
  case UnitKind::hydro: return 5;
  default: return -1;
  }
}

double displaceable_mw(const std::vector<MachineGroup> &fleet) {
  double total = 0.0;
  for (std::size_t i : rank_displacement_candidates(fleet))
    total += fleet[i].dispatch_mw;
  return total;
}

// Angles solving L * theta = injection, zero mean on each connected group.
std::vector<double> solve_angles(const DynamicCase &dc, const std::vector<double> &injection) {
  const auto n = static_cast<Eigen::Index>(dc.regions.size());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto &t : dc.ties) {
    auto a = static_cast<Eigen::Index>(t.from), b = static_cast<Eigen::Index>(t.to);
    lap(a, a) += t.stiffness;
    lap(b, b) += t.stiffness;
    lap(a, b) -= t.stiffness;
    lap(b, a) -= t.stiffness;
  }
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i)
    p(i) = injection[static_cast<std::size_t>(i)];
  Eigen::VectorXd theta = lap.completeOrthogonalDecomposition().solve(p);
  double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
  if ((lap * theta - p).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ScenarioError("net exports cannot be carried: some exporting region has no tie path "
                        "to an importing region");
  return {theta.data(), theta.data() + n};
}

} // namespace

double DynamicRegion::conventional_mw() const {
  double s = 0.0;
  for (const auto &m : machines)
    s += m.dispatch_mw;
  return s;
}

double DynamicRegion::rating_mva() const {
  double s = 0.0;
  for (const auto &m : machines)
    s += m.rating_mva();
  return s;
}

double DynamicRegion::stored_energy() const {
  double s = 0.0;
  for (const auto &m : machines)
    s += m.inertia_h * m.rating_mva();
  return s;
}

double DynamicCase::total_generation() const {
  double s = 0.0;
  for (const auto &r : regions)
    s += r.conventional_mw() + r.pv_mw;
  return s;
}

double DynamicCase::total_pv() const {
  double s = 0.0;
  for (const auto &r : regions)
    s += r.pv_mw;
  return s;
}

double DynamicCase::pv_share() const {
  double g = total_generation();
  return g > 0.0 ? total_pv() / g : 0.0;
}

double DynamicCase::stored_energy() const {
  double s = 0.0;
  for (const auto &r : regions)
    s += r.stored_energy();
  return s;
}

double DynamicCase::tie_flow(std::size_t tie) const {
  const auto &t = ties.at(tie);
  return t.stiffness * (regions[t.from].initial_angle - regions[t.to].initial_angle);
}

double DynamicCase::balance_residual(std::size_t region) const {
  const auto &r = regions.at(region);
  double export_mw = 0.0;
  for (std::size_t l = 0; l < ties.size(); ++l) {
    if (ties[l].from == region)
      export_mw += tie_flow(l);
    if (ties[l].to == region)
      export_mw -= tie_flow(l);
  }
  return r.conventional_mw() + r.pv_mw - r.load_mw - export_mw;
}

double DynamicCase::max_balance_residual() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < regions.size(); ++r)
    worst = std::max(worst, std::abs(balance_residual(r)));
  return worst;
}

std::vector<std::size_t> rank_displacement_candidates(const std::vector<MachineGroup> &fleet) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < fleet.size(); ++i)
    if (displacement_priority(fleet[i].kind) >= 0)
      order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto &x = fleet[a], &y = fleet[b];
    int px = displacement_priority(x.kind), py = displacement_priority(y.kind);
    if (px != py)
      return px < py;
    if (x.dispatch_mw != y.dispatch_mw)
      return x.dispatch_mw > y.dispatch_mw;
    return x.id < y.id;
  });
  return order;
}

double DisplacementPlan::total_mw() const {
  double s = 0.0;
  for (const auto &st : steps)
    s += st.mw_displaced;
  return s;
}

DisplacementPlan build_displacement_plan(const std::vector<MachineGroup> &fleet, double target_mw) {
  if (target_mw < 0.0)
    throw ScenarioError(fmt::format("negative displacement target {} MW", target_mw));
  double available = displaceable_mw(fleet);
  if (target_mw > available + mw_tol)
    throw ScenarioError(fmt::format("displacement target {} MW exceeds displaceable dispatch {} MW",
                                    format_number(target_mw), format_number(available)),
                        target_mw - available);
  DisplacementPlan plan;
  double remaining = std::min(target_mw, available);
  for (std::size_t i : rank_displacement_candidates(fleet)) {
    if (remaining <= mw_tol)
      break;
    const auto &m = fleet[i];
    const double unit_mw = m.per_unit_dispatch();
    if (unit_mw <= 0.0)
      continue;
    DisplacementStep step{i, m.id, 0.0, 0, 0.0};
    while (step.whole_units_removed < m.online_count && remaining >= unit_mw - mw_tol) {
      ++step.whole_units_removed;
      step.mw_displaced += unit_mw;
      remaining -= unit_mw;
    }
    if (step.whole_units_removed < m.online_count && remaining > mw_tol) {
      step.partial_mw = remaining;
      step.mw_displaced += remaining;
      remaining = 0.0;
    }
    remaining = std::max(remaining, 0.0);
    if (step.mw_displaced > 0.0)
      plan.steps.push_back(step);
  }
  return plan;
}

void apply_displacement(std::vector<MachineGroup> &fleet, const DisplacementPlan &plan) {
  for (const auto &st : plan.steps) {
    auto &m = fleet.at(st.machine);
    m.online_count -= st.whole_units_removed;
    m.dispatch_mw = m.online_count == 0 ? 0.0 : std::max(0.0, m.dispatch_mw - st.mw_displaced);
  }
}

DynamicCase base_dynamic_case(const PlanningCase &pc) {
  DynamicCase dc;
  for (const auto &r : pc.regions)
    dc.regions.push_back({r.id, {}, 0.0, 0.0, 0.0});
  for (const auto &u : pc.units) {
    auto &reg = dc.regions[u.region_index];
    if (u.kind == UnitKind::wind)
      continue; // netted against load
    reg.load_mw += u.validated_dispatch;
    if (u.is_pv()) {
      reg.pv_mw += u.validated_dispatch;
      continue;
    }
    if (u.existing_count <= 0)
      continue;
    reg.machines.push_back({u.id, u.kind, u.p_max, u.existing_count, u.validated_dispatch,
                            u.inertia_h, u.governor_droop, u.governor_tg});
  }
  for (const auto &i : pc.interfaces)
    dc.ties.push_back({i.id, i.from_index, i.to_index, i.sync_stiffness, i.capacity});
  return dc;
}

const TimeBlock &select_block(const PlanningCase &pc, const BlockSchedule &sched,
                              const ExpansionSolution &sol, const std::string &selector) {
  if (selector == "peak_solar") {
    const TimeBlock *best = nullptr;
    double best_mw = -1.0;
    for (int y = 1; y <= sched.n_years(); ++y)
      for (std::size_t s = 0; s < sched.blocks_in(y); ++s) {
        auto avail = pv_available_mw(pc, sol, sched.block(y, s));
        double mw = std::accumulate(avail.begin(), avail.end(), 0.0);
        if (mw > best_mw) {
          best_mw = mw;
          best = &sched.block(y, s);
        }
      }
    if (!best)
      throw InputError("block schedule is empty");
    return *best;
  }
  auto colon = selector.find(':');
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      int y = std::stoi(selector.substr(0, colon), &used);
      std::size_t s = std::stoul(selector.substr(colon + 1));
      if (used == colon && y >= 1 && y <= sched.n_years() && s < sched.blocks_in(y))
        return sched.block(y, s);
    } catch (const std::exception &) {
    }
  }
  throw InputError(fmt::format("block selector '{}' is neither peak_solar nor a year:block pair "
                               "inside the schedule",
                               selector));
}

std::vector<double> pv_available_mw(const PlanningCase &pc, const ExpansionSolution &sol,
                                    const TimeBlock &block) {
  std::vector<double> out(pc.regions.size(), 0.0);
  for (std::size_t r = 0; r < pc.regions.size(); ++r)
    out[r] = pv_capacity_mw(pc, sol, r, block.year) * block.pv_cf.at(r);
  return out;
}

DynamicCase build_dynamic_case(const PlanningCase &pc, const ExpansionSolution &sol,
                               const TimeBlock &block, double level) {
  if (!(level >= 0.0 && level < 1.0))
    throw InputError(fmt::format("penetration level {} is outside [0, 1)", level));
  DynamicCase dc = base_dynamic_case(pc);
  dc.level = level;
  dc.year = block.year;
  dc.block = block.block;
  if (level == 0.0)
    return dc;

  const std::size_t n = dc.regions.size();
  const double target = level * dc.total_generation();
  const double base_pv = dc.total_pv();
  if (target < base_pv - mw_tol)
    throw ScenarioError(fmt::format("level {} asks for {} MW of PV, below the {} MW already in "
                                    "the base fleet",
                                    format_number(level), format_number(target),
                                    format_number(base_pv)));

  auto avail = pv_available_mw(pc, sol, block);
  std::vector<double> spare(n);
  for (std::size_t r = 0; r < n; ++r)
    spare[r] = std::max(0.0, avail[r] - dc.regions[r].pv_mw);
  const double need = target - base_pv;
  const double spare_total = std::accumulate(spare.begin(), spare.end(), 0.0);
  if (need > spare_total + 1e-6)
    throw ScenarioError(fmt::format("level {} needs {} MW of new PV output at block {}:{}, only {} "
                                    "MW available; shortfall {} MW",
                                    format_number(level), format_number(need), block.year,
                                    block.block, format_number(spare_total),
                                    format_number(need - spare_total)),
                        need - spare_total);

  std::vector<double> added(n, 0.0), displaced(n, 0.0), room(n, 0.0);
  double surplus = 0.0, room_total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    added[r] = spare_total > 0.0 ? need * spare[r] / spare_total : 0.0;
    double local = displaceable_mw(dc.regions[r].machines);
    displaced[r] = std::min(added[r], local);
    surplus += added[r] - displaced[r];
    room[r] = local - displaced[r];
    room_total += room[r];
  }
  if (surplus > room_total + 1e-6)
    throw ScenarioError(fmt::format("only {} MW of conventional output left to displace, {} MW "
                                    "of PV surplus",
                                    format_number(room_total), format_number(surplus)));
  if (surplus > 0.0)
    for (std::size_t r = 0; r < n; ++r)
      displaced[r] = std::min(displaced[r] + surplus * room[r] / room_total,
                              displaceable_mw(dc.regions[r].machines));

  std::vector<double> injection(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto &reg = dc.regions[r];
    apply_displacement(reg.machines, build_displacement_plan(reg.machines, displaced[r]));
    reg.pv_mw += added[r];
    if (reg.rating_mva() <= 0.0)
      throw ScenarioError(fmt::format("level {} leaves region '{}' with no synchronous machine "
                                      "online",
                                      format_number(level), reg.id));
    injection[r] = reg.conventional_mw() + reg.pv_mw - reg.load_mw;
  }
  auto theta = solve_angles(dc, injection);
  for (std::size_t r = 0; r < n; ++r)
    dc.regions[r].initial_angle = theta[r];
  for (std::size_t l = 0; l < dc.ties.size(); ++l)
    if (std::abs(dc.tie_flow(l)) > dc.ties[l].capacity + 1e-6)
      throw ScenarioError(fmt::format("level {} needs {} MW on tie '{}', limit {} MW",
                                      format_number(level), format_number(std::abs(dc.tie_flow(l))),
                                      dc.ties[l].id, format_number(dc.ties[l].capacity)));
  return dc;
}

void write_dynamic_case_json(const DynamicCase &dc, const std::filesystem::path &path) {
  Json j;
  j["level"] = dc.level;
  j["year"] = dc.year;
  j["block"] = dc.block;
  j["f0"] = dc.f0;
  j["pv_share"] = dc.pv_share();
  j["stored_energy_mws"] = dc.stored_energy();
  j["regions"] = Json::array();
  for (const auto &r : dc.regions) {
    Json jr;
    jr["id"] = r.id;
    jr["load_mw"] = r.load_mw;
    jr["pv_mw"] = r.pv_mw;
    jr["initial_angle"] = r.initial_angle;
    jr["machines"] = Json::array();
    for (const auto &m : r.machines)
      jr["machines"].push_back({{"id", m.id},
                                {"kind", std::string(to_string(m.kind))},
                                {"p_max", m.p_max},
                                {"online_count", m.online_count},
                                {"dispatch_mw", m.dispatch_mw},
                                {"inertia_h", m.inertia_h},
                                {"droop", m.droop},
                                {"governor_tg", m.governor_tg}});
    j["regions"].push_back(jr);
  }
  j["ties"] = Json::array();
  for (const auto &t : dc.ties)
    j["ties"].push_back({{"id", t.id},
                         {"from", dc.regions[t.from].id},
                         {"to", dc.regions[t.to].id},
                         {"stiffness", t.stiffness},
                         {"capacity", t.capacity}});
  std::ofstream out(path);
  if (!out)
    throw InputError(path.string(), 0, "cannot write file");
  out << j.dump(2) << '\n';
}

DynamicCase read_dynamic_case_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError(path.string(), 0, "cannot open file");
  try {
    Json j = Json::parse(in);
    DynamicCase dc;
    dc.level = j.at("level").get<double>();
    dc.year = j.at("year").get<int>();
    dc.block = j.at("block").get<std::size_t>();
    dc.f0 = j.at("f0").get<double>();
    for (const auto &jr : j.at("regions")) {
      DynamicRegion r;
      r.id = jr.at("id").get<std::string>();
      r.load_mw = jr.at("load_mw").get<double>();
      r.pv_mw = jr.at("pv_mw").get<double>();
      r.initial_angle = jr.at("initial_angle").get<double>();
      for (const auto &jm : jr.at("machines")) {
        auto kind = parse_unit_kind(jm.at("kind").get<std::string>());
        if (!kind)
          throw InputError(path.string(), 0, "unknown machine kind");
        r.machines.push_back({jm.at("id").get<std::string>(), *kind, jm.at("p_max").get<double>(),
                              jm.at("online_count").get<int>(), jm.at("dispatch_mw").get<double>(),
                              jm.at("inertia_h").get<double>(), jm.at("droop").get<double>(),
                              jm.at("governor_tg").get<double>()});
      }
      dc.regions.push_back(std::move(r));
    }
    auto region_index = [&](const std::string &id) {
      for (std::size_t r = 0; r < dc.regions.size(); ++r)
        if (dc.regions[r].id == id)
          return r;
      throw InputError(path.string(), 0, fmt::format("tie references unknown region '{}'", id));
    };
    for (const auto &jt : j.at("ties"))
      dc.ties.push_back({jt.at("id").get<std::string>(),
                         region_index(jt.at("from").get<std::string>()),
                         region_index(jt.at("to").get<std::string>()),
                         jt.at("stiffness").get<double>(), jt.at("capacity").get<double>()});
    return dc;
  } catch (const nlohmann::json::exception &e) {
    throw InputError(path.string(), 0, e.what());
  }
}

} // namespace pvgrid
