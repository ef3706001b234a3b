#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pvgrid/expansion.hpp"
#include "pvgrid/table.hpp"
#include "support/fixtures.hpp"

using namespace pvgrid;

namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// One region, one coal group of one unit, one year with D_1 = 1, one block.
fixtures::Instance single_coal_case() {
  fixtures::Instance inst;
  auto &pc = inst.pc;
  pc = fixtures::skeleton({"a"}, 1, 1.0, 8760);
  auto coal = fixtures::make_unit(pc, "coal", "a", UnitKind::coal, 200, 1, 100);
  coal.heat_rate = 10;
  coal.fuel_price = {2};
  pc.units.push_back(coal);
  fixtures::sync_validated_totals(pc);
  inst.sched = fixtures::schedule_from({{{1.0, {100.0}, {0.0}}}});
  return inst;
}

} // namespace

TEST_CASE("discount schedule worked values") {
  auto a = build_discount_schedule({3, 0.05, 8760});
  CHECK(a.at(1) == doctest::Approx(0.952381).epsilon(1e-6));
  CHECK(a.at(1) == 1.0 / 1.05);
  auto b = build_discount_schedule({1, 1.0, 8760});
  CHECK(b.at(1) == 1.0);
  auto c = build_discount_schedule({2, 0.05, 8760});
  CHECK(c.at(2) == doctest::Approx(std::pow(1.05, -2) * 21).epsilon(1e-12));
  CHECK(c.at(2) == doctest::Approx(19.047619).epsilon(1e-8));
  CHECK_THROWS_AS(build_discount_schedule({2, 0.0, 8760}), InputError);
  CHECK_THROWS_AS(build_discount_schedule({2, -0.1, 8760}), InputError);
  CHECK_THROWS_AS(build_discount_schedule({0, 0.1, 8760}), InputError);
}

TEST_CASE("property: discount schedule equals the summed geometric tail") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> rate(0.01, 0.2);
  std::uniform_int_distribution<int> years(1, 30);
  for (int trial = 0; trial < 50; ++trial) {
    double d = rate(rng);
    int n = years(rng);
    auto ds = build_discount_schedule({n, d, 8760});
    REQUIRE(ds.d_y.size() == static_cast<std::size_t>(n));
    for (int y = 1; y <= n; ++y) {
      CHECK(ds.at(y) > 0.0);
      CHECK(rel_diff(ds.at(y), fixtures::discount_by_series(d, n, y)) <= 1e-9);
    }
    if (n >= 2) {
      CHECK(ds.at(n) > ds.at(n - 1));
      CHECK(ds.at(n) > std::pow(1 + d, -n));
    }
  }
}

TEST_CASE("cost terms by hand") {
  SUBCASE("all zero") {
    auto pc = fixtures::skeleton({"a", "b"}, 2, 0.05, 8760);
    pc.units.push_back(fixtures::make_unit(pc, "g", "a", UnitKind::gas, 100, 0, 0));
    pc.units.push_back(fixtures::make_unit(pc, "pv", "b", UnitKind::pv, 100, 0, 0));
    pc.units[0].fixed_om = 1000;
    pc.interfaces.push_back(fixtures::make_interface(pc, "ab", "a", "b", 10));
    auto sched = fixtures::schedule_from({{{1.0, {0, 0}, {0, 0}}}, {{1.0, {0, 0}, {0, 0}}}});
    auto c = evaluate_cost_breakdown(pc, sched, zero_solution(pc, sched));
    for (const auto &[name, v] : c.items())
      CHECK_MESSAGE(v == 0.0, name);
  }
  SUBCASE("fuel") {
    auto inst = single_coal_case();
    auto sol = zero_solution(inst.pc, inst.sched);
    sol.dispatch[0][0][0] = 100;
    auto c = evaluate_cost_breakdown(inst.pc, inst.sched, sol);
    CHECK(c.fuel == doctest::Approx(1.0 * 8760 * 1 * 10 * 2 * 100 * 1).epsilon(1e-15));
    CHECK(c.fuel == doctest::Approx(17'520'000));
  }
  SUBCASE("emission") {
    auto inst = single_coal_case();
    inst.pc.units[0].emission_coeff = 0.1;
    inst.pc.units[0].emission_price = {30};
    auto sol = zero_solution(inst.pc, inst.sched);
    sol.dispatch[0][0][0] = 100;
    auto out = evaluate_cost_breakdown(inst.pc, inst.sched, sol);
    CHECK(out.emission == doctest::Approx(30 * 0.1 * 8760 * 1 * 100 * 1));
    CHECK(out.emission == doctest::Approx(2'628'000));
    ExpansionOptions heat;
    heat.emission_basis = EmissionBasis::heat_input;
    auto in = evaluate_cost_breakdown(inst.pc, inst.sched, sol, heat);
    CHECK(in.emission == doctest::Approx(26'280'000));
  }
  SUBCASE("expansion") {
    auto pc = fixtures::skeleton({"a"}, 1, 1.0, 8760);
    pc.units.push_back(fixtures::make_unit(pc, "pv", "a", UnitKind::pv, 10, 0, 0));
    pc.regions[0].pv_build_cost = {1.0e6};
    pc.regions[0].land_cost = {2.0e5};
    auto sched = fixtures::schedule_from({{{1.0, {0}, {0}}}});
    auto sol = zero_solution(pc, sched);
    sol.pv_built[0][0] = 3;
    auto c = evaluate_cost_breakdown(pc, sched, sol);
    CHECK(c.pv_expansion == doctest::Approx(3.6e6));
    CHECK(c.total == c.sum_of_parts());
  }
  SUBCASE("dimension mismatch") {
    auto inst = single_coal_case();
    auto sol = zero_solution(inst.pc, inst.sched);
    sol.dispatch[0][0].push_back(1);
    CHECK_THROWS_AS(evaluate_cost_breakdown(inst.pc, inst.sched, sol), InputError);
  }
}

TEST_CASE("model shape counts") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    int R = 1 + trial % 3, Y = 1 + trial % 2, S = 2 + trial % 3;
    auto inst = fixtures::random_expansion_instance(rng, R, Y, S);
    auto spec = build_expansion_lp(inst.pc, inst.sched);
    int balance = 0, built = 0;
    for (const auto &r : spec.rows())
      balance += r.family == "balance" && r.sense == RowSense::eq;
    for (const auto &v : spec.variables())
      built += v.integer;
    CHECK(balance == R * Y * S);
    CHECK(built == R * Y);
    for (const auto &[key, j] : spec.index())
      if (key.role == VarRole::pv_built) {
        CHECK(spec.variables()[j].integer);
        CHECK(spec.variables()[j].hi ==
              (inst.pc.pv_unit(key.region) ? inst.pc.regions[key.region].pv_build_limit[key.year - 1] : 0.0));
      }
    CHECK_NOTHROW(spec.check_well_formed());
  }
}

TEST_CASE("shortfall with no build option is met by unserved power at VOLL") {
  auto inst = single_coal_case();
  auto &pc = inst.pc;
  pc.regions[0].voll = 5000;
  inst.sched = fixtures::schedule_from({{{1.0, {260.0}, {0.0}}}});
  auto res = plan_expansion(pc, inst.sched);
  REQUIRE(res.milp.status == MilpStatus::optimal);
  CHECK(res.solution.dispatch[0][0][0] == doctest::Approx(200));
  CHECK(res.solution.unserved[0][0][0] == doctest::Approx(60));
  CHECK(res.solution.cost.lost_load == doctest::Approx(1.0 * 8760 * 5000 * 60));
}

TEST_CASE("reserve beyond capacity activates unserved power") {
  auto inst = single_coal_case();
  auto &pc = inst.pc;
  pc.regions[0].reserve_margin = {150};
  auto res = plan_expansion(pc, inst.sched);
  REQUIRE(res.milp.status == MilpStatus::optimal);
  // 200 MW firm must cover served load (100 - u) plus 150 MW reserve.
  CHECK(res.solution.unserved[0][0][0] == doctest::Approx(50));
  CHECK(res.solution.cost.lost_load > 0);
}

TEST_CASE("zero build limits mean zero PV built") {
  auto pc = load_case_bundle(fixtures::tiny3_dir());
  for (auto &r : pc.regions)
    std::fill(r.pv_build_limit.begin(), r.pv_build_limit.end(), 0.0);
  pc.regions[0].rps.assign(pc.horizon.n_years, 0.0);
  auto sched = partition_blocks(pc, 4, 7);
  auto res = plan_expansion(pc, sched);
  REQUIRE(res.milp.status == MilpStatus::optimal);
  for (const auto &r : res.solution.pv_built)
    for (double b : r)
      CHECK(b == 0.0);
  CHECK(res.solution.cost.pv_expansion == 0.0);
}

TEST_CASE("tiny3 plan: audit, objective consistency, cap, relaxation bound, oracle") {
  auto pc = load_case_bundle(fixtures::tiny3_dir());
  auto sched = partition_blocks(pc, 8, 7);
  auto res = plan_expansion(pc, sched);
  REQUIRE(res.milp.status == MilpStatus::optimal);
  const auto &sol = res.solution;

  auto audit = audit_solution(pc, sched, sol, 1e-6);
  CHECK_MESSAGE(audit.pass(), audit.max_residual());

  auto x = lp_vector_from_solution(pc, sched, res.spec, sol);
  CHECK(rel_diff(res.spec.objective_value(x), sol.cost.total) <= 1e-9);
  CHECK(rel_diff(res.milp.incumbent.objective, sol.cost.total) <= 1e-9);
  CHECK(res.spec.max_violation(x) <= 1e-6);

  for (std::size_t r = 0; r < pc.regions.size(); ++r)
    CHECK(pv_capacity_mw(pc, sol, r, pc.horizon.n_years) <= pc.regions[r].validated_dispatch_total + 1e-9);

  auto relax = solve_lp(res.spec);
  REQUIRE(relax.status == LpStatus::optimal);
  CHECK(res.milp.incumbent.objective >= relax.objective - 1e-9);

  double oracle = fixtures::enumerate_expansion_optimum(pc, sched);
  CHECK(rel_diff(res.milp.incumbent.objective, oracle) <= 1e-6);
}

TEST_CASE("property: random instances match the enumeration oracle") {
  std::mt19937_64 rng(31337);
  int feasible = 0;
  for (int trial = 0; trial < 12; ++trial) {
    int R = 1 + trial % 3, Y = 1 + (trial / 3) % 2, S = 1 + trial % 4;
    auto inst = fixtures::random_expansion_instance(rng, R, Y, S);
    auto res = plan_expansion(inst.pc, inst.sched);
    double oracle = fixtures::enumerate_expansion_optimum(inst.pc, inst.sched);
    CAPTURE(trial);
    if (oracle == infinity) {
      CHECK(res.milp.status == MilpStatus::infeasible);
      continue;
    }
    ++feasible;
    REQUIRE(res.milp.status == MilpStatus::optimal);
    CHECK(rel_diff(res.milp.incumbent.objective, oracle) <= 1e-6);
    CHECK(audit_solution(inst.pc, inst.sched, res.solution, 1e-6).pass());
    auto x = lp_vector_from_solution(inst.pc, inst.sched, res.spec, res.solution);
    CHECK(rel_diff(res.spec.objective_value(x), res.solution.cost.total) <= 1e-9);
  }
  CHECK(feasible >= 8);
}

TEST_CASE("property: LP objective equals the cost breakdown for arbitrary solutions") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = fixtures::random_expansion_instance(rng, 1 + trial % 3, 1 + trial % 2, 3);
    auto spec = build_expansion_lp(inst.pc, inst.sched);
    auto sol = zero_solution(inst.pc, inst.sched);
    for (auto &r : sol.pv_built)
      for (auto &b : r)
        b = std::round(2.5 + 2.5 * u(rng));
    for (auto *arr : {&sol.dispatch, &sol.unserved, &sol.flows})
      for (auto &a : *arr)
        for (auto &y : a)
          for (auto &v : y)
            v = arr == &sol.flows ? 50 * u(rng) : 50 + 50 * u(rng);
    // PV built without a PV group has no meaning; keep those at zero.
    for (std::size_t r = 0; r < inst.pc.regions.size(); ++r)
      if (!inst.pc.pv_unit(r))
        std::fill(sol.pv_built[r].begin(), sol.pv_built[r].end(), 0.0);
    auto c = evaluate_cost_breakdown(inst.pc, inst.sched, sol);
    auto x = lp_vector_from_solution(inst.pc, inst.sched, spec, sol);
    CHECK(rel_diff(spec.objective_value(x), c.total) <= 1e-9);
    CHECK(c.total == c.sum_of_parts());
    auto back = solution_from_lp(inst.pc, inst.sched, spec, x);
    CHECK(back.pv_built == sol.pv_built);
    CHECK(back.flows == sol.flows);
  }
}

TEST_CASE("audit flags planted violations") {
  auto pc = load_case_bundle(fixtures::tiny3_dir());
  auto sched = partition_blocks(pc, 2, 7);
  auto res = plan_expansion(pc, sched);
  REQUIRE(res.milp.status == MilpStatus::optimal);
  auto sol = res.solution;
  // Push one interface 5 MW past its limit and rebalance both ends.
  const auto &itf = pc.interfaces[0];
  sol.flows[0][0][0] = itf.capacity + 5;
  auto rep = audit_solution(pc, sched, sol, 1e-6);
  CHECK_FALSE(rep.pass());
  CHECK(rep.family("interface").max_residual == doctest::Approx(5));
  CHECK(rep.family("interface").worst.find(itf.id) != std::string::npos);
  CHECK(rep.family("rps").max_residual == 0.0);

  auto over = res.solution;
  over.pv_built[0][0] = 100;
  auto rep2 = audit_solution(pc, sched, over, 1e-6);
  CHECK(rep2.family("build_limit").max_residual == doctest::Approx(95));
  CHECK(rep2.family("compatibility").max_residual > 0);
}

TEST_CASE("zero-load case, zero solution audits clean") {
  auto pc = fixtures::skeleton({"a", "b"}, 1, 0.05, 8760);
  pc.units.push_back(fixtures::make_unit(pc, "g", "a", UnitKind::gas, 100, 1, 0));
  pc.interfaces.push_back(fixtures::make_interface(pc, "ab", "a", "b", 10));
  auto sched = fixtures::schedule_from({{{0.5, {0, 0}, {0, 0}}, {0.5, {0, 0}, {0.3, 0.3}}}});
  auto rep = audit_solution(pc, sched, zero_solution(pc, sched), 1e-6);
  for (const auto &f : rep.families)
    CHECK_MESSAGE(f.max_residual == 0.0, f.name);
}

TEST_CASE("property: emission price never lowers PV built") {
  auto base = load_case_bundle(fixtures::tiny3_dir());
  // Expensive panels make PV marginal so the sweep can move it.
  for (auto &r : base.regions)
    for (auto &c : r.pv_build_cost)
      c *= 4.0;
  auto sched = partition_blocks(base, 4, 7);
  double prev = -1;
  std::vector<double> built;
  for (double factor : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    auto pc = base;
    for (auto &u : pc.units)
      for (auto &p : u.emission_price)
        p *= factor;
    auto res = plan_expansion(pc, sched);
    REQUIRE(res.milp.status == MilpStatus::optimal);
    double total = 0;
    for (const auto &r : res.solution.pv_built)
      for (double b : r)
        total += b;
    built.push_back(total);
    CHECK(total >= prev);
    prev = total;
  }
  CHECK(built.back() > built.front());
}

TEST_CASE("solution json and mps export round trip") {
  auto pc = load_case_bundle(fixtures::tiny3_dir());
  auto sched = partition_blocks(pc, 3, 7);
  auto res = plan_expansion(pc, sched);
  auto dir = fixtures::scratch_dir("solution_io");
  write_solution_json(pc, res.solution, "abc123", dir / "solution.json");
  auto [back, hash] = read_solution_json(pc, sched, dir / "solution.json");
  CHECK(hash == "abc123");
  CHECK(back.pv_built == res.solution.pv_built);
  CHECK(back.dispatch == res.solution.dispatch);
  CHECK(back.flows == res.solution.flows);
  CHECK(back.cost.total == res.solution.cost.total);
  CHECK(back.status == res.solution.status);

  std::stringstream mps;
  write_mps(res.spec, mps);
  auto reread = read_mps(mps);
  auto again = solve_milp(reread);
  REQUIRE(again.status == MilpStatus::optimal);
  CHECK(rel_diff(again.incumbent.objective, res.milp.incumbent.objective) <= 1e-9);

  std::stringstream external;
  for (std::size_t j = 0; j < res.spec.num_variables(); ++j)
    external << res.spec.variables()[j].name << ' ' << format_number(res.milp.incumbent.values[j]) << '\n';
  auto values = read_solution_values(res.spec, external);
  auto imported = solution_from_lp(pc, sched, res.spec, values);
  CHECK(imported.pv_built == res.solution.pv_built);
}

TEST_CASE("emission basis option from config") {
  Config cfg;
  CHECK(ExpansionOptions::from_config(cfg).emission_basis == EmissionBasis::output);
  cfg.set("expansion.emission_basis", std::string("heat_input"));
  CHECK(ExpansionOptions::from_config(cfg).emission_basis == EmissionBasis::heat_input);
  cfg.set("expansion.emission_basis", std::string("bogus"));
  CHECK_THROWS_AS(ExpansionOptions::from_config(cfg), InputError);
}
