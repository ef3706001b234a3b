#include <doctest.h>

#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "pvgrid/case.hpp"
#include "pvgrid/table.hpp"
#include "support/fixtures.hpp"

using namespace pvgrid;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path &p, const std::string &text) {
  std::ofstream out(p);
  out << text;
}

// Copy of tiny3 with one file rewritten by `edit`.
fs::path edited_tiny3(const std::string &name, const std::string &file,
                      const std::function<std::string(std::string)> &edit) {
  auto dir = fixtures::scratch_dir(name);
  fs::copy(fixtures::tiny3_dir(), dir, fs::copy_options::recursive);
  write_text(dir / file, edit(read_text(dir / file)));
  return dir;
}

std::string replace_once(std::string s, const std::string &from, const std::string &to) {
  auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

PlanningCase small_valid_case() {
  auto pc = fixtures::skeleton({"a", "b"}, 2, 0.05, 24);
  pc.units.push_back(fixtures::make_unit(pc, "coal_a", "a", UnitKind::coal, 100, 2, 120));
  pc.units.push_back(fixtures::make_unit(pc, "pv_a", "a", UnitKind::pv, 50, 1, 10));
  pc.units.push_back(fixtures::make_unit(pc, "gas_b", "b", UnitKind::gas, 80, 1, 60));
  pc.interfaces.push_back(fixtures::make_interface(pc, "ab", "a", "b", 40));
  fixtures::sync_validated_totals(pc);
  fixtures::fill_constant_series(pc, 100, 0.2);
  return pc;
}

} // namespace

TEST_CASE("tiny3 bundle loads with expected counts and validates clean") {
  auto pc = load_case_bundle(fixtures::tiny3_dir());
  CHECK(pc.regions.size() == 3);
  CHECK(pc.units.size() == 6);
  CHECK(pc.interfaces.size() == 2);
  CHECK(pc.series.size() == 3 * static_cast<std::size_t>(pc.horizon.n_years));
  CHECK(validate_case(pc).ok());
  // Per-year single values are expanded to every year.
  for (const auto &r : pc.regions)
    CHECK(r.pv_build_cost.size() == static_cast<std::size_t>(pc.horizon.n_years));
  CHECK(pc.regions[0].rps == std::vector<double>{0.0, 0.1});
}

TEST_CASE("bundle without interfaces is valid") {
  auto dir = edited_tiny3("no_ifaces", "interfaces.csv", [](std::string s) {
    return s.substr(0, s.find('\n') + 1);
  });
  auto pc = load_case_bundle(dir);
  CHECK(pc.interfaces.empty());
  CHECK(validate_case(pc).ok());
}

TEST_CASE("dangling region id is named with file and row") {
  auto dir = edited_tiny3("dangling", "units.csv",
                          [](std::string s) { return replace_once(s, "coal_n,north", "coal_n,X"); });
  try {
    load_case_bundle(dir);
    FAIL("expected an error");
  } catch (const InputError &e) {
    std::string msg = e.what();
    CHECK(msg.find("'X'") != std::string::npos);
    CHECK(msg.find("units.csv") != std::string::npos);
    CHECK(e.row() == 3);
  }
}

TEST_CASE("missing and unparseable inputs are reported with file and row") {
  auto dir = fixtures::scratch_dir("missing_series");
  fs::copy(fixtures::tiny3_dir(), dir, fs::copy_options::recursive);
  fs::remove(dir / "series" / "central_2.csv");
  CHECK_THROWS_WITH_AS(load_case_bundle(dir), doctest::Contains("central_2.csv"), InputError);

  auto bad = edited_tiny3("bad_number", "interfaces.csv",
                          [](std::string s) { return replace_once(s, ",300,", ",3x0,"); });
  try {
    load_case_bundle(bad);
    FAIL("expected an error");
  } catch (const InputError &e) {
    CHECK(std::string(e.what()).find("interfaces.csv:2") != std::string::npos);
  }

  auto wrong_years = edited_tiny3("wrong_years", "regions.csv", [](std::string s) {
    return replace_once(s, "0;0.1", "0;0.1;0.2");
  });
  CHECK_THROWS_WITH_AS(load_case_bundle(wrong_years), doctest::Contains("regions.csv:2"), InputError);
}

TEST_CASE("validate_case flags out-of-range solar cf") {
  auto pc = small_valid_case();
  REQUIRE(validate_case(pc).ok());
  pc.series[1].solar_cf[5] = 1.2;
  auto rep = validate_case(pc);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].message.find("[0,1]") != std::string::npos);
  CHECK(rep.violations[0].path.find("solar_cf") != std::string::npos);
}

TEST_CASE("validate_case flags pv inertia") {
  auto pc = small_valid_case();
  pc.units[1].inertia_h = 3;
  auto rep = validate_case(pc);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].message == "inertia_h must be 0 for pv");
  CHECK(rep.violations[0].path.find("pv_a") != std::string::npos);
}

TEST_CASE("validate_case lists every violation") {
  auto pc = small_valid_case();
  pc.regions[0].rps[1] = 1.5;
  pc.units[0].p_max = 0;
  pc.units[2].governor_droop = 0;
  pc.interfaces[0].to_region = "a";
  pc.interfaces[0].to_index = 0;
  pc.horizon.discount_rate = 0;
  auto rep = validate_case(pc);
  CHECK(rep.violations.size() >= 5);
  auto text = rep.to_string();
  CHECK(text.find("rps") != std::string::npos);
  CHECK(text.find("p_max") != std::string::npos);
  CHECK(text.find("governor_droop") != std::string::npos);
  CHECK(text.find("discount_rate") != std::string::npos);
}

TEST_CASE("bundle round trip is the identity") {
  auto pc = load_case_bundle(fixtures::tiny3_dir());
  auto dir = fixtures::scratch_dir("roundtrip_tiny3");
  write_case_bundle(pc, dir);
  auto back = load_case_bundle(dir);
  CHECK(back == pc);
}

TEST_CASE("property: random cases survive write and reload unchanged") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 12; ++trial) {
    auto inst = fixtures::random_expansion_instance(rng, 1 + trial % 3, 1 + trial % 2, 2);
    auto &pc = inst.pc;
    pc.horizon.hours_per_year = 48;
    fixtures::sync_validated_totals(pc);
    pc.series.clear();
    std::uniform_real_distribution<double> u(0, 1);
    for (int y = 1; y <= pc.horizon.n_years; ++y)
      for (std::size_t r = 0; r < pc.regions.size(); ++r) {
        HourlySeries s{pc.regions[r].id, r, y, {}, {}};
        for (int h = 0; h < 48; ++h) {
          s.load_mw.push_back(100 * u(rng));
          s.solar_cf.push_back(u(rng) < 0.4 ? 0.0 : u(rng));
        }
        pc.series.push_back(std::move(s));
      }
    pc.config.set("horizon.n_years", static_cast<double>(pc.horizon.n_years));
    pc.config.set("horizon.discount_rate", pc.horizon.discount_rate);
    pc.config.set("horizon.hours_per_year", 48.0);
    pc.config.set("partition.k_per_year", 3.0);
    pc.config.set("sweep.block", std::string("peak_solar"));
    REQUIRE_MESSAGE(validate_case(pc).ok(), validate_case(pc).to_string());
    auto dir = fixtures::scratch_dir("roundtrip_random");
    write_case_bundle(pc, dir);
    auto back = load_case_bundle(dir);
    CHECK(back == pc);
  }
}

TEST_CASE("csv and number helpers") {
  auto t = CsvTable::parse("a,b\n1,2;3\n x , 4\n", "mem.csv");
  CHECK(t.rows() == 2);
  CHECK(t.number(0, "a") == 1);
  CHECK(t.number_list(0, "b") == std::vector<double>{2, 3});
  CHECK(t.text(1, "a") == "x");
  CHECK_THROWS_AS(t.number(1, "a"), InputError);
  CHECK_THROWS_AS(t.text(0, "zz"), InputError);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-0.0) == "0");
  CHECK(parse_number(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK_THROWS(parse_number("nan"));
}
