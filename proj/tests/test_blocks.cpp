#include <doctest.h>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>

#include "pvgrid/blocks.hpp"
#include "pvgrid/table.hpp"
#include "support/fixtures.hpp"

using namespace pvgrid;

namespace {

// One region, one year, 24 hours: 12 dark hours at 50 MW, 12 lit hours at
// 100 MW with cf 0.8, interleaved so chronology cannot help.
PlanningCase night_day_case() {
  auto pc = fixtures::skeleton({"a"}, 1, 0.05, 24);
  pc.units.push_back(fixtures::make_unit(pc, "gas", "a", UnitKind::gas, 200, 1, 0));
  fixtures::fill_constant_series(pc, 0, 0);
  auto &s = pc.series[0];
  for (int h = 0; h < 24; ++h) {
    bool day = (h * 7) % 24 < 12;
    s.load_mw[h] = day ? 100 : 50;
    s.solar_cf[h] = day ? 0.8 : 0.0;
  }
  return pc;
}

// Best two-cluster SSE over every assignment of 24 points, walking the
// assignments in Gray-code order so each step moves a single point.
double brute_force_two_cluster_sse(const std::vector<std::array<double, 2>> &pts) {
  const std::size_t n = pts.size();
  double tot[2] = {0, 0}, tot_sq = 0;
  for (auto &p : pts) {
    tot[0] += p[0];
    tot[1] += p[1];
    tot_sq += p[0] * p[0] + p[1] * p[1];
  }
  double in1[2] = {0, 0};
  std::size_t n1 = 0;
  std::vector<bool> member(n, false);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 1; i < (std::uint64_t{1} << n); ++i) {
    std::size_t bit = static_cast<std::size_t>(__builtin_ctzll(i));
    double sign = member[bit] ? -1.0 : 1.0;
    member[bit] = !member[bit];
    in1[0] += sign * pts[bit][0];
    in1[1] += sign * pts[bit][1];
    n1 = member[bit] ? n1 + 1 : n1 - 1;
    if (n1 == 0 || n1 == n)
      continue;
    double out0 = tot[0] - in1[0], out1 = tot[1] - in1[1];
    double sse = tot_sq - (in1[0] * in1[0] + in1[1] * in1[1]) / n1 -
                 (out0 * out0 + out1 * out1) / (n - n1);
    best = std::min(best, sse);
  }
  return best;
}

PlanningCase random_series_case(std::mt19937_64 &rng, int regions, int hours) {
  std::vector<std::string> ids;
  for (int r = 0; r < regions; ++r)
    ids.push_back("r" + std::to_string(r));
  auto pc = fixtures::skeleton(ids, 1, 0.05, hours);
  fixtures::fill_constant_series(pc, 0, 0);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto &s : pc.series)
    for (int h = 0; h < hours; ++h) {
      s.load_mw[h] = 50 + 100 * u(rng);
      bool dark = h % 24 < 8 || h % 24 >= 20;
      s.solar_cf[h] = dark ? 0.0 : u(rng);
    }
  return pc;
}

} // namespace

TEST_CASE("constant series, one block") {
  auto pc = fixtures::skeleton({"a"}, 1, 0.05, 24);
  fixtures::fill_constant_series(pc, 100, 0.2);
  auto sched = partition_blocks(pc, 1, 1);
  REQUIRE(sched.blocks_in(1) == 1);
  const auto &b = sched.block(1, 0);
  CHECK(b.duration_fraction == 1.0);
  CHECK(b.load_mw[0] == doctest::Approx(100).epsilon(1e-15));
  CHECK(b.pv_cf[0] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("constant series asks for more blocks than distinct hours") {
  auto pc = fixtures::skeleton({"a"}, 1, 0.05, 24);
  fixtures::fill_constant_series(pc, 100, 0.2);
  CHECK(partition_blocks(pc, 5, 1).blocks_in(1) == 1);
}

TEST_CASE("night/day series splits exactly and matches brute force") {
  auto pc = night_day_case();
  auto sched = partition_blocks(pc, 2, 42);
  REQUIRE(sched.blocks_in(1) == 2);
  // Blocks are ordered by descending load: the lit block first.
  const auto &day = sched.block(1, 0), &night = sched.block(1, 1);
  CHECK(day.duration_fraction == doctest::Approx(0.5));
  CHECK(day.load_mw[0] == doctest::Approx(100));
  CHECK(day.pv_cf[0] == doctest::Approx(0.8));
  CHECK(night.duration_fraction == doctest::Approx(0.5));
  CHECK(night.load_mw[0] == doctest::Approx(50));
  CHECK(night.pv_cf[0] == 0.0);

  auto rep = partition_report(sched, pc);
  CHECK(rep.years[0].zero_cf_blocks == 1);

  std::vector<std::array<double, 2>> pts;
  for (int h = 0; h < 24; ++h) // normalized to [0,1] per dimension
    pts.push_back({(pc.series[0].load_mw[h] - 50) / 50, pc.series[0].solar_cf[h] / 0.8});
  double oracle = brute_force_two_cluster_sse(pts);
  CHECK(oracle == doctest::Approx(0.0));
  CHECK(rep.years[0].within_sse == doctest::Approx(oracle));
}

TEST_CASE("k = 1 gives the plain means and conserves energy") {
  auto pc = fixtures::skeleton({"a", "b"}, 1, 0.05, 100);
  fixtures::fill_constant_series(pc, 0, 0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto &s : pc.series)
    for (int h = 0; h < 100; ++h) {
      s.load_mw[h] = 1000 * u(rng);
      s.solar_cf[h] = u(rng);
    }
  auto sched = partition_blocks(pc, 1, 9);
  REQUIRE(sched.blocks_in(1) == 1);
  for (std::size_t r = 0; r < 2; ++r) {
    const auto &s = pc.series[r];
    double mean_load = std::accumulate(s.load_mw.begin(), s.load_mw.end(), 0.0) / 100;
    double mean_cf = std::accumulate(s.solar_cf.begin(), s.solar_cf.end(), 0.0) / 100;
    CHECK(sched.block(1, 0).load_mw[r] == doctest::Approx(mean_load).epsilon(1e-14));
    CHECK(sched.block(1, 0).pv_cf[r] == doctest::Approx(mean_cf).epsilon(1e-14));
  }
  auto rep = partition_report(sched, pc);
  CHECK(rep.years[0].max_relative_energy_error <= 1e-14);
}

TEST_CASE("tiny3: durations, energy, closure and monotone refinement") {
  auto pc = load_case_bundle(fixtures::tiny3_dir());
  std::vector<double> prev_sse(pc.horizon.n_years, std::numeric_limits<double>::infinity());
  for (std::size_t k = 1; k <= 10; ++k) {
    auto sched = partition_blocks(pc, k, 7);
    auto rep = partition_report(sched, pc);
    for (int y = 1; y <= pc.horizon.n_years; ++y) {
      const auto &yr = rep.years[y - 1];
      CAPTURE(k);
      CAPTURE(y);
      CHECK(yr.blocks == k);
      CHECK(std::abs(yr.duration_sum - 1.0) <= 1e-9);
      CHECK(yr.max_relative_energy_error <= 1e-6);
      CHECK(yr.within_sse <= prev_sse[y - 1] * (1 + 1e-12));
      prev_sse[y - 1] = yr.within_sse;
      // Every hour dark in all regions lands in an all-zero block.
      if (k >= 2) {
        CHECK(yr.zero_cf_blocks >= 1);
        for (int h = 0; h < pc.horizon.hours_per_year; ++h) {
          bool dark = true;
          for (std::size_t r = 0; r < pc.regions.size(); ++r)
            dark = dark && pc.series_for(r, y).solar_cf[h] == 0.0;
          if (!dark)
            continue;
          const auto &b = sched.block(y, sched.assignment[y - 1][h]);
          for (double cf : b.pv_cf)
            REQUIRE(cf == 0.0);
        }
      }
      for (const auto &b : sched.years[y - 1]) {
        CHECK(b.duration_fraction > 0.0);
        for (double cf : b.pv_cf)
          CHECK((cf >= 0.0 && cf <= 1.0));
      }
    }
  }
}

TEST_CASE("property: random series conserve energy and refine monotonically") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    auto pc = random_series_case(rng, 1 + trial % 3, 24 * 20);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= 7; ++k) {
      auto sched = partition_blocks(pc, k, 100 + trial);
      auto rep = partition_report(sched, pc);
      const auto &yr = rep.years[0];
      CHECK(std::abs(yr.duration_sum - 1.0) <= 1e-9);
      CHECK(yr.max_relative_energy_error <= 1e-6);
      CHECK(yr.within_sse <= prev * (1 + 1e-12));
      prev = yr.within_sse;
      // Block levels are the means of their assigned hours.
      for (std::size_t s = 0; s < sched.blocks_in(1); ++s) {
        double sum = 0;
        int n = 0;
        for (int h = 0; h < pc.horizon.hours_per_year; ++h)
          if (sched.assignment[0][h] == s) {
            sum += pc.series[0].load_mw[h];
            ++n;
          }
        REQUIRE(n > 0);
        CHECK(sched.block(1, s).load_mw[0] == doctest::Approx(sum / n).epsilon(1e-12));
        CHECK(sched.block(1, s).duration_fraction == doctest::Approx(double(n) / pc.horizon.hours_per_year));
      }
    }
  }
}

TEST_CASE("deterministic for a seed; files round trip") {
  auto pc = load_case_bundle(fixtures::tiny3_dir());
  auto a = partition_blocks(pc, 8, 7);
  auto b = partition_blocks(pc, 8, 7);
  CHECK(a == b);
  auto dir = fixtures::scratch_dir("blocks_io");
  write_block_schedule(a, pc, dir);
  auto back = read_block_schedule(dir, pc);
  CHECK(back == a);
}

TEST_CASE("partition errors") {
  auto pc = night_day_case();
  CHECK_THROWS_AS(partition_blocks(pc, 0, 1), InputError);
  auto empty = pc;
  empty.series[0].load_mw.clear();
  empty.series[0].solar_cf.clear();
  CHECK_THROWS_AS(partition_blocks(empty, 2, 1), InputError);

  auto sched = partition_blocks(pc, 2, 1);
  auto other = fixtures::skeleton({"a", "b"}, 1, 0.05, 24);
  fixtures::fill_constant_series(other, 1, 0);
  CHECK_THROWS_AS(partition_report(sched, other), InputError);
}
