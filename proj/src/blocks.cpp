#include "pvgrid/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "pvgrid/table.hpp"

namespace pvgrid {

namespace {

constexpr int max_lloyd_iterations = 100;

// Row-major hour x feature matrix for one year.
struct Features {
  std::size_t hours = 0;
  std::size_t dims = 0;
  std::vector<double> x;
  std::vector<int> group; // 0 = dark in every region, 1 = lit

  const double *row(std::size_t h) const { return x.data() + h * dims; }
};

Features build_features(const PlanningCase &pc, int year) {
  const std::size_t nr = pc.regions.size();
  Features f;
  f.hours = static_cast<std::size_t>(pc.horizon.hours_per_year);
  f.dims = 2 * nr;
  f.x.assign(f.hours * f.dims, 0.0);
  f.group.assign(f.hours, 0);
  for (std::size_t r = 0; r < nr; ++r) {
    const auto &s = pc.series_for(r, year);
    auto fill = [&](const std::vector<double> &v, std::size_t dim) {
      auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      double span = *hi - *lo;
      for (std::size_t h = 0; h < f.hours; ++h)
        f.x[h * f.dims + dim] = span > 0.0 ? (v[h] - *lo) / span : 0.0;
    };
    fill(s.load_mw, r);
    fill(s.solar_cf, nr + r);
    for (std::size_t h = 0; h < f.hours; ++h)
      if (s.solar_cf[h] > 0.0)
        f.group[h] = 1;
  }
  return f;
}

double dist2(const double *a, const double *b, std::size_t n) {
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

class Clustering {
public:
  explicit Clustering(const Features &f) : f_(f), assign_(f.hours, 0), d2_(f.hours, 0.0) {}

  void add_center(const double *point, int group) {
    centers_.insert(centers_.end(), point, point + f_.dims);
    groups_.push_back(group);
  }

  void add_group_mean(int group) {
    std::vector<double> mean(f_.dims, 0.0);
    std::size_t n = 0;
    for (std::size_t h = 0; h < f_.hours; ++h) {
      if (group >= 0 && f_.group[h] != group)
        continue;
      for (std::size_t d = 0; d < f_.dims; ++d)
        mean[d] += f_.row(h)[d];
      ++n;
    }
    for (auto &m : mean)
      m /= static_cast<double>(n);
    add_center(mean.data(), group);
  }

  std::size_t size() const { return groups_.size(); }
  const std::vector<std::size_t> &assignment() const { return assign_; }

  // Nearest eligible center; ties go to the lowest index.
  void assign_all() {
    for (std::size_t h = 0; h < f_.hours; ++h) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < size(); ++c) {
        if (groups_[c] >= 0 && groups_[c] != f_.group[h])
          continue;
        double d = dist2(f_.row(h), centers_.data() + c * f_.dims, f_.dims);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      assign_[h] = arg;
      d2_[h] = best;
    }
  }

  void lloyd() {
    assign_all();
    for (int it = 0; it < max_lloyd_iterations; ++it) {
      update_centers();
      auto before = assign_;
      assign_all();
      if (before == assign_)
        break;
    }
  }

  double total_d2() const { return std::accumulate(d2_.begin(), d2_.end(), 0.0); }

  /// Samples an hour with probability proportional to its squared distance.
  std::size_t sample(std::mt19937_64 &rng) const {
    double total = total_d2();
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double target = u * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t h = 0; h < f_.hours; ++h) {
      if (d2_[h] <= 0.0)
        continue;
      acc += d2_[h];
      last = h;
      if (acc > target)
        return h;
    }
    return last;
  }

private:
  void update_centers() {
    const std::size_t k = size();
    std::vector<double> sums(k * f_.dims, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t h = 0; h < f_.hours; ++h) {
      auto c = assign_[h];
      ++counts[c];
      for (std::size_t d = 0; d < f_.dims; ++d)
        sums[c * f_.dims + d] += f_.row(h)[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        reseed_empty(c);
        continue;
      }
      for (std::size_t d = 0; d < f_.dims; ++d)
        centers_[c * f_.dims + d] = sums[c * f_.dims + d] / static_cast<double>(counts[c]);
    }
  }

  // Moves an empty center onto the worst-fit hour of its group, if any.
  void reseed_empty(std::size_t c) {
    double worst = 0.0;
    std::size_t arg = f_.hours;
    for (std::size_t h = 0; h < f_.hours; ++h) {
      if (groups_[c] >= 0 && groups_[c] != f_.group[h])
        continue;
      if (d2_[h] > worst) {
        worst = d2_[h];
        arg = h;
      }
    }
    if (arg == f_.hours)
      return;
    std::copy(f_.row(arg), f_.row(arg) + f_.dims, centers_.begin() + c * f_.dims);
    d2_[arg] = 0.0;
  }

  const Features &f_;
  std::vector<double> centers_;
  std::vector<int> groups_; // -1 = any hour
  std::vector<std::size_t> assign_;
  std::vector<double> d2_;
};

std::vector<std::size_t> cluster_year(const Features &f, std::size_t k, std::mt19937_64 &rng) {
  Clustering cl(f);
  bool has_dark = false, has_lit = false;
  for (int g : f.group)
    (g == 0 ? has_dark : has_lit) = true;
  if (k >= 2 && has_dark && has_lit) {
    cl.add_group_mean(0);
    cl.add_group_mean(1);
  } else {
    cl.add_group_mean(-1);
  }
  cl.lloyd();
  while (cl.size() < k) {
    if (!(cl.total_d2() > 0.0))
      break; // fewer distinct hour vectors than k
    auto h = cl.sample(rng);
    int group = (has_dark && has_lit) ? f.group[h] : -1;
    cl.add_center(f.row(h), group);
    cl.lloyd();
  }
  return cl.assignment();
}

void check_fits(const BlockSchedule &sched, const PlanningCase &pc) {
  if (sched.n_years() != pc.horizon.n_years)
    throw InputError(fmt::format("block schedule has {} years, case has {}", sched.n_years(),
                                 pc.horizon.n_years));
  for (int y = 1; y <= sched.n_years(); ++y) {
    if (sched.assignment.at(y - 1).size() != static_cast<std::size_t>(pc.horizon.hours_per_year))
      throw InputError(fmt::format("block schedule year {} covers {} hours, case has {}", y,
                                   sched.assignment.at(y - 1).size(),
                                   pc.horizon.hours_per_year));
    for (const auto &b : sched.years[y - 1])
      if (b.load_mw.size() != pc.regions.size() || b.pv_cf.size() != pc.regions.size())
        throw InputError(fmt::format("block schedule year {} block {} has {} regions, case has {}",
                                     y, b.block, b.load_mw.size(), pc.regions.size()));
    for (auto s : sched.assignment[y - 1])
      if (s >= sched.years[y - 1].size())
        throw InputError(fmt::format("block schedule year {} assigns an hour to missing block {}",
                                     y, s));
  }
}

} // namespace

BlockSchedule partition_blocks(const PlanningCase &pc, std::size_t k_per_year,
                               std::uint64_t seed) {
  if (k_per_year == 0)
    throw InputError("k_per_year must be >= 1");
  const std::size_t nr = pc.regions.size();
  if (nr == 0)
    throw InputError("case has no regions to partition");
  const auto T = static_cast<std::size_t>(pc.horizon.hours_per_year);
  std::mt19937_64 rng(seed);
  BlockSchedule sched;
  for (int y = 1; y <= pc.horizon.n_years; ++y) {
    for (std::size_t r = 0; r < nr; ++r) {
      const auto &s = pc.series_for(r, y);
      if (s.load_mw.empty() || s.load_mw.size() != T || s.solar_cf.size() != T)
        throw InputError(fmt::format("series for region '{}' year {} is empty or mis-sized",
                                     pc.regions[r].id, y));
    }
    auto features = build_features(pc, y);
    auto raw = cluster_year(features, k_per_year, rng);

    // Means of the unnormalized data per cluster.
    std::size_t k = 0;
    for (auto c : raw)
      k = std::max(k, c + 1);
    std::vector<std::size_t> counts(k, 0);
    std::vector<std::vector<double>> load(k, std::vector<double>(nr, 0.0));
    std::vector<std::vector<double>> cf(k, std::vector<double>(nr, 0.0));
    for (std::size_t r = 0; r < nr; ++r) {
      const auto &s = pc.series_for(r, y);
      for (std::size_t h = 0; h < T; ++h) {
        load[raw[h]][r] += s.load_mw[h];
        cf[raw[h]][r] += s.solar_cf[h];
      }
    }
    for (auto c : raw)
      ++counts[c];

    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0)
        continue;
      for (std::size_t r = 0; r < nr; ++r) {
        load[c][r] /= static_cast<double>(counts[c]);
        cf[c][r] /= static_cast<double>(counts[c]);
      }
      order.push_back(c);
    }
    auto total = [](const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double la = total(load[a]), lb = total(load[b]);
      if (la != lb)
        return la > lb;
      return total(cf[a]) > total(cf[b]);
    });
    std::vector<std::size_t> relabel(k, 0);
    std::vector<TimeBlock> blocks;
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto c = order[i];
      relabel[c] = i;
      TimeBlock b;
      b.year = y;
      b.block = i;
      b.duration_fraction = static_cast<double>(counts[c]) / static_cast<double>(T);
      b.load_mw = load[c];
      b.pv_cf = cf[c];
      blocks.push_back(std::move(b));
    }
    std::vector<std::size_t> assignment(T);
    for (std::size_t h = 0; h < T; ++h)
      assignment[h] = relabel[raw[h]];
    sched.years.push_back(std::move(blocks));
    sched.assignment.push_back(std::move(assignment));
  }
  return sched;
}

PartitionReport partition_report(const BlockSchedule &sched, const PlanningCase &pc) {
  check_fits(sched, pc);
  const std::size_t nr = pc.regions.size();
  const double T = pc.horizon.hours_per_year;
  PartitionReport rep;
  for (int y = 1; y <= sched.n_years(); ++y) {
    const auto &blocks = sched.years[y - 1];
    PartitionYearReport yr;
    yr.year = y;
    yr.blocks = blocks.size();
    for (const auto &b : blocks) {
      yr.duration_sum += b.duration_fraction;
      bool zero = std::all_of(b.pv_cf.begin(), b.pv_cf.end(), [](double c) { return c == 0.0; });
      if (zero)
        ++yr.zero_cf_blocks;
    }
    yr.energy_error_mwh.assign(nr, 0.0);
    for (std::size_t r = 0; r < nr; ++r) {
      const auto &s = pc.series_for(r, y);
      double hourly = std::accumulate(s.load_mw.begin(), s.load_mw.end(), 0.0);
      double blocked = 0.0;
      for (const auto &b : blocks)
        blocked += b.duration_fraction * b.load_mw[r] * T;
      yr.energy_error_mwh[r] = blocked - hourly;
      if (hourly > 0.0)
        yr.max_relative_energy_error =
            std::max(yr.max_relative_energy_error, std::abs(blocked - hourly) / hourly);
      else
        yr.max_relative_energy_error =
            std::max(yr.max_relative_energy_error, std::abs(blocked - hourly));
    }
    // Squared deviations of normalized hour vectors from their block centroid.
    auto f = build_features(pc, y);
    const auto &assign = sched.assignment[y - 1];
    std::vector<double> sums(blocks.size() * f.dims, 0.0);
    std::vector<double> counts(blocks.size(), 0.0);
    for (std::size_t h = 0; h < f.hours; ++h) {
      counts[assign[h]] += 1.0;
      for (std::size_t d = 0; d < f.dims; ++d)
        sums[assign[h] * f.dims + d] += f.row(h)[d];
    }
    for (std::size_t h = 0; h < f.hours; ++h) {
      auto s = assign[h];
      for (std::size_t d = 0; d < f.dims; ++d) {
        double t = f.row(h)[d] - sums[s * f.dims + d] / counts[s];
        yr.within_sse += t * t;
      }
    }
    rep.years.push_back(std::move(yr));
  }
  return rep;
}

void write_block_schedule(const BlockSchedule &sched, const PlanningCase &pc,
                          const std::filesystem::path &dir) {
  check_fits(sched, pc);
  std::filesystem::create_directories(dir);
  std::vector<std::string> header{"year", "block", "duration_fraction"};
  for (const auto &r : pc.regions)
    header.push_back("load_" + r.id);
  for (const auto &r : pc.regions)
    header.push_back("cf_" + r.id);
  std::vector<std::vector<std::string>> rows;
  for (const auto &year : sched.years)
    for (const auto &b : year) {
      std::vector<std::string> row{std::to_string(b.year), std::to_string(b.block),
                                   format_number(b.duration_fraction)};
      for (double x : b.load_mw)
        row.push_back(format_number(x));
      for (double x : b.pv_cf)
        row.push_back(format_number(x));
      rows.push_back(std::move(row));
    }
  write_csv(dir / "blocks.csv", header, rows);

  rows.clear();
  for (std::size_t y = 0; y < sched.assignment.size(); ++y)
    for (std::size_t h = 0; h < sched.assignment[y].size(); ++h)
      rows.push_back({std::to_string(y + 1), std::to_string(h),
                      std::to_string(sched.assignment[y][h])});
  write_csv(dir / "assignment.csv", {"year", "hour", "block"}, rows);
}

BlockSchedule read_block_schedule(const std::filesystem::path &dir, const PlanningCase &pc) {
  auto blocks = CsvTable::read(dir / "blocks.csv");
  auto assign = CsvTable::read(dir / "assignment.csv");
  const int ny = pc.horizon.n_years;
  BlockSchedule sched;
  sched.years.resize(static_cast<std::size_t>(ny));
  sched.assignment.assign(static_cast<std::size_t>(ny),
                          std::vector<std::size_t>(
                              static_cast<std::size_t>(pc.horizon.hours_per_year), 0));
  for (std::size_t i = 0; i < blocks.rows(); ++i) {
    TimeBlock b;
    b.year = static_cast<int>(blocks.integer(i, "year"));
    b.block = static_cast<std::size_t>(blocks.integer(i, "block"));
    if (b.year < 1 || b.year > ny)
      throw InputError(blocks.source(), blocks.file_row(i), fmt::format("year {} out of range", b.year));
    if (b.block != sched.years[b.year - 1].size())
      throw InputError(blocks.source(), blocks.file_row(i), "blocks must be listed in order");
    b.duration_fraction = blocks.number(i, "duration_fraction");
    for (const auto &r : pc.regions) {
      b.load_mw.push_back(blocks.number(i, "load_" + r.id));
      b.pv_cf.push_back(blocks.number(i, "cf_" + r.id));
    }
    sched.years[b.year - 1].push_back(std::move(b));
  }
  if (assign.rows() != static_cast<std::size_t>(ny) * pc.horizon.hours_per_year)
    throw InputError(assign.source(), 0,
                     fmt::format("expected {} rows", ny * pc.horizon.hours_per_year));
  for (std::size_t i = 0; i < assign.rows(); ++i) {
    auto y = assign.integer(i, "year");
    auto h = assign.integer(i, "hour");
    if (y < 1 || y > ny || h < 0 || h >= pc.horizon.hours_per_year)
      throw InputError(assign.source(), assign.file_row(i), "year/hour out of range");
    sched.assignment[y - 1][h] = static_cast<std::size_t>(assign.integer(i, "block"));
  }
  check_fits(sched, pc);
  return sched;
}

} // namespace pvgrid
