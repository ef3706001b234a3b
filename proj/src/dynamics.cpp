#include "pvgrid/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "pvgrid/table.hpp"

namespace pvgrid {

namespace {

struct Governor {
  std::size_t region;
  double setpoint;
  double rating;
  double gain; // MW per Hz, 0 when the group holds its output
  double tg;
};

class AreaModel {
public:
  AreaModel(const DynamicCase &dc, const SimConfig &cfg) : dc_(dc), cfg_(cfg) {
    const std::size_t n = dc.regions.size();
    for (std::size_t r = 0; r < n; ++r) {
      const auto &reg = dc.regions[r];
      double energy = reg.stored_energy();
      if (energy <= 0.0)
        throw InputError(fmt::format("region '{}' has no rotating inertia online", reg.id));
      momentum_.push_back(2.0 * energy / dc.f0);
      rating_.push_back(reg.rating_mva());
      fixed_.push_back(reg.pv_mw - reg.load_mw);
      for (const auto &m : reg.machines) {
        if (m.online_count <= 0)
          continue;
        bool active = m.droop > 0.0 && m.governor_tg > 0.0;
        governors_.push_back({r, m.dispatch_mw, m.rating_mva(),
                              active ? m.rating_mva() / (m.droop * dc.f0) : 0.0,
                              active ? m.governor_tg : 1.0});
      }
    }
  }

  std::size_t regions() const { return momentum_.size(); }
  std::size_t size() const { return 2 * regions() + governors_.size(); }

  std::vector<double> initial_state() const {
    std::vector<double> x(size(), 0.0);
    for (std::size_t r = 0; r < regions(); ++r)
      x[r] = dc_.regions[r].initial_angle;
    for (std::size_t g = 0; g < governors_.size(); ++g)
      x[2 * regions() + g] = governors_[g].setpoint;
    return x;
  }

  void derivative(const std::vector<double> &x, double trip_mw, std::vector<double> &dx) const {
    const std::size_t n = regions();
    std::fill(dx.begin(), dx.end(), 0.0);
    std::vector<double> power(fixed_);
    for (std::size_t r = 0; r < n; ++r)
      power[r] -= cfg_.damping * rating_[r] * x[n + r] / dc_.f0;
    power[cfg_.disturbance.region] -= trip_mw;
    for (const auto &t : dc_.ties) {
      double flow = t.stiffness * (x[t.from] - x[t.to]);
      power[t.from] -= flow;
      power[t.to] += flow;
    }
    for (std::size_t g = 0; g < governors_.size(); ++g) {
      const auto &gov = governors_[g];
      double pm = x[2 * n + g];
      power[gov.region] += pm;
      if (gov.gain > 0.0) {
        double df = x[n + gov.region];
        double seen = std::copysign(std::max(0.0, std::abs(df) - cfg_.deadband), df);
        dx[2 * n + g] = (gov.setpoint - gov.gain * seen - pm) / gov.tg;
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      dx[r] = 2.0 * std::numbers::pi * x[n + r];
      dx[n + r] = power[r] / momentum_[r];
    }
  }

  void clamp(std::vector<double> &x) const {
    for (std::size_t g = 0; g < governors_.size(); ++g) {
      auto &pm = x[2 * regions() + g];
      pm = std::clamp(pm, 0.0, governors_[g].rating);
    }
  }

  double average(const std::vector<double> &x) const {
    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < regions(); ++r) {
      double w = cfg_.weighting == AverageWeighting::inertia ? momentum_[r] : 1.0;
      num += w * x[regions() + r];
      den += w;
    }
    return dc_.f0 + num / den;
  }

private:
  const DynamicCase &dc_;
  const SimConfig &cfg_;
  std::vector<double> momentum_;
  std::vector<double> rating_;
  std::vector<double> fixed_;
  std::vector<Governor> governors_;
};

FrequencyTrace integrate(const DynamicCase &dc, const SimConfig &cfg, double horizon,
                         double trip_mw) {
  if (!(cfg.dt > 0.0))
    throw InputError("dt must be positive");
  if (cfg.disturbance.region >= dc.regions.size())
    throw InputError(fmt::format("disturbance region index {} out of range", cfg.disturbance.region));
  AreaModel model(dc, cfg);
  const std::size_t n = model.regions();
  const long steps = std::lround(horizon / cfg.dt);
  const long event_step = std::lround(cfg.disturbance.time / cfg.dt);

  FrequencyTrace tr;
  for (const auto &r : dc.regions)
    tr.regions.push_back(r.id);
  tr.event_time = static_cast<double>(event_step) * cfg.dt;
  tr.freq.assign(n, {});
  tr.angle.assign(n, {});
  auto record = [&](long i, const std::vector<double> &x) {
    tr.time.push_back(static_cast<double>(i) * cfg.dt);
    for (std::size_t r = 0; r < n; ++r) {
      tr.freq[r].push_back(dc.f0 + x[n + r]);
      tr.angle[r].push_back(x[r]);
    }
    tr.average.push_back(model.average(x));
  };

  auto x = model.initial_state();
  const std::size_t m = x.size();
  std::vector<double> k1(m), k2(m), k3(m), k4(m), tmp(m);
  record(0, x);
  for (long i = 0; i < steps; ++i) {
    const double p = i >= event_step ? trip_mw : 0.0;
    const double h = cfg.dt;
    model.derivative(x, p, k1);
    for (std::size_t j = 0; j < m; ++j)
      tmp[j] = x[j] + 0.5 * h * k1[j];
    model.derivative(tmp, p, k2);
    for (std::size_t j = 0; j < m; ++j)
      tmp[j] = x[j] + 0.5 * h * k2[j];
    model.derivative(tmp, p, k3);
    for (std::size_t j = 0; j < m; ++j)
      tmp[j] = x[j] + h * k3[j];
    model.derivative(tmp, p, k4);
    for (std::size_t j = 0; j < m; ++j)
      x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    model.clamp(x);
    for (std::size_t j = 0; j < m; ++j)
      if (!std::isfinite(x[j]) || (j >= n && j < 2 * n && std::abs(x[j]) > dc.f0))
        throw NumericalError(fmt::format("integration diverged at step {} (t = {} s)", i + 1,
                                         format_number(static_cast<double>(i + 1) * h)),
                             i + 1);
    record(i + 1, x);
  }
  return tr;
}

double ls_slope(const std::vector<double> &f, std::size_t first, std::size_t w, double dt) {
  double num = 0.0;
  const double mid = 0.5 * static_cast<double>(w);
  for (std::size_t j = 0; j <= w; ++j)
    num += (static_cast<double>(j) - mid) * (f[first + j] - f[first]);
  const double wd = static_cast<double>(w);
  return num / (dt * wd * (wd + 1.0) * (wd + 2.0) / 12.0);
}

std::size_t event_index(const FrequencyTrace &tr) {
  auto it = std::lower_bound(tr.time.begin(), tr.time.end(), tr.event_time - 1e-9);
  return static_cast<std::size_t>(it - tr.time.begin());
}

double trace_dt(const FrequencyTrace &tr) {
  if (tr.samples() < 2)
    throw InputError("frequency trace has fewer than two samples");
  return tr.time[1] - tr.time[0];
}

double round_mismatch(double a, double b) { return std::round(std::abs(a - b) * 1e9) / 1e9; }

} // namespace

SimConfig SimConfig::from_config(const Config &cfg) {
  SimConfig c;
  c.dt = cfg.number("dynamics.dt", c.dt);
  c.flat_horizon = cfg.number("dynamics.flat_horizon", c.flat_horizon);
  c.horizon = cfg.number("dynamics.contingency_horizon", c.horizon);
  c.ripple_tol = cfg.number("dynamics.ripple_tol", c.ripple_tol);
  c.settle_band = cfg.number("dynamics.settle_band", c.settle_band);
  c.rocof_window = cfg.number("dynamics.rocof_window", c.rocof_window);
  c.damping = cfg.number("dynamics.damping", c.damping);
  c.deadband = cfg.number("dynamics.deadband", c.deadband);
  c.disturbance.time = cfg.number("dynamics.event_time", c.disturbance.time);
  auto w = cfg.text("dynamics.average", "inertia");
  if (w == "inertia")
    c.weighting = AverageWeighting::inertia;
  else if (w == "arithmetic")
    c.weighting = AverageWeighting::arithmetic;
  else
    throw InputError(fmt::format("dynamics.average must be inertia or arithmetic, got '{}'", w));
  if (!(c.dt > 0.0))
    throw InputError("dynamics.dt must be positive");
  if (c.flat_horizon < 20.0)
    throw InputError("dynamics.flat_horizon must be at least 20 s");
  return c;
}

double FrequencyTrace::max_deviation(double f0) const {
  double worst = 0.0;
  for (const auto &f : freq)
    for (double v : f)
      worst = std::max(worst, std::abs(v - f0));
  return worst;
}

double FrequencyTrace::final_spread() const {
  double lo = infinity, hi = -infinity;
  for (const auto &f : freq) {
    lo = std::min(lo, f.back());
    hi = std::max(hi, f.back());
  }
  return freq.empty() ? 0.0 : hi - lo;
}

FlatRunResult flat_run(const DynamicCase &dc, const SimConfig &cfg) {
  if (cfg.flat_horizon < 20.0)
    throw InputError("flat run horizon must be at least 20 s");
  FlatRunResult res;
  res.trace = integrate(dc, cfg, cfg.flat_horizon, 0.0);
  res.max_deviation = res.trace.max_deviation(dc.f0);
  res.pass = res.max_deviation <= cfg.ripple_tol;
  return res;
}

FrequencyTrace simulate_contingency(const DynamicCase &dc, const SimConfig &cfg) {
  const auto &d = cfg.disturbance;
  if (d.region >= dc.regions.size())
    throw InputError(fmt::format("disturbance region index {} out of range", d.region));
  const auto &reg = dc.regions[d.region];
  double online = reg.conventional_mw() + reg.pv_mw;
  if (d.mw < 0.0 || d.mw > online + 1e-9)
    throw InputError(fmt::format("trip of {} MW in region '{}' exceeds its {} MW of generation",
                                 format_number(d.mw), reg.id, format_number(online)));
  if (d.time < 0.0 || d.time + 10.0 > cfg.horizon)
    throw InputError("contingency horizon must extend at least 10 s past the event");
  return integrate(dc, cfg, cfg.horizon, d.mw);
}

FrequencyMetrics compute_metrics(const FrequencyTrace &trace, const SimConfig &cfg) {
  const double dt = trace_dt(trace);
  const auto w = static_cast<std::size_t>(std::lround(cfg.rocof_window / dt));
  const std::size_t n = trace.samples();
  if (w < 1 || w >= n)
    throw InputError(fmt::format("trace of {} s is shorter than the {} s ROCOF window",
                                 format_number(trace.time.back() - trace.time.front()),
                                 format_number(cfg.rocof_window)));
  const auto &f = trace.average;
  const std::size_t e = std::min(event_index(trace), n - 1);

  FrequencyMetrics m;
  m.nadir = *std::min_element(f.begin() + static_cast<std::ptrdiff_t>(e), f.end());

  double steepest = 0.0;
  for (std::size_t i = e; i + w < n; ++i)
    steepest = std::max(steepest, std::abs(ls_slope(f, i, w, dt)));
  m.rocof = steepest * 1000.0;

  const double tail_start = trace.time.back() - cfg.settle_average;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (trace.time[i] >= tail_start - 1e-9) {
      sum += f[i];
      ++count;
    }
  m.settling_frequency = sum / static_cast<double>(count);

  m.settling_time = 0.0;
  for (std::size_t i = n; i-- > e;)
    if (std::abs(f[i] - m.settling_frequency) > cfg.settle_band) {
      double t = i + 1 < n ? trace.time[i + 1] : trace.time[i];
      m.settling_time = std::max(0.0, t - trace.event_time);
      break;
    }
  return m;
}

double initial_rocof(const FrequencyTrace &trace, double window) {
  const double dt = trace_dt(trace);
  const auto w = static_cast<std::size_t>(std::lround(window / dt));
  const std::size_t e = event_index(trace);
  if (w < 1 || e + w >= trace.samples())
    throw InputError("trace too short for the initial ROCOF window");
  return ls_slope(trace.average, e, w, dt);
}

bool SanityReport::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const SanityRow &r) { return r.pass; });
}

const SanityRow &SanityReport::row(const std::string &metric) const {
  for (const auto &r : rows)
    if (r.metric == metric)
      return r;
  throw std::out_of_range("no sanity row " + metric);
}

SanityReport compare_metrics(const FrequencyMetrics &a, const FrequencyMetrics &b,
                             const MetricTolerances &tol) {
  SanityReport rep;
  auto add = [&](const char *name, double x, double y, double t) {
    double mis = round_mismatch(x, y);
    rep.rows.push_back({name, x, y, mis, t, mis <= t});
  };
  add("nadir", a.nadir, b.nadir, tol.nadir);
  add("rocof", a.rocof, b.rocof, tol.rocof);
  add("settling_time", a.settling_time, b.settling_time, tol.settling_time);
  add("settling_frequency", a.settling_frequency, b.settling_frequency, tol.settling_frequency);
  return rep;
}

void write_trace_csv(const FrequencyTrace &trace, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw InputError(path.string(), 0, "cannot write file");
  out << "time";
  for (const auto &r : trace.regions)
    out << ",f_" << r;
  out << ",f_avg\n";
  for (std::size_t i = 0; i < trace.samples(); ++i) {
    out << fmt::format("{:.3f}", trace.time[i]);
    for (const auto &f : trace.freq)
      out << fmt::format(",{:.9f}", f[i]);
    out << fmt::format(",{:.9f}\n", trace.average[i]);
  }
}

void write_metrics_json(const FrequencyMetrics &m, const std::filesystem::path &path) {
  nlohmann::ordered_json j;
  j["nadir_hz"] = m.nadir;
  j["rocof_mhz_per_s"] = m.rocof;
  j["settling_time_s"] = m.settling_time;
  j["settling_frequency_hz"] = m.settling_frequency;
  std::ofstream out(path);
  if (!out)
    throw InputError(path.string(), 0, "cannot write file");
  out << j.dump(2) << '\n';
}

} // namespace pvgrid
