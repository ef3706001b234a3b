#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvgrid/config.hpp"
#include "pvgrid/scenario.hpp"

namespace pvgrid {

/// The integration produced a non-finite or runaway state.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string &what, long step) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

private:
  long step_;
};

enum class AverageWeighting { inertia, arithmetic };

struct Disturbance {
  std::size_t region = 0;
  double mw = 0.0;   // generation lost
  double time = 1.0; // s, snapped to the step grid
};

struct SimConfig {
  double dt = 0.005;
  double flat_horizon = 20.0;
  double horizon = 60.0;
  double ripple_tol = 0.001;   // Hz
  double settle_band = 0.005;  // Hz
  double rocof_window = 0.5;   // s
  double settle_average = 2.0; // s at the end of the trace
  double damping = 1.0;        // per unit power per per unit frequency
  double deadband = 0.0;       // Hz
  AverageWeighting weighting = AverageWeighting::inertia;
  Disturbance disturbance;

  /// Reads the `dynamics.*` keys; only the event time of the disturbance
  /// comes from the config.
  static SimConfig from_config(const Config &cfg);
};

struct FrequencyTrace {
  std::vector<std::string> regions;
  std::vector<double> time;                 // s
  std::vector<std::vector<double>> freq;    // [region][sample], Hz
  std::vector<std::vector<double>> angle;   // [region][sample], rad
  std::vector<double> average;              // Hz
  double event_time = 0.0;

  std::size_t samples() const { return time.size(); }
  /// Largest |f_r - f0| over all regions and samples.
  double max_deviation(double f0) const;
  /// Spread between the fastest and slowest region at the last sample.
  double final_spread() const;
};

struct FlatRunResult {
  FrequencyTrace trace;
  double max_deviation = 0.0;
  bool pass = false;
};

/// Integrates the case undisturbed for `cfg.flat_horizon` seconds.
FlatRunResult flat_run(const DynamicCase &dc, const SimConfig &cfg);

/// Per region one aggregate rotor (swing equation on the summed H*S) tied to
/// its neighbours by linearized stiffness, and per machine group a
/// first-order governor clamped to [0, online rating]. A group with
/// droop <= 0 holds its output. The disturbance steps down the tripped
/// region's generation at the event time.
FrequencyTrace simulate_contingency(const DynamicCase &dc, const SimConfig &cfg);

struct FrequencyMetrics {
  double nadir = 0.0;              // Hz
  double rocof = 0.0;              // mHz/s, magnitude
  double settling_time = 0.0;      // s after the event
  double settling_frequency = 0.0; // Hz
};

FrequencyMetrics compute_metrics(const FrequencyTrace &trace, const SimConfig &cfg);

/// Least-squares slope (Hz/s, signed) of the averaged frequency over
/// [event, event + window].
double initial_rocof(const FrequencyTrace &trace, double window);

struct MetricTolerances {
  double nadir = 0.005;
  double rocof = 0.5;
  double settling_time = 2.0;
  double settling_frequency = 0.005;
};

struct SanityRow {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double mismatch = 0.0; // |a - b| rounded to 1e-9
  double tol = 0.0;
  bool pass = false;
};

struct SanityReport {
  std::vector<SanityRow> rows;

  bool pass() const;
  const SanityRow &row(const std::string &metric) const;
};

SanityReport compare_metrics(const FrequencyMetrics &a, const FrequencyMetrics &b,
                             const MetricTolerances &tol = {});

/// Wide table: time, one column per region, then the average.
void write_trace_csv(const FrequencyTrace &trace, const std::filesystem::path &path);
void write_metrics_json(const FrequencyMetrics &m, const std::filesystem::path &path);

} // namespace pvgrid
