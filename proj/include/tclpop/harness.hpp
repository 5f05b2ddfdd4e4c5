#ifndef TCLPOP_HARNESS_HPP
#define TCLPOP_HARNESS_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tclpop/fvm.hpp"
#include "tclpop/mc.hpp"
#include "tclpop/params.hpp"

namespace tclpop {

/// A full co-simulation setup: the physical population, the broadcast
/// signal, Monte Carlo settings, and the solver grid.
struct Scenario {
    TclParams params;
    ActuationSignal signal;
    SimConfig sim;
    int cells_per_band = 120;
    double pad_left = 1.0, pad_right = 1.0;
    std::string output_dir;
    std::string signal_name = "pulse";
    bool signal_clamped = false; // horizon extends past the last sample
    std::string origin;

    void validate() const;
};

/// Parses and validates a key-value scenario file; unknown keys are
/// rejected and every default is filled in so the result is self-contained.
Scenario load_scenario(const std::string& path);
Scenario scenario_from_string(const std::string& text, const std::string& origin = "<inline>");

/// The three shipped broadcast signals.
ActuationSignal make_zero_signal(double period, double horizon);
ActuationSignal make_pulse_signal(double period, double horizon, double start, double duration,
                                  double eps0, double eps1);
ActuationSignal make_pulse_train(double period, double horizon, double start, double on_duration,
                                 double off_duration, double eps0, double eps1);

/// Noise-free thermostat cycle of one unit: closed-form leg durations.
struct LimitCycle {
    double t_off = 0, t_on = 0, duty = 0;
};
LimitCycle analytic_limit_cycle(const TclParams& p);

/// The same legs measured by Euler-stepping a single noise-free unit from
/// threshold to threshold, locating each crossing inside its step by linear
/// interpolation; agreement is well within one sample period per leg.
struct MeasuredCycle {
    double t_off = 0, t_on = 0;
};
MeasuredCycle measure_limit_cycle(const TclParams& p, double dt);

/// Expands a stationary solver state into the sampling density for the
/// Monte Carlo initial ensemble.
InitialCondition initial_condition_from_state(const PdfState& state, const HybridGrid& grid);

/// Solver-side power trajectory on the broadcast time grid (per-unit watts).
std::vector<PowerSample> fvm_power_series(const BilinearModel& model, const PdfState& start,
                                          const ActuationSignal& signal, double horizon,
                                          double snapshot_period,
                                          std::vector<GriddedDensity>* snapshots = nullptr,
                                          double* mass_error_max = nullptr);

struct ComparisonReport {
    double power_rmse_w = 0;     // per-unit watts on the broadcast grid
    double power_rel_rmse = 0;   // relative to mean Monte Carlo power
    double mean_mc_power_w = 0;  // per-unit
    double noise_floor_on_fraction = 0;

    std::vector<double> snapshot_times;
    std::vector<double> l1_mode0, l1_mode1;           // metric-grid distances
    std::vector<double> l1_fine_mode0, l1_fine_mode1; // solver-grid distances
    double l1_max = 0;
    double metric_bin_width = 0.1; // kelvin

    double fvm_mass_error_max = 0;
    double mc_outside_mass_max = 0;
    double duty_analytic = std::numeric_limits<double>::quiet_NaN();
    double stationary_power_w = 0; // per-unit, from the stationary solve
    SwitchStats mc_stats;
    double mc_runtime_s = 0, fvm_runtime_s = 0;
    std::uint64_t signal_checksum = 0;
    bool signal_clamped = false;
    bool complete = false;
    int n_units = 0;
    int cells_per_band = 0;
};

/// Runs both backends from the matched stationary initial condition,
/// aligns them on the broadcast grid, computes all metrics, and (when the
/// scenario names an output directory) writes the full artifact set.
ComparisonReport run_comparison(const Scenario& sc);

/// Writes the artifact files for an already computed comparison.
void export_results(const Scenario& sc, const ComparisonReport& report,
                    const std::vector<PowerSample>& mc_power,
                    const std::vector<PowerSample>& fvm_power,
                    const std::vector<EmpiricalDensity>& mc_snapshots,
                    const std::vector<GriddedDensity>& fvm_snapshots, const HybridGrid& grid,
                    const std::string& dir);

/// Structured form of a report for the summary file.
std::string report_to_json(const Scenario& sc, const ComparisonReport& r);

} // namespace tclpop

#endif
