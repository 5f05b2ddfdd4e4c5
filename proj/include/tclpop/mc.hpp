#ifndef TCLPOP_MC_HPP
#define TCLPOP_MC_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tclpop/params.hpp"

namespace tclpop {

/// Knobs of one Monte Carlo run.
struct SimConfig {
    double dt = 1.0;       // SDE sample period tau_s [s]
    double horizon = 7200; // total simulated time [s]
    int n_units = 10000;
    std::uint64_t master_seed = 0x7c1d5eed;
    bool dwell_enabled = false;
    bool rate_switching_enabled = true; // off: the trial code path is never entered
    double snapshot_period = 60;        // density snapshot cadence [s]; 0 disables
    bool record_events = false;
    int locked_dwell_cells = 30; // dwell resolution of the locked-density estimate

    void validate() const;
};

/// Struct-of-arrays population state. Unit k's randomness is the
/// counter-based stream (master_seed, step, k), so there are no per-unit
/// generator objects to carry.
struct Ensemble {
    TclParams params;
    std::vector<double> temp;
    std::vector<std::uint8_t> mode;
    std::vector<double> dwell;
    std::uint64_t master_seed = 0;
    std::int64_t step_index = 0; // completed steps
    double clock = 0;            // [s]

    int size() const { return static_cast<int>(temp.size()); }
};

enum class SwitchKind : std::uint8_t { Thermostat = 0, Rate = 1 };

struct SwitchEvent {
    double time;
    std::uint32_t unit;
    SwitchKind kind;
    std::uint8_t mode_from;
    double dwell_before; // dwell clock the instant before the switch reset it
};

struct SwitchStats {
    long long thermostat_switches = 0;
    long long rate_switches = 0;
    long long eligible_rate_trials = 0;    // trial reached with a nonzero masked rate
    long long locked_rate_suppressions = 0; // trials blocked by the dwell gate
    double min_dwell_at_rate_switch = std::numeric_limits<double>::infinity();
};

/// Per-step feature flags (subset of SimConfig the kernels need).
struct StepFlags {
    double dt = 1.0;
    bool dwell_enabled = false;
    bool rate_switching_enabled = true;
};

/// What happened to one unit during one step.
struct StepOutcome {
    std::uint8_t switched = 0; // 0 none, 1 thermostat, 2 rate
    std::uint8_t eligible = 0; // rate trial ran with nonzero masked rate
    std::uint8_t locked = 0;   // rate trial suppressed by the dwell gate
    double dwell_before = 0;
};

/// Euler-Maruyama update of the continuous state at fixed mode; also
/// advances the dwell clock.
HybridState em_step(const HybridState& s, const TclParams& p, double dt, double gaussian_draw);

/// Bernoulli rate-switch trial with the exact exponential success
/// probability 1 - exp(-masked_rate * dt). Blocked while the dwell clock is
/// under the mode's minimum when the dwell feature is on.
bool rate_switch_trial(const HybridState& s, std::pair<double, double> eps, const TclParams& p,
                       double dt, double uniform_draw, bool dwell_enabled);

/// One full unit step: Euler-Maruyama, then thermostat, then (only when the
/// thermostat did not fire) the rate trial. Any switch resets the dwell
/// clock. Randomness comes from the (seed, step, unit) counter streams.
HybridState step_unit(const HybridState& s, const TclParams& p, std::pair<double, double> eps,
                      const StepFlags& flags, std::uint64_t seed, std::uint64_t step,
                      std::uint32_t unit, StepOutcome* outcome = nullptr);

/// Advance every unit one step. Returns the number of units in mode on.
/// The serial form is the reference; the parallel form partitions units
/// across OpenMP threads and produces bitwise-identical state because every
/// unit's randomness is counter-based and the on-count is an integer
/// reduction. `outcomes`, when given, must have ensemble size.
long step_ensemble_serial(Ensemble& e, std::pair<double, double> eps, const StepFlags& flags,
                          StepOutcome* outcomes = nullptr);
long step_ensemble_parallel(Ensemble& e, std::pair<double, double> eps, const StepFlags& flags,
                            StepOutcome* outcomes = nullptr);

/// Population power: total watts and on-fraction.
struct AggregatePower {
    double power_w = 0;
    double on_fraction = 0;
};
AggregatePower aggregate_power(const Ensemble& e);

struct PowerSample {
    double time;
    double power_w;
    double on_fraction;
};

/// Per-mode temperature histogram normalized as a density (1/K);
/// the two modes together integrate to one.
struct EmpiricalDensity {
    std::vector<double> edges; // shared temperature edges, size n+1
    std::vector<double> f0, f1;
    double time = 0;
    long long outside_low = 0, outside_high = 0; // units beyond the edge range
    double outside_mass = 0;                     // their probability mass

    double integral() const; // in-grid + outside mass
};

/// Histogram of the ensemble on the given edges. With allow_outside the
/// out-of-range units are tallied (and still counted in the normalization);
/// otherwise an out-of-range temperature is an error suggesting wider pads.
EmpiricalDensity empirical_pdf(const Ensemble& e, const std::vector<double>& edges,
                               bool allow_outside = false);

/// 2D (temperature x dwell) histogram over the units still inside their
/// minimum dwell, one sheet per mode; density units 1/(K*s).
struct LockedDensityEstimate {
    std::vector<double> temp_edges;
    std::vector<double> dwell_edges0, dwell_edges1; // [0, m0], [0, m1]
    std::vector<double> l0, l1;                     // row-major [temp][dwell]
    double time = 0;

    /// Temperature marginal (integral over dwell), density 1/K.
    std::vector<double> marginal(int mode) const;
};
LockedDensityEstimate empirical_locked_density(const Ensemble& e,
                                               const std::vector<double>& temp_edges,
                                               int dwell_cells);

/// Piecewise-uniform initial hybrid density to sample units from.
struct InitialCondition {
    std::vector<double> edges;         // shared temperature edges
    std::vector<double> mass0, mass1;  // per-cell probability mass, sums to 1
    double initial_dwell = std::numeric_limits<double>::infinity(); // clamped to max(m0,m1)
};

/// Deterministic inverse-CDF sampling of n units from the given density
/// (counter streams at step 0, so independent of the later trajectory draws).
Ensemble sample_ensemble(const InitialCondition& init, const TclParams& p, int n_units,
                         std::uint64_t master_seed);

/// All units at one identical state (deterministic scenarios, oracles).
Ensemble uniform_ensemble(const HybridState& s, const TclParams& p, int n_units,
                          std::uint64_t master_seed);

struct McRunResult {
    std::vector<PowerSample> power;          // every dt, including t = 0
    std::vector<EmpiricalDensity> snapshots; // every snapshot_period, including t = 0
    std::vector<LockedDensityEstimate> locked_snapshots; // only when dwell_enabled
    SwitchStats stats;
    std::vector<SwitchEvent> events; // only when record_events
    Ensemble final_state;
    double runtime_seconds = 0;
};

/// Full population run: steps every unit over the horizon, applying
/// actuation_at(signal, k*dt) during step k, and samples power/densities.
/// Bit-reproducible for a fixed master_seed at any thread count.
McRunResult simulate_population(const SimConfig& cfg, const TclParams& p,
                                const ActuationSignal& signal,
                                const std::vector<double>& density_edges,
                                const Ensemble& initial);

} // namespace tclpop

#endif
