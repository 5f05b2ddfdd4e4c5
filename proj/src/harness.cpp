#include "tclpop/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "tclpop/config.hpp"
#include "tclpop/errors.hpp"
#include "tclpop/io.hpp"
#include "tclpop/metrics.hpp"
#include "tclpop/model.hpp"
#include "tclpop/version.hpp"

namespace tclpop {

namespace {

bool near_integer(double x, double tol = 1e-9) { return std::abs(x - std::round(x)) < tol; }

long long sample_count(double period, double horizon) {
    return std::max<long long>(1, static_cast<long long>(std::ceil(horizon / period - 1e-9)));
}

} // namespace

void Scenario::validate() const {
    params.validate();
    sim.validate();
    signal.validate();
    if (cells_per_band < 2)
        throw ScenarioError("fvm.cells_per_band must be at least 2");
    if (!(pad_left > 0) || !(pad_right > 0))
        throw ScenarioError("fvm pads must be positive");
    if (!near_integer(signal.period / sim.dt))
        throw ScenarioError("signal.period must be an integer multiple of sim.dt");
    if (sim.snapshot_period > 0 && !near_integer(sim.snapshot_period / sim.dt))
        throw ScenarioError("sim.snapshot_period must be an integer multiple of sim.dt");
}

ActuationSignal make_zero_signal(double period, double horizon) {
    ActuationSignal s = ActuationSignal::zero(period, static_cast<int>(sample_count(period, horizon)));
    s.validate();
    return s;
}

ActuationSignal make_pulse_signal(double period, double horizon, double start, double duration,
                                  double eps0, double eps1) {
    ActuationSignal s;
    s.period = period;
    const long long n = sample_count(period, horizon);
    s.samples.reserve(n);
    for (long long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * period;
        const bool in = t >= start && t < start + duration;
        s.samples.push_back(in ? std::make_pair(eps0, eps1) : std::make_pair(0.0, 0.0));
    }
    s.validate();
    return s;
}

ActuationSignal make_pulse_train(double period, double horizon, double start, double on_duration,
                                 double off_duration, double eps0, double eps1) {
    if (!(on_duration > 0) || !(off_duration > 0))
        throw ScenarioError("pulse train phases must be positive");
    ActuationSignal s;
    s.period = period;
    const long long n = sample_count(period, horizon);
    s.samples.reserve(n);
    for (long long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * period;
        if (t < start) {
            s.samples.emplace_back(0.0, 0.0);
            continue;
        }
        const double phase = std::fmod(t - start, on_duration + off_duration);
        if (phase < on_duration)
            s.samples.emplace_back(0.0, eps1); // push units on
        else
            s.samples.emplace_back(eps0, 0.0); // push them back off
    }
    s.validate();
    return s;
}

Scenario scenario_from_string(const std::string& text, const std::string& origin) {
    const KeyValueFile kv = KeyValueFile::parse_string(text, origin);

    Scenario sc;
    sc.origin = origin;
    sc.params.a = kv.get_double("params.a");
    sc.params.b0 = kv.get_double("params.b0");
    sc.params.b1 = kv.get_double("params.b1");
    sc.params.sigma = kv.get_double("params.sigma");
    sc.params.t_min = kv.get_double("params.t_min");
    sc.params.t_max = kv.get_double("params.t_max");
    sc.params.delta_t0 = kv.get_double("params.delta_t0", 0.5);
    sc.params.delta_t1 = kv.get_double("params.delta_t1", 0.5);
    sc.params.m0 = kv.get_double("params.m0", 300.0);
    sc.params.m1 = kv.get_double("params.m1", 300.0);
    sc.params.rated_power = kv.get_double("params.rated_power", 100.0);

    sc.sim.dt = kv.get_double("sim.dt", 1.0);
    sc.sim.horizon = kv.get_double("sim.horizon", 7200.0);
    sc.sim.n_units = static_cast<int>(kv.get_int("sim.units", 10000));
    sc.sim.master_seed = static_cast<std::uint64_t>(kv.get_int("sim.seed", 0x7c1d5eed));
    sc.sim.dwell_enabled = kv.get_bool("sim.dwell_enabled", false);
    sc.sim.record_events = kv.get_bool("sim.record_events", false);
    sc.sim.snapshot_period = kv.get_double("sim.snapshot_period", 60.0);

    sc.cells_per_band = static_cast<int>(kv.get_int("fvm.cells_per_band", 120));
    sc.pad_left = kv.get_double("fvm.pad_left", 1.0);
    sc.pad_right = kv.get_double("fvm.pad_right", 1.0);

    sc.output_dir = kv.get_string("output.dir", "");

    sc.signal_name = kv.get_string("signal.kind", "pulse");
    const double period = kv.get_double("signal.period", 60.0);
    if (sc.signal_name == "zero") {
        sc.signal = make_zero_signal(period, sc.sim.horizon);
    } else if (sc.signal_name == "pulse") {
        sc.signal = make_pulse_signal(period, sc.sim.horizon,
                                      kv.get_double("signal.pulse_start", 1800.0),
                                      kv.get_double("signal.pulse_duration", 600.0),
                                      kv.get_double("signal.eps0", 0.0),
                                      kv.get_double("signal.eps1", 0.01));
    } else if (sc.signal_name == "pulse_train") {
        sc.signal = make_pulse_train(period, sc.sim.horizon,
                                     kv.get_double("signal.train_start", 1800.0),
                                     kv.get_double("signal.train_on", 900.0),
                                     kv.get_double("signal.train_off", 900.0),
                                     kv.get_double("signal.eps0", 0.01),
                                     kv.get_double("signal.eps1", 0.01));
    } else if (sc.signal_name == "custom") {
        sc.signal.period = period;
        sc.signal.samples = kv.get_pair_list("signal.samples");
    } else {
        throw ScenarioError(origin + ": signal.kind must be one of zero, pulse, pulse_train, "
                                     "custom (got '" + sc.signal_name + "')");
    }

    const auto unknown = kv.unread_keys();
    if (!unknown.empty()) {
        std::string msg = origin + ": unknown key(s):";
        for (const std::string& k : unknown) msg += " " + k;
        throw ScenarioError(msg);
    }

    sc.signal_clamped =
        static_cast<double>(sc.signal.samples.size()) * sc.signal.period < sc.sim.horizon - 1e-9;
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    return scenario_from_string(io::read_text(path), path);
}

LimitCycle analytic_limit_cycle(const TclParams& p) {
    p.validate();
    if (p.a == 0)
        throw ScenarioError("limit cycle needs a nonzero drift coefficient a");
    const double eq0 = -p.b0 / p.a;
    const double eq1 = -p.b1 / p.a;
    char msg[160];
    if (!(eq0 > p.t_max)) {
        std::snprintf(msg, sizeof msg,
                      "no limit cycle: off-mode equilibrium %.4f never crosses t_max=%.4f", eq0,
                      p.t_max);
        throw ScenarioError(msg);
    }
    if (!(eq1 < p.t_min)) {
        std::snprintf(msg, sizeof msg,
                      "no limit cycle: on-mode equilibrium %.4f never crosses t_min=%.4f", eq1,
                      p.t_min);
        throw ScenarioError(msg);
    }
    LimitCycle lc;
    lc.t_off = std::log((p.t_max - eq0) / (p.t_min - eq0)) / p.a;
    lc.t_on = std::log((p.t_min - eq1) / (p.t_max - eq1)) / p.a;
    lc.duty = lc.t_on / (lc.t_on + lc.t_off);
    return lc;
}

namespace {

// Euler transit time from one deadband edge to the other in a fixed mode.
// The crossing is located inside its step by linear interpolation, so the
// result is free of the step-boundary latching bias of the live thermostat.
double transit_time(const TclParams& p, int mode, double from, double to, double dt) {
    double temp = from;
    double t = 0;
    const long long cap = 100000000;
    for (long long k = 0; k < cap; ++k) {
        const double next = temp + drift(p, mode, temp) * dt;
        const bool crossed = mode == 0 ? next >= to : next <= to;
        if (crossed) return t + dt * (to - temp) / (next - temp);
        temp = next;
        t += dt;
    }
    throw NumericalError("no thermostat limit cycle emerged within the step budget");
}

} // namespace

MeasuredCycle measure_limit_cycle(const TclParams& p, double dt) {
    TclParams q = p;
    q.sigma = 0;
    q.validate();
    if (!(dt > 0))
        throw ScenarioError("measure_limit_cycle needs a positive dt");

    MeasuredCycle mc;
    mc.t_off = transit_time(q, 0, q.t_min, q.t_max, dt);
    mc.t_on = transit_time(q, 1, q.t_max, q.t_min, dt);
    return mc;
}

InitialCondition initial_condition_from_state(const PdfState& state, const HybridGrid& grid) {
    if (state.F.size() != grid.size())
        throw ScenarioError("state size does not match the grid");
    InitialCondition init;
    init.edges = histogram_edges(grid);
    const int n_bins = static_cast<int>(init.edges.size()) - 1;
    init.mass0.assign(n_bins, 0.0);
    init.mass1.assign(n_bins, 0.0);

    const std::vector<int> cells0 = grid.mode_cells(0);
    for (std::size_t j = 0; j < cells0.size(); ++j)
        init.mass0[j] = std::max(0.0, state.F[cells0[j]]) * grid.width[cells0[j]];
    const std::vector<int> cells1 = grid.mode_cells(1);
    for (std::size_t j = 0; j < cells1.size(); ++j)
        init.mass1[grid.n_pad_left + j] = std::max(0.0, state.F[cells1[j]]) * grid.width[cells1[j]];
    return init;
}

std::vector<PowerSample> fvm_power_series(const BilinearModel& model, const PdfState& start,
                                          const ActuationSignal& signal, double horizon,
                                          double snapshot_period,
                                          std::vector<GriddedDensity>* snapshots,
                                          double* mass_error_max) {
    const double period = signal.period;
    const long long n_macro = std::llround(horizon / period);
    const long long snap_every =
        snapshot_period > 0 ? std::max<long long>(1, std::llround(snapshot_period / period)) : 0;

    std::vector<PowerSample> series;
    series.reserve(n_macro + 1);
    double mass_err = 0;

    PdfState state = start;
    state.time = 0;
    auto record = [&](const PdfState& st) {
        series.push_back({st.time, power_from_state(st, model.grid, model.params),
                          power_from_state(st, model.grid, model.params) / model.params.rated_power});
        mass_err = std::max(mass_err, std::abs(total_mass(st, model.grid) - 1.0));
    };
    record(state);
    if (snapshots && snap_every > 0) snapshots->push_back(density_on_grid(state, model.grid));

    for (long long k = 0; k < n_macro; ++k) {
        const auto eps = actuation_at(signal, static_cast<double>(k) * period);
        state = step(model, state, eps, period);
        record(state);
        if (snapshots && snap_every > 0 && (k + 1) % snap_every == 0)
            snapshots->push_back(density_on_grid(state, model.grid));
    }
    if (mass_error_max) *mass_error_max = mass_err;
    return series;
}

ComparisonReport run_comparison(const Scenario& sc) {
    sc.validate();
    if (!near_integer(sc.sim.horizon / sc.signal.period))
        throw ScenarioError("sim.horizon must be an integer multiple of signal.period");
    if (sc.sim.snapshot_period > 0 && !near_integer(sc.sim.snapshot_period / sc.signal.period))
        throw ScenarioError("sim.snapshot_period must be an integer multiple of signal.period");

    const HybridGrid grid = build_grid(sc.params, sc.pad_left, sc.pad_right, sc.cells_per_band);
    const BilinearModel model = assemble_operators(grid, sc.params);
    const PdfState stationary = stationary_state(model);

    const InitialCondition init = initial_condition_from_state(stationary, grid);
    const Ensemble ens0 = sample_ensemble(init, sc.params, sc.sim.n_units, sc.sim.master_seed);
    const std::vector<double> edges = histogram_edges(grid);

    const McRunResult mc = simulate_population(sc.sim, sc.params, sc.signal, edges, ens0);

    const auto wall0 = std::chrono::steady_clock::now();
    std::vector<GriddedDensity> fvm_snaps;
    double fvm_mass_err = 0;
    const std::vector<PowerSample> fvm_power =
        fvm_power_series(model, stationary, sc.signal, sc.sim.horizon, sc.sim.snapshot_period,
                         &fvm_snaps, &fvm_mass_err);
    const double fvm_runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

    ComparisonReport r;
    r.n_units = sc.sim.n_units;
    r.cells_per_band = sc.cells_per_band;
    r.signal_checksum = sc.signal.checksum();
    r.signal_clamped = sc.signal_clamped;
    r.mc_stats = mc.stats;
    r.mc_runtime_s = mc.runtime_seconds;
    r.fvm_runtime_s = fvm_runtime;
    r.fvm_mass_error_max = fvm_mass_err;
    r.stationary_power_w = power_from_state(stationary, grid, sc.params);
    try {
        r.duty_analytic = analytic_limit_cycle(sc.params).duty;
    } catch (const ScenarioError&) {
        // no noise-free cycle for these parameters; field stays NaN
    }

    // Power agreement on the broadcast grid, in per-unit watts.
    const long long stride = std::llround(sc.signal.period / sc.sim.dt);
    std::vector<double> mc_p, fvm_p;
    for (std::size_t k = 0; k < fvm_power.size(); ++k) {
        const std::size_t mc_idx = k * static_cast<std::size_t>(stride);
        if (mc_idx >= mc.power.size()) break;
        mc_p.push_back(sc.params.rated_power * mc.power[mc_idx].on_fraction);
        fvm_p.push_back(fvm_power[k].power_w);
    }
    r.power_rmse_w = rmse(mc_p, fvm_p);
    r.mean_mc_power_w = mean(mc_p);
    r.power_rel_rmse = r.mean_mc_power_w > 0 ? r.power_rmse_w / r.mean_mc_power_w : 0;
    const double p_on = r.stationary_power_w / sc.params.rated_power;
    r.noise_floor_on_fraction = std::sqrt(std::max(0.0, p_on * (1 - p_on)) / sc.sim.n_units);

    // Density agreement over the thermostat band: on the solver grid (the
    // histogram shares its edges, so no rebinning is needed there) and on
    // the coarser metric grid that suppresses per-bin sampling noise.
    const int n_metric = std::max(1, static_cast<int>(std::llround(
                                         (sc.params.t_max - sc.params.t_min) / 0.1)));
    const std::vector<double> metric_edges =
        uniform_edges(sc.params.t_min, sc.params.t_max, n_metric);
    r.metric_bin_width = (sc.params.t_max - sc.params.t_min) / n_metric;

    const std::size_t n_snap = std::min(mc.snapshots.size(), fvm_snaps.size());
    r.complete = !mc.snapshots.empty() && mc.snapshots.size() == fvm_snaps.size() &&
                 mc_p.size() == fvm_power.size() && mc_p.size() == fvm_p.size();
    const int band_begin = grid.n_pad_left;
    const std::vector<double> band = grid.band_edges();
    for (std::size_t s = 0; s < n_snap; ++s) {
        const EmpiricalDensity& em = mc.snapshots[s];
        const GriddedDensity& fd = fvm_snaps[s];
        if (std::abs(em.time - fd.time) > 1e-6)
            throw NumericalError("snapshot clocks of the two backends diverged");
        r.snapshot_times.push_back(em.time);
        r.mc_outside_mass_max = std::max(r.mc_outside_mass_max, em.outside_mass);

        std::vector<double> em0_band(em.f0.begin() + band_begin,
                                     em.f0.begin() + band_begin + grid.n_band);
        std::vector<double> em1_band(em.f1.begin() + band_begin,
                                     em.f1.begin() + band_begin + grid.n_band);
        std::vector<double> fd0_band(fd.f0.begin() + band_begin,
                                     fd.f0.begin() + band_begin + grid.n_band);
        std::vector<double> fd1_band(fd.f1.begin() + band_begin,
                                     fd.f1.begin() + band_begin + grid.n_band);

        r.l1_fine_mode0.push_back(l1_distance(band, em0_band, fd0_band));
        r.l1_fine_mode1.push_back(l1_distance(band, em1_band, fd1_band));

        const std::vector<double> a0 = rebin_density(band, em0_band, metric_edges);
        const std::vector<double> b0 = rebin_density(band, fd0_band, metric_edges);
        const std::vector<double> a1 = rebin_density(band, em1_band, metric_edges);
        const std::vector<double> b1 = rebin_density(band, fd1_band, metric_edges);
        r.l1_mode0.push_back(l1_distance(metric_edges, a0, b0));
        r.l1_mode1.push_back(l1_distance(metric_edges, a1, b1));
        r.l1_max = std::max({r.l1_max, r.l1_mode0.back(), r.l1_mode1.back()});
    }

    if (!sc.output_dir.empty())
        export_results(sc, r, mc.power, fvm_power, mc.snapshots, fvm_snaps, grid, sc.output_dir);
    return r;
}

namespace {

nlohmann::json scenario_echo(const Scenario& sc) {
    nlohmann::json j;
    j["params"] = {{"a", sc.params.a},
                   {"b0", sc.params.b0},
                   {"b1", sc.params.b1},
                   {"sigma", sc.params.sigma},
                   {"t_min", sc.params.t_min},
                   {"t_max", sc.params.t_max},
                   {"delta_t0", sc.params.delta_t0},
                   {"delta_t1", sc.params.delta_t1},
                   {"m0", sc.params.m0},
                   {"m1", sc.params.m1},
                   {"rated_power", sc.params.rated_power}};
    j["sim"] = {{"dt", sc.sim.dt},
                {"horizon", sc.sim.horizon},
                {"units", sc.sim.n_units},
                {"seed", sc.sim.master_seed},
                {"dwell_enabled", sc.sim.dwell_enabled},
                {"record_events", sc.sim.record_events},
                {"snapshot_period", sc.sim.snapshot_period}};
    j["fvm"] = {{"cells_per_band", sc.cells_per_band},
                {"pad_left", sc.pad_left},
                {"pad_right", sc.pad_right}};
    j["signal"] = {{"kind", sc.signal_name},
                   {"period", sc.signal.period},
                   {"samples", sc.signal.samples.size()},
                   {"checksum", sc.signal.checksum()},
                   {"clamped", sc.signal_clamped}};
    j["output_dir"] = sc.output_dir;
    j["origin"] = sc.origin;
    return j;
}

} // namespace

std::string report_to_json(const Scenario& sc, const ComparisonReport& r) {
    nlohmann::json j;
    j["scenario"] = scenario_echo(sc);
    j["version"] = kVersion;
    j["format_version"] = kFormatVersion;
    j["power"] = {{"rmse_w", r.power_rmse_w},
                  {"relative_rmse", r.power_rel_rmse},
                  {"mean_mc_power_w", r.mean_mc_power_w},
                  {"noise_floor_on_fraction", r.noise_floor_on_fraction}};
    j["density"] = {{"snapshot_times", r.snapshot_times},
                    {"l1_mode0", r.l1_mode0},
                    {"l1_mode1", r.l1_mode1},
                    {"l1_fine_mode0", r.l1_fine_mode0},
                    {"l1_fine_mode1", r.l1_fine_mode1},
                    {"l1_max", r.l1_max},
                    {"metric_bin_width_k", r.metric_bin_width}};
    j["conservation"] = {{"fvm_mass_error_max", r.fvm_mass_error_max},
                         {"mc_outside_mass_max", r.mc_outside_mass_max}};
    j["oracle"] = {{"duty_analytic", r.duty_analytic},
                   {"stationary_power_w", r.stationary_power_w}};
    j["mc_stats"] = {{"thermostat_switches", r.mc_stats.thermostat_switches},
                     {"rate_switches", r.mc_stats.rate_switches},
                     {"eligible_rate_trials", r.mc_stats.eligible_rate_trials},
                     {"locked_rate_suppressions", r.mc_stats.locked_rate_suppressions}};
    j["runtime"] = {{"mc_seconds", r.mc_runtime_s}, {"fvm_seconds", r.fvm_runtime_s}};
    j["signal_checksum"] = r.signal_checksum;
    j["complete"] = r.complete;
    if (std::isnan(r.duty_analytic)) j["oracle"]["duty_analytic"] = nullptr;
    return j.dump(2) + "\n";
}

void export_results(const Scenario& sc, const ComparisonReport& report,
                    const std::vector<PowerSample>& mc_power,
                    const std::vector<PowerSample>& fvm_power,
                    const std::vector<EmpiricalDensity>& mc_snapshots,
                    const std::vector<GriddedDensity>& fvm_snapshots, const HybridGrid& grid,
                    const std::string& dir) {
    io::ensure_dir(dir);
    const std::string base = dir + "/";

    // Both power files carry per-unit watts so they diff directly.
    std::vector<PowerSample> mc_per_unit = mc_power;
    for (PowerSample& p : mc_per_unit) p.power_w = sc.params.rated_power * p.on_fraction;
    io::write_power_series(base + "power_mc.txt", mc_per_unit);
    io::write_power_series(base + "power_pde.txt", fvm_power);

    const std::vector<double> edges = histogram_edges(grid);
    std::vector<double> times;
    std::vector<std::vector<double>> m0, m1, p0, p1;
    for (const EmpiricalDensity& e : mc_snapshots) {
        times.push_back(e.time);
        m0.push_back(e.f0);
        m1.push_back(e.f1);
    }
    std::vector<double> fvm_times;
    for (const GriddedDensity& g : fvm_snapshots) {
        fvm_times.push_back(g.time);
        p0.push_back(g.f0);
        p1.push_back(g.f1);
    }
    io::write_density_family(base + "density_mc_off.txt", edges, times, m0);
    io::write_density_family(base + "density_mc_on.txt", edges, times, m1);
    io::write_density_family(base + "density_pde_off.txt", edges, fvm_times, p0);
    io::write_density_family(base + "density_pde_on.txt", edges, fvm_times, p1);

    io::write_text(base + "report.json", report_to_json(sc, report));

    nlohmann::json manifest;
    manifest["scenario"] = scenario_echo(sc);
    manifest["version"] = kVersion;
    manifest["format_version"] = kFormatVersion;
    manifest["seed"] = sc.sim.master_seed;
    manifest["signal_checksum"] = sc.signal.checksum();
    manifest["grid"] = io::grid_manifest(grid);
    manifest["files"] = {"power_mc.txt",        "power_pde.txt",      "density_mc_off.txt",
                         "density_mc_on.txt",   "density_pde_off.txt", "density_pde_on.txt",
                         "report.json"};
    if (mc_snapshots.empty())
        manifest["notes"] = "no density snapshots were recorded for this run";
    io::write_json(base + "manifest.json", manifest);
}

} // namespace tclpop
