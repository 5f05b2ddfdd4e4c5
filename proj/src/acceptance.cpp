#include "tclpop/acceptance.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <ostream>

#include "tclpop/errors.hpp"
#include "tclpop/fvm.hpp"
#include "tclpop/harness.hpp"
#include "tclpop/mc.hpp"
#include "tclpop/metrics.hpp"

namespace tclpop {

namespace {

std::string strf(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

Scenario reference_scenario() {
    Scenario sc;
    sc.params = TclParams::fridge();
    sc.sim.dt = 1.0;
    sc.sim.horizon = 7200.0;
    sc.sim.n_units = 10000;
    sc.sim.master_seed = 0x7c1d5eed;
    sc.sim.snapshot_period = 60.0;
    sc.cells_per_band = 120;
    sc.pad_left = 1.0;
    sc.pad_right = 1.0;
    sc.signal_name = "pulse";
    sc.signal = make_pulse_signal(60.0, sc.sim.horizon, 1800.0, 600.0, 0.0, 0.01);
    return sc;
}

ActuationSignal constant_signal(double period, double horizon, double eps0, double eps1) {
    ActuationSignal s;
    s.period = period;
    const long long n = std::max<long long>(1, std::llround(horizon / period));
    s.samples.assign(n, {eps0, eps1});
    s.validate();
    return s;
}

CriterionResult check_power_agreement(const ComparisonReport& r) {
    CriterionResult c{1, "power-agreement", false, ""};
    const double limit = 0.05;
    c.pass = r.power_rel_rmse <= limit && r.complete;
    c.detail = strf("relative power rmse %.4f (limit %.2f); sampling-noise floor %.4f "
                    "on-fraction at %d units; runtimes mc %.1fs pde %.1fs",
                    r.power_rel_rmse, limit, r.noise_floor_on_fraction, r.n_units,
                    r.mc_runtime_s, r.fvm_runtime_s);
    return c;
}

CriterionResult check_density_agreement(const ComparisonReport& r) {
    CriterionResult c{2, "density-agreement", false, ""};
    const double limit = 0.1;
    double fine_max = 0;
    for (double v : r.l1_fine_mode0) fine_max = std::max(fine_max, v);
    for (double v : r.l1_fine_mode1) fine_max = std::max(fine_max, v);
    c.pass = !r.snapshot_times.empty() && r.l1_max <= limit;
    c.detail = strf("max per-mode L1 %.4f over %zu snapshots on the %.2f K comparison grid "
                    "(limit %.2f); on the raw %d-cell grid: %.4f",
                    r.l1_max, r.snapshot_times.size(), r.metric_bin_width, limit,
                    r.cells_per_band, fine_max);
    return c;
}

CriterionResult check_conservation(const ComparisonReport& r, const BilinearModel& model) {
    CriterionResult c{3, "conservation", false, ""};
    const double mass_limit = 1e-9, col_limit = 1e-12;

    double worst_a = 0; // |column sum| relative to column norm
    for (int j = 0; j < model.A.outerSize(); ++j) {
        double sum = 0, norm2 = 0;
        for (SparseOp::InnerIterator it(model.A, j); it; ++it) {
            sum += it.value();
            norm2 += it.value() * it.value();
        }
        const double norm = std::sqrt(norm2);
        if (norm > 0) worst_a = std::max(worst_a, std::abs(sum) / norm);
    }
    double worst_b = 0;
    for (const SparseOp* b : {&model.B0, &model.B1})
        for (int j = 0; j < b->outerSize(); ++j) {
            double sum = 0;
            for (SparseOp::InnerIterator it(*b, j); it; ++it) sum += it.value();
            worst_b = std::max(worst_b, std::abs(sum));
        }

    c.pass = r.fvm_mass_error_max <= mass_limit && worst_a <= col_limit && worst_b <= col_limit;
    c.detail = strf("mass drift %.2e over the run (limit %.0e); column sums: A %.2e relative, "
                    "B %.2e absolute (limit %.0e)",
                    r.fvm_mass_error_max, mass_limit, worst_a, worst_b, col_limit);
    return c;
}

CriterionResult check_duty_cycle(const Scenario& sc, const BilinearModel& model) {
    CriterionResult c{4, "duty-cycle-oracle", false, ""};
    const double dt = sc.sim.dt;
    const LimitCycle analytic = analytic_limit_cycle(sc.params);
    const MeasuredCycle measured = measure_limit_cycle(sc.params, dt);

    const double err_off = std::abs(measured.t_off - analytic.t_off);
    const double err_on = std::abs(measured.t_on - analytic.t_on);

    const PdfState stationary = stationary_state(model);
    const double p_inf = power_from_state(stationary, model.grid, model.params);
    const double p_duty = analytic.duty * model.params.rated_power;
    const double rel = std::abs(p_inf - p_duty) / p_duty;

    c.pass = err_off <= dt && err_on <= dt && rel <= 0.10;
    c.detail = strf("legs: off %.0f s vs %.2f s, on %.0f s vs %.2f s (tolerance %.0f s each); "
                    "stationary power %.3f W vs duty*r %.3f W (%.1f%%, limit 10%%)",
                    measured.t_off, analytic.t_off, measured.t_on, analytic.t_on, dt, p_inf,
                    p_duty, 100 * rel);
    return c;
}

CriterionResult check_rate_law(const TclParams& base) {
    CriterionResult c{5, "rate-law-statistics", false, ""};
    TclParams p = base;
    p.delta_t0 = 0;
    p.delta_t1 = 0; // the whole band is a safe zone

    SimConfig cfg;
    cfg.dt = 1.0;
    cfg.horizon = 600.0;
    cfg.n_units = 10000;
    cfg.master_seed = 0x51a7e5;
    cfg.snapshot_period = 0;

    const ActuationSignal sig = constant_signal(60.0, cfg.horizon, 0.0, 0.01);
    const HybridGrid grid = build_grid(p, 1.0, 1.0, 120);
    const BilinearModel model = assemble_operators(grid, p);
    const PdfState stationary = stationary_state(model);
    const Ensemble ens0 = sample_ensemble(initial_condition_from_state(stationary, grid), p,
                                          cfg.n_units, cfg.master_seed);
    const McRunResult run =
        simulate_population(cfg, p, sig, histogram_edges(grid), ens0);

    const long long eligible = run.stats.eligible_rate_trials;
    const long long hits = run.stats.rate_switches;
    const double p_exact = -std::expm1(-0.01 * cfg.dt);
    const double phat = eligible > 0 ? static_cast<double>(hits) / eligible : 0;
    const double se = std::sqrt(p_exact * (1 - p_exact) / std::max<long long>(1, eligible));

    c.pass = eligible >= 1000000 && std::abs(phat - p_exact) <= 3 * se;
    c.detail = strf("%lld switches over %lld eligible trials: rate %.7f vs exact %.7f "
                    "(|diff| %.2e, 3 std errors %.2e)",
                    hits, eligible, phat, p_exact, std::abs(phat - p_exact), 3 * se);
    return c;
}

CriterionResult check_zero_rate_reduction(const Scenario& ref, const BilinearModel& model) {
    CriterionResult c{6, "zero-rate-reduction", false, ""};

    SimConfig cfg;
    cfg.dt = 1.0;
    cfg.horizon = 1800.0;
    cfg.n_units = 2000;
    cfg.master_seed = 0xfeed5eed;
    cfg.snapshot_period = 0;

    const ActuationSignal zero = make_zero_signal(60.0, cfg.horizon);
    const HybridGrid& grid = model.grid;
    const PdfState stationary = stationary_state(model);
    const Ensemble ens0 = sample_ensemble(initial_condition_from_state(stationary, grid),
                                          ref.params, cfg.n_units, cfg.master_seed);

    SimConfig actuated = cfg;
    actuated.rate_switching_enabled = true;
    SimConfig unactuated = cfg;
    unactuated.rate_switching_enabled = false;
    const McRunResult run_a =
        simulate_population(actuated, ref.params, zero, histogram_edges(grid), ens0);
    const McRunResult run_u =
        simulate_population(unactuated, ref.params, zero, histogram_edges(grid), ens0);

    const Ensemble& ea = run_a.final_state;
    const Ensemble& eu = run_u.final_state;
    const bool mc_identical =
        ea.size() == eu.size() &&
        std::memcmp(ea.temp.data(), eu.temp.data(), ea.temp.size() * sizeof(double)) == 0 &&
        std::memcmp(ea.mode.data(), eu.mode.data(), ea.mode.size()) == 0 &&
        std::memcmp(ea.dwell.data(), eu.dwell.data(), ea.dwell.size() * sizeof(double)) == 0;

    PdfState state = stationary;
    const int n_macro = 120;
    for (int k = 0; k < n_macro; ++k) state = step(model, state, {0.0, 0.0}, 60.0);
    double l1 = 0;
    for (int j = 0; j < grid.size(); ++j)
        l1 += std::abs(state.F[j] - stationary.F[j]) * grid.width[j];

    c.pass = mc_identical && l1 <= 1e-9;
    c.detail = strf("actuated-with-zero-signal vs unactuated Monte Carlo states %s over %lld "
                    "unit-steps; solver drift from the stationary solution %.2e L1 over %d "
                    "broadcast intervals (limit 1e-9)",
                    mc_identical ? "bit-identical" : "DIFFER",
                    static_cast<long long>(cfg.n_units) * std::llround(cfg.horizon / cfg.dt), l1,
                    n_macro);
    return c;
}

CriterionResult check_dwell_gate(const TclParams& params) {
    CriterionResult c{7, "dwell-gate", false, ""};

    SimConfig cfg;
    cfg.dt = 1.0;
    cfg.horizon = 7200.0;
    cfg.n_units = 5000;
    cfg.master_seed = 0xd3e11;
    cfg.dwell_enabled = true;
    cfg.record_events = true;
    cfg.snapshot_period = 60.0;

    const ActuationSignal sig = constant_signal(60.0, cfg.horizon, 0.01, 0.01);
    const HybridGrid grid = build_grid(params, 1.0, 1.0, 120);
    const BilinearModel model = assemble_operators(grid, params);
    const PdfState stationary = stationary_state(model);
    const Ensemble ens0 = sample_ensemble(initial_condition_from_state(stationary, grid), params,
                                          cfg.n_units, cfg.master_seed);
    const McRunResult run =
        simulate_population(cfg, params, sig, histogram_edges(grid), ens0);

    long long violations = 0;
    long long rate_events = 0;
    for (const SwitchEvent& e : run.events) {
        if (e.kind != SwitchKind::Rate) continue;
        rate_events += 1;
        const double min_dwell = e.mode_from == 0 ? params.m0 : params.m1;
        if (e.dwell_before < min_dwell - 1e-9) violations += 1;
    }

    double worst_excess = 0;
    bool marginal_ok = !run.snapshots.empty() && !run.locked_snapshots.empty();
    if (marginal_ok) {
        const EmpiricalDensity& f = run.snapshots.back();
        const LockedDensityEstimate& l = run.locked_snapshots.back();
        for (int mode = 0; mode < 2; ++mode) {
            const std::vector<double> marg = l.marginal(mode);
            const std::vector<double>& full = mode == 0 ? f.f0 : f.f1;
            for (std::size_t j = 0; j < marg.size(); ++j) {
                const double excess = marg[j] - full[j];
                worst_excess = std::max(worst_excess, excess);
                if (excess > 1e-9) marginal_ok = false;
            }
        }
    }

    c.pass = violations == 0 && rate_events > 0 && marginal_ok;
    c.detail = strf("%lld rate switches, %lld below the minimum dwell (limit 0); "
                    "%lld suppressed by the gate; locked-marginal excess over the "
                    "full density %.2e (limit 1e-9)",
                    rate_events, violations, run.stats.locked_rate_suppressions, worst_excess);
    return c;
}

CriterionResult check_refinement(const TclParams& base) {
    CriterionResult c{8, "stationary-refinement", false, ""};
    TclParams p = base;
    p.delta_t0 = 0; // masks play no part in the stationary solve; freeing
    p.delta_t1 = 0; // them lets every cell count align
    const double pad = 0.99; // 33 cells at the coarsest level, so the three
                             // grids nest exactly

    auto solve = [&](int cells) {
        const HybridGrid g = build_grid(p, pad, pad, cells);
        const BilinearModel m = assemble_operators(g, p);
        const PdfState st = stationary_state(m);
        GriddedDensity d = density_on_grid(st, g);
        return d;
    };
    const GriddedDensity d100 = solve(100);
    const GriddedDensity d200 = solve(200);
    const GriddedDensity d400 = solve(400);

    auto self_diff = [](const GriddedDensity& coarse, const GriddedDensity& fine) {
        const std::vector<double> f0 = rebin_density(fine.edges, fine.f0, coarse.edges);
        const std::vector<double> f1 = rebin_density(fine.edges, fine.f1, coarse.edges);
        return l1_distance(coarse.edges, coarse.f0, f0) +
               l1_distance(coarse.edges, coarse.f1, f1);
    };
    const double d1 = self_diff(d100, d200);
    const double d2 = self_diff(d200, d400);

    c.pass = d2 > 0 && d1 / d2 >= 2.0;
    c.detail = strf("L1 self-difference %.3e at 100 vs 200 cells, %.3e at 200 vs 400: "
                    "ratio %.2f (limit >= 2)",
                    d1, d2, d2 > 0 ? d1 / d2 : 0.0);
    return c;
}

} // namespace

std::vector<CriterionResult> run_acceptance() {
    std::vector<CriterionResult> out;
    const Scenario ref = reference_scenario();

    BilinearModel model;
    try {
        const HybridGrid grid = build_grid(ref.params, ref.pad_left, ref.pad_right,
                                           ref.cells_per_band);
        model = assemble_operators(grid, ref.params);
    } catch (const std::exception& e) {
        for (int id = 1; id <= 8; ++id)
            out.push_back({id, "setup", false, std::string("setup failed: ") + e.what()});
        return out;
    }

    auto guarded = [&out](int id, const char* name, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({id, name, false, std::string("exception: ") + e.what()});
        }
    };

    ComparisonReport report;
    bool have_report = false;
    try {
        report = run_comparison(ref);
        have_report = true;
    } catch (const std::exception& e) {
        const std::string why = std::string("comparison run failed: ") + e.what();
        out.push_back({1, "power-agreement", false, why});
        out.push_back({2, "density-agreement", false, why});
        out.push_back({3, "conservation", false, why});
    }
    if (have_report) {
        guarded(1, "power-agreement", [&] { return check_power_agreement(report); });
        guarded(2, "density-agreement", [&] { return check_density_agreement(report); });
        guarded(3, "conservation", [&] { return check_conservation(report, model); });
    }
    guarded(4, "duty-cycle-oracle", [&] { return check_duty_cycle(ref, model); });
    guarded(5, "rate-law-statistics", [&] { return check_rate_law(ref.params); });
    guarded(6, "zero-rate-reduction", [&] { return check_zero_rate_reduction(ref, model); });
    guarded(7, "dwell-gate", [&] { return check_dwell_gate(ref.params); });
    guarded(8, "stationary-refinement", [&] { return check_refinement(ref.params); });
    return out;
}

int report_acceptance(const std::vector<CriterionResult>& results, std::ostream& os) {
    int failures = 0;
    for (const CriterionResult& r : results) {
        os << (r.pass ? "[PASS]" : "[FAIL]") << " criterion " << r.id << " " << r.name << ": "
           << r.detail << "\n";
        if (!r.pass) ++failures;
    }
    os << (failures == 0 ? "all criteria passed" : "criteria failed") << " ("
       << (results.size() - failures) << "/" << results.size() << ")\n";
    return failures;
}

} // namespace tclpop
