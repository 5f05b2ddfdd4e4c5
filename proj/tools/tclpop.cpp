#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "tclpop/acceptance.hpp"
#include "tclpop/errors.hpp"
#include "tclpop/fvm.hpp"
#include "tclpop/harness.hpp"
#include "tclpop/io.hpp"
#include "tclpop/mc.hpp"
#include "tclpop/version.hpp"

namespace {

using namespace tclpop;

struct CommonOpts {
    std::string scenario_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int cells = 0;
    int threads = 0;
};

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

std::string resolve_out(const CommonOpts& o, const Scenario& sc) {
    if (!o.out_dir.empty()) return o.out_dir;
    if (!sc.output_dir.empty()) return sc.output_dir;
    if (const char* env = std::getenv("TCLPOP_OUT"); env && *env) return env;
    return "results";
}

Scenario load_with_overrides(const CommonOpts& o) {
    Scenario sc = load_scenario(o.scenario_path);
    if (o.seed_set) sc.sim.master_seed = o.seed;
    if (o.cells > 0) sc.cells_per_band = o.cells;
    sc.validate();
    return sc;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_seed, bool with_cells) {
    cmd->add_option("--scenario", o.scenario_path, "scenario file")->required();
    cmd->add_option("--out", o.out_dir, "output directory (default: scenario, then $TCLPOP_OUT)");
    if (with_seed)
        cmd->add_option("--seed", o.seed, "master seed override")
            ->each([&o](const std::string&) { o.seed_set = true; });
    if (with_cells) cmd->add_option("--cells", o.cells, "cells per band override");
    cmd->add_option("--threads", o.threads, "worker thread count (default: all cores)");
}

nlohmann::json backend_manifest(const Scenario& sc, const HybridGrid& grid,
                                const std::vector<std::string>& files) {
    nlohmann::json m;
    m["version"] = kVersion;
    m["format_version"] = kFormatVersion;
    m["seed"] = sc.sim.master_seed;
    m["signal_checksum"] = sc.signal.checksum();
    m["signal_clamped"] = sc.signal_clamped;
    m["grid"] = io::grid_manifest(grid);
    m["files"] = files;
    m["scenario_origin"] = sc.origin;
    return m;
}

int cmd_simulate_mc(const CommonOpts& o) {
    apply_threads(o.threads);
    const Scenario sc = load_with_overrides(o);
    const HybridGrid grid = build_grid(sc.params, sc.pad_left, sc.pad_right, sc.cells_per_band);
    const BilinearModel model = assemble_operators(grid, sc.params);
    const PdfState stationary = stationary_state(model);
    const Ensemble ens0 = sample_ensemble(initial_condition_from_state(stationary, grid),
                                          sc.params, sc.sim.n_units, sc.sim.master_seed);
    const McRunResult run =
        simulate_population(sc.sim, sc.params, sc.signal, histogram_edges(grid), ens0);

    const std::string dir = resolve_out(o, sc);
    io::ensure_dir(dir);
    std::vector<PowerSample> per_unit = run.power;
    for (PowerSample& p : per_unit) p.power_w = sc.params.rated_power * p.on_fraction;
    io::write_power_series(dir + "/power_mc.txt", per_unit);

    std::vector<double> times;
    std::vector<std::vector<double>> f0, f1;
    for (const EmpiricalDensity& e : run.snapshots) {
        times.push_back(e.time);
        f0.push_back(e.f0);
        f1.push_back(e.f1);
    }
    const std::vector<double> edges = histogram_edges(grid);
    io::write_density_family(dir + "/density_mc_off.txt", edges, times, f0);
    io::write_density_family(dir + "/density_mc_on.txt", edges, times, f1);
    io::write_json(dir + "/manifest_mc.json",
                   backend_manifest(sc, grid,
                                    {"power_mc.txt", "density_mc_off.txt", "density_mc_on.txt"}));

    std::printf("monte carlo run complete: %d units, %.0f s horizon, %lld thermostat and %lld "
                "rate switches, %.1f s wall; results in %s\n",
                sc.sim.n_units, sc.sim.horizon, run.stats.thermostat_switches,
                run.stats.rate_switches, run.runtime_seconds, dir.c_str());
    return 0;
}

int cmd_simulate_pde(const CommonOpts& o) {
    apply_threads(o.threads);
    const Scenario sc = load_with_overrides(o);
    const HybridGrid grid = build_grid(sc.params, sc.pad_left, sc.pad_right, sc.cells_per_band);
    const BilinearModel model = assemble_operators(grid, sc.params);
    const PdfState stationary = stationary_state(model);

    std::vector<GriddedDensity> snaps;
    double mass_err = 0;
    const std::vector<PowerSample> series = fvm_power_series(
        model, stationary, sc.signal, sc.sim.horizon, sc.sim.snapshot_period, &snaps, &mass_err);

    const std::string dir = resolve_out(o, sc);
    io::ensure_dir(dir);
    io::write_power_series(dir + "/power_pde.txt", series);
    std::vector<double> times;
    std::vector<std::vector<double>> f0, f1;
    for (const GriddedDensity& g : snaps) {
        times.push_back(g.time);
        f0.push_back(g.f0);
        f1.push_back(g.f1);
    }
    const std::vector<double> edges = histogram_edges(grid);
    io::write_density_family(dir + "/density_pde_off.txt", edges, times, f0);
    io::write_density_family(dir + "/density_pde_on.txt", edges, times, f1);
    io::write_json(dir + "/manifest_pde.json",
                   backend_manifest(sc, grid,
                                    {"power_pde.txt", "density_pde_off.txt",
                                     "density_pde_on.txt"}));

    std::printf("solver run complete: %d cells per band, %zu broadcast intervals, max mass "
                "drift %.2e; results in %s\n",
                sc.cells_per_band, series.size() - 1, mass_err, dir.c_str());
    return 0;
}

int cmd_assemble(const CommonOpts& o) {
    const Scenario sc = load_with_overrides(o);
    const HybridGrid grid = build_grid(sc.params, sc.pad_left, sc.pad_right, sc.cells_per_band);
    const BilinearModel model = assemble_operators(grid, sc.params);

    const std::string dir = resolve_out(o, sc);
    io::ensure_dir(dir);
    io::write_coo(dir + "/A.txt", model.A);
    io::write_coo(dir + "/B0.txt", model.B0);
    io::write_coo(dir + "/B1.txt", model.B1);
    io::write_json(dir + "/grid.json", io::grid_manifest(grid));

    std::printf("operators written to %s: n=%d, nnz A=%ld B0=%ld B1=%ld\n", dir.c_str(),
                model.size(), static_cast<long>(model.A.nonZeros()),
                static_cast<long>(model.B0.nonZeros()), static_cast<long>(model.B1.nonZeros()));
    return 0;
}

int cmd_compare(const CommonOpts& o) {
    apply_threads(o.threads);
    Scenario sc = load_with_overrides(o);
    sc.output_dir = resolve_out(o, sc);
    const ComparisonReport r = run_comparison(sc);
    std::printf("comparison complete: relative power rmse %.4f (noise floor %.4f on-fraction), "
                "max band L1 %.4f, mass drift %.2e; report in %s\n",
                r.power_rel_rmse, r.noise_floor_on_fraction, r.l1_max, r.fvm_mass_error_max,
                sc.output_dir.c_str());
    return 0;
}

int cmd_oracle(const CommonOpts& o) {
    const Scenario sc = load_with_overrides(o);
    const LimitCycle lc = analytic_limit_cycle(sc.params);
    std::printf("t_off %.1f s\nt_on %.1f s\nduty %.6f\n", lc.t_off, lc.t_on, lc.duty);
    return 0;
}

int cmd_verify(int threads) {
    apply_threads(threads);
    const std::vector<CriterionResult> results = run_acceptance();
    const int failures = report_acceptance(results, std::cout);
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"population simulation and verification toolkit for thermostatically "
                 "controlled loads under broadcast switching-rate actuation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts mc_o, pde_o, asm_o, cmp_o, orc_o;
    int verify_threads = 0;

    CLI::App* c_mc = app.add_subcommand("simulate-mc", "run the Monte Carlo ensemble backend");
    add_common(c_mc, mc_o, true, true);
    CLI::App* c_pde = app.add_subcommand("simulate-pde", "run the density solver backend");
    add_common(c_pde, pde_o, false, true);
    CLI::App* c_asm = app.add_subcommand("assemble", "export the A, B0, B1 operators");
    add_common(c_asm, asm_o, false, true);
    CLI::App* c_cmp = app.add_subcommand("compare", "run both backends and the metric report");
    add_common(c_cmp, cmp_o, true, true);
    CLI::App* c_orc = app.add_subcommand("oracle", "print the noise-free limit-cycle oracle");
    c_orc->add_option("--scenario", orc_o.scenario_path, "scenario file")->required();
    CLI::App* c_ver = app.add_subcommand("verify", "run the acceptance suite");
    c_ver->add_option("--threads", verify_threads, "worker thread count (default: all cores)");

    try {
        app.parse(argc, argv);
        if (c_mc->parsed()) return cmd_simulate_mc(mc_o);
        if (c_pde->parsed()) return cmd_simulate_pde(pde_o);
        if (c_asm->parsed()) return cmd_assemble(asm_o);
        if (c_cmp->parsed()) return cmd_compare(cmp_o);
        if (c_orc->parsed()) return cmd_oracle(orc_o);
        if (c_ver->parsed()) return cmd_verify(verify_threads);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "scenario error: %s\n", e.what());
        return 3;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
