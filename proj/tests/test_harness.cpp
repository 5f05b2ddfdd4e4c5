#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "tclpop/config.hpp"
#include "tclpop/errors.hpp"
#include "tclpop/harness.hpp"
#include "tclpop/io.hpp"
#include "tclpop/metrics.hpp"

using namespace tclpop;
namespace fs = std::filesystem;

namespace {

const char* kFridgeScenario = R"(
# reference refrigerator population
params.a = -1.5247e-5
params.b0 = 3.6593e-4
params.b1 = -0.0026
params.sigma = 0.0065
params.t_min = 2
params.t_max = 5
)";

std::string small_comparison_scenario() {
    std::string s = kFridgeScenario;
    s += "sim.horizon = 600\n"
         "sim.units = 800\n"
         "sim.snapshot_period = 300\n"
         "fvm.cells_per_band = 60\n"
         "signal.pulse_start = 60\n"
         "signal.pulse_duration = 120\n"
         "signal.eps1 = 0.01\n";
    return s;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("tclpop_harness_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("key-value parsing") {
    KeyValueFile kv = KeyValueFile::parse_string("a.x = 1.5 # trailing comment\n"
                                                 "\n"
                                                 "# full comment line\n"
                                                 "a.y = hello\n"
                                                 "flag = on\n"
                                                 "n = 42\n"
                                                 "pairs = [0, 0.5] [1e-2, 2]\n");
    CHECK(kv.get_double("a.x") == 1.5);
    CHECK(kv.get_string("a.y", "") == "hello");
    CHECK(kv.get_bool("flag", false) == true);
    CHECK(kv.get_int("n", 0) == 42);
    auto pairs = kv.get_pair_list("pairs");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair{0.0, 0.5});
    CHECK(pairs[1] == std::pair{0.01, 2.0});
    CHECK(kv.unread_keys().empty());

    CHECK(kv.get_double("missing", 7.0) == 7.0);
    CHECK_THROWS_AS(kv.get_double("missing"), ScenarioError);

    CHECK_THROWS_AS(KeyValueFile::parse_string("a = 1\na = 2\n"), ScenarioError);
    CHECK_THROWS_AS(KeyValueFile::parse_string("just words\n"), ScenarioError);

    KeyValueFile bad = KeyValueFile::parse_string("n = 1.5\nb = maybe\np = [1]\n");
    CHECK_THROWS_AS(bad.get_int("n", 0), ScenarioError);
    CHECK_THROWS_AS(bad.get_bool("b", false), ScenarioError);
    CHECK_THROWS_AS(bad.get_pair_list("p"), ScenarioError);
}

TEST_CASE("unread keys are reported") {
    KeyValueFile kv = KeyValueFile::parse_string("used = 1\nunused = 2\n");
    CHECK(kv.get_double("used") == 1.0);
    auto stray = kv.unread_keys();
    REQUIRE(stray.size() == 1);
    CHECK(stray[0] == "unused");
}

TEST_CASE("scenario defaults fill in around the required physics") {
    Scenario sc = scenario_from_string(kFridgeScenario);
    TclParams ref = TclParams::fridge();

    CHECK(sc.params.a == ref.a);
    CHECK(sc.params.b0 == ref.b0);
    CHECK(sc.params.b1 == ref.b1);
    CHECK(sc.params.sigma == ref.sigma);
    CHECK(sc.params.delta_t0 == 0.5);
    CHECK(sc.params.delta_t1 == 0.5);
    CHECK(sc.params.m0 == 300.0);
    CHECK(sc.params.rated_power == 100.0);

    CHECK(sc.sim.dt == 1.0);
    CHECK(sc.sim.horizon == 7200.0);
    CHECK(sc.sim.n_units == 10000);
    CHECK(sc.sim.master_seed == 0x7c1d5eed);
    CHECK(sc.sim.dwell_enabled == false);
    CHECK(sc.sim.snapshot_period == 60.0);

    CHECK(sc.cells_per_band == 120);
    CHECK(sc.pad_left == 1.0);
    CHECK(sc.pad_right == 1.0);
    CHECK(sc.output_dir.empty());

    // default signal: a 10-minute rate pulse starting at half an hour
    CHECK(sc.signal_name == "pulse");
    CHECK(sc.signal.period == 60.0);
    REQUIRE(sc.signal.samples.size() == 120);
    CHECK(sc.signal.samples[29] == std::pair{0.0, 0.0});
    CHECK(sc.signal.samples[30] == std::pair{0.0, 0.01});
    CHECK(sc.signal.samples[39] == std::pair{0.0, 0.01});
    CHECK(sc.signal.samples[40] == std::pair{0.0, 0.0});
    CHECK(sc.signal_clamped == false);
}

TEST_CASE("scenario loading rejects broken input") {
    // missing required key
    CHECK_THROWS_AS(scenario_from_string("params.a = -1e-5\n"), ScenarioError);

    // unknown key is named in the error
    std::string with_typo = kFridgeScenario;
    with_typo += "sim.unitz = 100\n";
    CHECK_THROWS_WITH_AS(scenario_from_string(with_typo), doctest::Contains("sim.unitz"),
                         ScenarioError);

    // inverted band
    std::string inverted = "params.a = -1e-5\nparams.b0 = 1e-4\nparams.b1 = -1e-3\n"
                           "params.sigma = 0.01\nparams.t_min = 5\nparams.t_max = 2\n";
    CHECK_THROWS_AS(scenario_from_string(inverted), ScenarioError);

    // unknown signal kind
    std::string bad_kind = kFridgeScenario;
    bad_kind += "signal.kind = sawtooth\n";
    CHECK_THROWS_WITH_AS(scenario_from_string(bad_kind), doctest::Contains("sawtooth"),
                         ScenarioError);

    // negative rate in a custom signal
    std::string neg = kFridgeScenario;
    neg += "signal.kind = custom\nsignal.samples = [0, -0.01]\n";
    CHECK_THROWS_AS(scenario_from_string(neg), ScenarioError);

    // broadcast period must sit on the sample grid
    std::string off_grid = kFridgeScenario;
    off_grid += "sim.dt = 2\nsignal.period = 45\n";
    CHECK_THROWS_AS(scenario_from_string(off_grid), ScenarioError);
}

TEST_CASE("custom signals mark clamping when the horizon outruns them") {
    std::string custom = kFridgeScenario;
    custom += "signal.kind = custom\nsignal.samples = [0, 0.01] [0.02, 0]\n";
    Scenario sc = scenario_from_string(custom);
    CHECK(sc.signal.samples.size() == 2);
    CHECK(sc.signal_clamped == true); // 2 minutes of signal, 2 hours of horizon

    Scenario full = scenario_from_string(kFridgeScenario);
    CHECK(full.signal_clamped == false);
}

TEST_CASE("shipped signal builders") {
    ActuationSignal z = make_zero_signal(60, 7200);
    CHECK(z.samples.size() == 120);
    for (const auto& [e0, e1] : z.samples) {
        CHECK(e0 == 0.0);
        CHECK(e1 == 0.0);
    }

    ActuationSignal train = make_pulse_train(60, 7200, 1800, 900, 900, 0.02, 0.01);
    REQUIRE(train.samples.size() == 120);
    CHECK(train.samples[29] == std::pair{0.0, 0.0});  // before start
    CHECK(train.samples[30] == std::pair{0.0, 0.01}); // on phase pushes up
    CHECK(train.samples[44] == std::pair{0.0, 0.01});
    CHECK(train.samples[45] == std::pair{0.02, 0.0}); // off phase pushes down
    CHECK(train.samples[59] == std::pair{0.02, 0.0});
    CHECK(train.samples[60] == std::pair{0.0, 0.01}); // next cycle

    CHECK_THROWS_AS(make_pulse_train(60, 7200, 0, 0, 900, 0.01, 0.01), ScenarioError);
}

TEST_CASE("analytic limit cycle of the reference refrigerator") {
    LimitCycle lc = analytic_limit_cycle(TclParams::fridge());
    // frozen closed-form leg durations of the noise-free thermostat cycle
    CHECK(lc.t_off == doctest::Approx(9615.2).epsilon(1e-3));
    CHECK(lc.t_on == doctest::Approx(1130.6).epsilon(1e-3));
    CHECK(lc.duty == doctest::Approx(0.10521).epsilon(1e-3));
    CHECK(lc.duty == doctest::Approx(lc.t_on / (lc.t_on + lc.t_off)));
}

TEST_CASE("limit cycle rejections") {
    TclParams p = TclParams::fridge();
    p.a = 0;
    CHECK_THROWS_AS(analytic_limit_cycle(p), ScenarioError);

    p = TclParams::fridge();
    p.b0 = -p.a * 4.0; // off equilibrium at 4 degC, below t_max
    CHECK_THROWS_WITH_AS(analytic_limit_cycle(p), doctest::Contains("never crosses"),
                         ScenarioError);

    p = TclParams::fridge();
    p.b1 = -p.a * 3.0; // on equilibrium inside the band
    CHECK_THROWS_AS(analytic_limit_cycle(p), ScenarioError);
}

TEST_CASE("measured cycle matches the closed form within the sample period") {
    TclParams p = TclParams::fridge();
    LimitCycle lc = analytic_limit_cycle(p);
    MeasuredCycle mc = measure_limit_cycle(p, 1.0);
    CHECK(std::abs(mc.t_off - lc.t_off) <= 0.5);
    CHECK(std::abs(mc.t_on - lc.t_on) <= 0.5);
    CHECK_THROWS_AS(measure_limit_cycle(p, 0.0), ScenarioError);
}

TEST_CASE("initial condition from the stationary state") {
    Scenario sc = scenario_from_string(kFridgeScenario);
    HybridGrid grid = build_grid(sc.params, sc.pad_left, sc.pad_right, 60);
    BilinearModel model = assemble_operators(grid, sc.params);
    PdfState st = stationary_state(model);

    InitialCondition init = initial_condition_from_state(st, grid);
    CHECK(init.edges == histogram_edges(grid));

    double total = 0;
    for (double m : init.mass0) {
        CHECK(m >= 0);
        total += m;
    }
    for (double m : init.mass1) {
        CHECK(m >= 0);
        total += m;
    }
    // clamping the solver's small negative cells can only add mass, and the
    // sampler normalizes, so near-one is all that matters here
    CHECK(total == doctest::Approx(1.0).epsilon(2e-3));

    // mode 0 has no mass in the upper pad, mode 1 none in the lower pad
    for (std::size_t j = init.mass0.size() - grid.n_pad_right; j < init.mass0.size(); ++j)
        CHECK(init.mass0[j] == 0.0);
    for (int j = 0; j < grid.n_pad_left; ++j) CHECK(init.mass1[j] == 0.0);
}

TEST_CASE("solver power series is flat on the stationary state") {
    Scenario sc = scenario_from_string(kFridgeScenario);
    HybridGrid grid = build_grid(sc.params, 1.0, 1.0, 60);
    BilinearModel model = assemble_operators(grid, sc.params);
    PdfState st = stationary_state(model);
    const double p0 = power_from_state(st, grid, sc.params);

    std::vector<GriddedDensity> snaps;
    double mass_err = 0;
    ActuationSignal zero = make_zero_signal(60, 600);
    auto series = fvm_power_series(model, st, zero, 600, 300, &snaps, &mass_err);

    REQUIRE(series.size() == 11);
    CHECK(series.front().time == 0.0);
    CHECK(series.back().time == doctest::Approx(600.0));
    for (const PowerSample& s : series) {
        CHECK(s.power_w == doctest::Approx(p0).epsilon(1e-7));
        CHECK(s.on_fraction == doctest::Approx(p0 / sc.params.rated_power).epsilon(1e-7));
    }
    CHECK(mass_err <= 1e-12);
    CHECK(snaps.size() == 3); // t = 0, 300, 600
    CHECK(snaps[1].time == doctest::Approx(300.0));
}

TEST_CASE("run_comparison on a small population") {
    Scenario sc = scenario_from_string(small_comparison_scenario());
    ComparisonReport r = run_comparison(sc);

    CHECK(r.complete);
    CHECK(r.n_units == 800);
    CHECK(r.cells_per_band == 60);
    REQUIRE(r.snapshot_times.size() == 3);
    CHECK(r.snapshot_times[0] == 0.0);
    CHECK(r.snapshot_times[2] == doctest::Approx(600.0));

    // per-unit power scale: around a tenth of rated power
    CHECK(r.mean_mc_power_w > 2.0);
    CHECK(r.mean_mc_power_w < 50.0);
    CHECK(r.power_rmse_w >= 0.0);
    CHECK(r.power_rel_rmse < 0.25); // small N, generous bound
    CHECK(r.noise_floor_on_fraction > 0.0);

    REQUIRE(r.l1_mode0.size() == 3);
    REQUIRE(r.l1_fine_mode0.size() == 3);
    for (std::size_t s = 0; s < 3; ++s) {
        CHECK(r.l1_mode0[s] >= 0.0);
        CHECK(r.l1_mode0[s] < 0.5);
        CHECK(r.l1_mode1[s] < 0.5);
        // the metric grid never reads above the solver grid by much; it
        // only merges bins, which can only cancel noise
        CHECK(r.l1_mode0[s] <= r.l1_fine_mode0[s] + 1e-12);
        CHECK(r.l1_mode1[s] <= r.l1_fine_mode1[s] + 1e-12);
    }
    CHECK(r.l1_max == doctest::Approx(std::max(
                          *std::max_element(r.l1_mode0.begin(), r.l1_mode0.end()),
                          *std::max_element(r.l1_mode1.begin(), r.l1_mode1.end()))));
    CHECK(r.metric_bin_width == doctest::Approx(0.1));

    CHECK(r.fvm_mass_error_max <= 1e-9);
    CHECK(r.mc_outside_mass_max <= 0.01);
    CHECK(r.duty_analytic == doctest::Approx(0.10521).epsilon(1e-3));
    CHECK(r.stationary_power_w == doctest::Approx(10.5).epsilon(0.15));
    CHECK(r.signal_checksum == sc.signal.checksum());
    CHECK(r.mc_stats.thermostat_switches > 0);
    CHECK(r.mc_stats.eligible_rate_trials > 0);
}

TEST_CASE("run_comparison rejects a horizon off the broadcast grid") {
    std::string text = kFridgeScenario;
    text += "sim.horizon = 90\n";
    Scenario sc = scenario_from_string(text);
    CHECK_THROWS_AS(run_comparison(sc), ScenarioError);
}

TEST_CASE("comparison artifacts are written and reproducible") {
    TempDir dir;
    Scenario sc = scenario_from_string(small_comparison_scenario());
    sc.output_dir = (dir.path / "out").string();

    ComparisonReport r1 = run_comparison(sc);
    for (const char* name :
         {"power_mc.txt", "power_pde.txt", "density_mc_off.txt", "density_mc_on.txt",
          "density_pde_off.txt", "density_pde_on.txt", "report.json", "manifest.json"}) {
        CAPTURE(name);
        CHECK(fs::exists(dir.path / "out" / name));
    }

    const std::string power_mc = io::read_text((dir.path / "out" / "power_mc.txt").string());
    const std::string density = io::read_text((dir.path / "out" / "density_pde_on.txt").string());
    const std::string report1 = io::read_text((dir.path / "out" / "report.json").string());

    // a rerun with the same seed reproduces the data artifacts bytewise
    ComparisonReport r2 = run_comparison(sc);
    CHECK(io::read_text((dir.path / "out" / "power_mc.txt").string()) == power_mc);
    CHECK(io::read_text((dir.path / "out" / "density_pde_on.txt").string()) == density);
    CHECK(r1.power_rmse_w == r2.power_rmse_w);
    CHECK(r1.l1_max == r2.l1_max);

    // the reports agree on everything except wall-clock timings
    nlohmann::json j1 = nlohmann::json::parse(report1);
    nlohmann::json j2 =
        nlohmann::json::parse(io::read_text((dir.path / "out" / "report.json").string()));
    CHECK(j1["power"] == j2["power"]);
    CHECK(j1["density"] == j2["density"]);
    CHECK(j1["mc_stats"] == j2["mc_stats"]);
    CHECK(j1["scenario"] == j2["scenario"]);
    CHECK(j1["complete"] == true);

    // the first power row is the shared stationary initial condition
    nlohmann::json jr = j1;
    const double stat_w = jr["oracle"]["stationary_power_w"].get<double>();
    CHECK(power_mc.find("# time_s") == 0);
    const double duty = jr["oracle"]["duty_analytic"].get<double>();
    CHECK(stat_w == doctest::Approx(duty * 100.0).epsilon(0.1));
}

TEST_CASE("scenario validation guards the time grids") {
    Scenario sc = scenario_from_string(kFridgeScenario);
    sc.sim.snapshot_period = 90.5;
    CHECK_THROWS_AS(sc.validate(), ScenarioError);

    sc = scenario_from_string(kFridgeScenario);
    sc.cells_per_band = 1;
    CHECK_THROWS_AS(sc.validate(), ScenarioError);

    sc = scenario_from_string(kFridgeScenario);
    sc.pad_left = 0.0;
    CHECK_THROWS_AS(sc.validate(), ScenarioError);
}

TEST_CASE("load_scenario reads from disk") {
    TempDir dir;
    const std::string path = (dir.path / "fridge.cfg").string();
    io::write_text(path, kFridgeScenario);
    Scenario sc = load_scenario(path);
    CHECK(sc.origin == path);
    CHECK(sc.params.t_min == 2.0);
    CHECK_THROWS_AS(load_scenario((dir.path / "absent.cfg").string()), ScenarioError);
}
