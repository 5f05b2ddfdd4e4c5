#include "tclpop/mc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "tclpop/errors.hpp"
#include "tclpop/model.hpp"
#include "tclpop/rng.hpp"

namespace tclpop {

void SimConfig::validate() const {
    if (!(dt > 0) || !std::isfinite(dt))
        throw ScenarioError("SimConfig.dt must be positive and finite");
    if (!(horizon >= 0) || !std::isfinite(horizon))
        throw ScenarioError("SimConfig.horizon must be nonnegative and finite");
    if (n_units <= 0)
        throw ScenarioError("SimConfig.n_units must be positive");
    if (!(snapshot_period >= 0) || !std::isfinite(snapshot_period))
        throw ScenarioError("SimConfig.snapshot_period must be nonnegative and finite");
    if (locked_dwell_cells <= 0)
        throw ScenarioError("SimConfig.locked_dwell_cells must be positive");
}

HybridState em_step(const HybridState& s, const TclParams& p, double dt, double gaussian_draw) {
    HybridState out = s;
    out.temp = s.temp + drift(p, s.mode, s.temp) * dt
             + diffusion(p, s.mode, s.temp) * std::sqrt(dt) * gaussian_draw;
    out.dwell = s.dwell + dt;
    return out;
}

namespace {

enum class TrialGate { NoRate, Locked, Armed };

double min_dwell_for(const TclParams& p, int mode) { return mode == 0 ? p.m0 : p.m1; }

TrialGate classify_trial(const HybridState& s, std::pair<double, double> eps, const TclParams& p,
                         bool dwell_enabled, double* rate_out) {
    const SwitchDirection dir = s.mode == 0 ? SwitchDirection::On : SwitchDirection::Off;
    const double eps_dir = s.mode == 0 ? eps.second : eps.first;
    const double rate = masked_rate(eps_dir, s.temp, dir, p);
    if (rate_out) *rate_out = rate;
    if (!(rate > 0)) return TrialGate::NoRate;
    if (dwell_enabled && s.dwell < min_dwell_for(p, s.mode)) return TrialGate::Locked;
    return TrialGate::Armed;
}

} // namespace

bool rate_switch_trial(const HybridState& s, std::pair<double, double> eps, const TclParams& p,
                       double dt, double uniform_draw, bool dwell_enabled) {
    double rate = 0;
    if (classify_trial(s, eps, p, dwell_enabled, &rate) != TrialGate::Armed) return false;
    return uniform_draw < -std::expm1(-rate * dt);
}

HybridState step_unit(const HybridState& s, const TclParams& p, std::pair<double, double> eps,
                      const StepFlags& flags, std::uint64_t seed, std::uint64_t step,
                      std::uint32_t unit, StepOutcome* outcome) {
    if (outcome) *outcome = StepOutcome{};

    const double g = rng::gaussian(seed, step, unit, rng::kLaneGaussian);
    HybridState st = em_step(s, p, flags.dt, g);

    const int thermo_mode = thermostat_transition(st, p);
    if (thermo_mode != st.mode) {
        if (outcome) {
            outcome->switched = 1;
            outcome->dwell_before = st.dwell;
        }
        st.mode = thermo_mode;
        st.dwell = 0;
        return st;
    }

    if (flags.rate_switching_enabled) {
        double rate = 0;
        switch (classify_trial(st, eps, p, flags.dwell_enabled, &rate)) {
        case TrialGate::NoRate:
            break;
        case TrialGate::Locked:
            if (outcome) outcome->locked = 1;
            break;
        case TrialGate::Armed: {
            if (outcome) outcome->eligible = 1;
            const double u = rng::uniform(seed, step, unit, rng::kLaneSwitchTrial);
            if (rate_switch_trial(st, eps, p, flags.dt, u, flags.dwell_enabled)) {
                if (outcome) {
                    outcome->switched = 2;
                    outcome->dwell_before = st.dwell;
                }
                st.mode = 1 - st.mode;
                st.dwell = 0;
            }
            break;
        }
        }
    }
    return st;
}

namespace {

template <bool Parallel>
long step_ensemble_impl(Ensemble& e, std::pair<double, double> eps, const StepFlags& flags,
                        StepOutcome* outcomes) {
    const int n = e.size();
    const std::uint64_t step = static_cast<std::uint64_t>(e.step_index);
    long on = 0;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : on) if (Parallel)
#endif
    for (int k = 0; k < n; ++k) {
        HybridState s{e.temp[k], e.mode[k], e.dwell[k]};
        StepOutcome* o = outcomes ? &outcomes[k] : nullptr;
        s = step_unit(s, e.params, eps, flags, e.master_seed, step,
                      static_cast<std::uint32_t>(k), o);
        e.temp[k] = s.temp;
        e.mode[k] = static_cast<std::uint8_t>(s.mode);
        e.dwell[k] = s.dwell;
        on += s.mode;
    }

    e.step_index += 1;
    e.clock = static_cast<double>(e.step_index) * flags.dt;
    return on;
}

} // namespace

long step_ensemble_serial(Ensemble& e, std::pair<double, double> eps, const StepFlags& flags,
                          StepOutcome* outcomes) {
    return step_ensemble_impl<false>(e, eps, flags, outcomes);
}

long step_ensemble_parallel(Ensemble& e, std::pair<double, double> eps, const StepFlags& flags,
                            StepOutcome* outcomes) {
    return step_ensemble_impl<true>(e, eps, flags, outcomes);
}

AggregatePower aggregate_power(const Ensemble& e) {
    long on = 0;
    for (std::uint8_t m : e.mode) on += m;
    AggregatePower out;
    out.power_w = static_cast<double>(on) * e.params.rated_power;
    out.on_fraction = e.size() > 0 ? static_cast<double>(on) / e.size() : 0;
    return out;
}

double EmpiricalDensity::integral() const {
    double total = outside_mass;
    for (std::size_t j = 0; j + 1 < edges.size(); ++j)
        total += (f0[j] + f1[j]) * (edges[j + 1] - edges[j]);
    return total;
}

EmpiricalDensity empirical_pdf(const Ensemble& e, const std::vector<double>& edges,
                               bool allow_outside) {
    if (edges.size() < 2)
        throw ScenarioError("histogram needs at least two temperature edges");
    const int n_bins = static_cast<int>(edges.size()) - 1;
    const int n = e.size();

    std::vector<long long> c0(n_bins, 0), c1(n_bins, 0);
    long long lo = 0, hi = 0;
    for (int k = 0; k < n; ++k) {
        const double t = e.temp[k];
        int j;
        if (t < edges.front()) {
            j = -1;
        } else if (t > edges.back()) {
            j = n_bins;
        } else {
            j = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), t) - edges.begin()) - 1;
            if (j == n_bins) j = n_bins - 1; // exactly at the last edge
        }
        if (j < 0 || j >= n_bins) {
            if (!allow_outside) {
                char msg[192];
                std::snprintf(msg, sizeof msg,
                              "unit %d at %.6f degC lies outside the histogram range "
                              "[%.6f, %.6f]; widen the grid pads",
                              k, t, edges.front(), edges.back());
                throw ScenarioError(msg);
            }
            (j < 0 ? lo : hi) += 1;
            continue;
        }
        (e.mode[k] ? c1 : c0)[j] += 1;
    }

    EmpiricalDensity out;
    out.edges = edges;
    out.f0.resize(n_bins);
    out.f1.resize(n_bins);
    out.time = e.clock;
    out.outside_low = lo;
    out.outside_high = hi;
    out.outside_mass = n > 0 ? static_cast<double>(lo + hi) / n : 0;
    for (int j = 0; j < n_bins; ++j) {
        const double w = edges[j + 1] - edges[j];
        out.f0[j] = n > 0 ? static_cast<double>(c0[j]) / (n * w) : 0;
        out.f1[j] = n > 0 ? static_cast<double>(c1[j]) / (n * w) : 0;
    }
    return out;
}

std::vector<double> LockedDensityEstimate::marginal(int mode) const {
    const std::vector<double>& sheet = mode == 0 ? l0 : l1;
    const std::vector<double>& dw = mode == 0 ? dwell_edges0 : dwell_edges1;
    const int nt = static_cast<int>(temp_edges.size()) - 1;
    const int nd = static_cast<int>(dw.size()) - 1;
    std::vector<double> out(nt, 0.0);
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nd; ++j)
            out[i] += sheet[i * nd + j] * (dw[j + 1] - dw[j]);
    return out;
}

LockedDensityEstimate empirical_locked_density(const Ensemble& e,
                                               const std::vector<double>& temp_edges,
                                               int dwell_cells) {
    if (temp_edges.size() < 2)
        throw ScenarioError("locked-density estimate needs at least two temperature edges");
    if (dwell_cells <= 0)
        throw ScenarioError("locked-density estimate needs a positive dwell cell count");

    const int nt = static_cast<int>(temp_edges.size()) - 1;
    const int nd = dwell_cells;
    LockedDensityEstimate out;
    out.temp_edges = temp_edges;
    out.time = e.clock;

    auto linspace = [nd](double hi) {
        std::vector<double> v(nd + 1);
        for (int j = 0; j <= nd; ++j) v[j] = hi * j / nd;
        return v;
    };
    const double span0 = e.params.m0 > 0 ? e.params.m0 : 1.0;
    const double span1 = e.params.m1 > 0 ? e.params.m1 : 1.0;
    out.dwell_edges0 = linspace(span0);
    out.dwell_edges1 = linspace(span1);
    out.l0.assign(static_cast<std::size_t>(nt) * nd, 0.0);
    out.l1.assign(static_cast<std::size_t>(nt) * nd, 0.0);

    const int n = e.size();
    if (n == 0) return out;

    for (int k = 0; k < n; ++k) {
        const int mode = e.mode[k];
        const double span = mode == 0 ? span0 : span1;
        const double min_dwell = mode == 0 ? e.params.m0 : e.params.m1;
        if (!(e.dwell[k] < min_dwell)) continue;
        const double t = e.temp[k];
        if (t < temp_edges.front() || t > temp_edges.back()) continue;
        int i = static_cast<int>(std::upper_bound(temp_edges.begin(), temp_edges.end(), t)
                                 - temp_edges.begin()) - 1;
        if (i == nt) i = nt - 1;
        int j = static_cast<int>(e.dwell[k] / span * nd);
        j = std::clamp(j, 0, nd - 1);
        (mode == 0 ? out.l0 : out.l1)[i * nd + j] += 1;
    }

    for (int i = 0; i < nt; ++i) {
        const double wt = temp_edges[i + 1] - temp_edges[i];
        for (int j = 0; j < nd; ++j) {
            out.l0[i * nd + j] /= n * wt * (out.dwell_edges0[j + 1] - out.dwell_edges0[j]);
            out.l1[i * nd + j] /= n * wt * (out.dwell_edges1[j + 1] - out.dwell_edges1[j]);
        }
    }
    return out;
}

Ensemble sample_ensemble(const InitialCondition& init, const TclParams& p, int n_units,
                         std::uint64_t master_seed) {
    p.validate();
    if (n_units <= 0) throw ScenarioError("sample_ensemble needs a positive unit count");
    const std::size_t n_cells = init.edges.size() >= 1 ? init.edges.size() - 1 : 0;
    if (n_cells == 0 || init.mass0.size() != n_cells || init.mass1.size() != n_cells)
        throw ScenarioError("initial condition edges and masses are inconsistent");
    for (std::size_t j = 1; j < init.edges.size(); ++j)
        if (!(init.edges[j] > init.edges[j - 1]))
            throw ScenarioError("initial condition edges must be strictly increasing");

    std::vector<double> cum(2 * n_cells);
    double total = 0;
    for (std::size_t j = 0; j < n_cells; ++j) {
        if (init.mass0[j] < 0 || init.mass1[j] < 0)
            throw ScenarioError("initial condition masses must be nonnegative");
        total += init.mass0[j];
        cum[j] = total;
    }
    for (std::size_t j = 0; j < n_cells; ++j) {
        total += init.mass1[j];
        cum[n_cells + j] = total;
    }
    if (!(total > 0)) throw ScenarioError("initial condition carries no probability mass");
    for (double& c : cum) c /= total;
    cum.back() = 1.0;

    const double dwell0 = std::min(init.initial_dwell, std::max(p.m0, p.m1));

    Ensemble e;
    e.params = p;
    e.master_seed = master_seed;
    e.temp.resize(n_units);
    e.mode.resize(n_units);
    e.dwell.assign(n_units, dwell0);
    for (int k = 0; k < n_units; ++k) {
        const double uc = rng::uniform(master_seed, 0, static_cast<std::uint32_t>(k),
                                       rng::kLaneInitCell);
        const std::size_t seg = std::upper_bound(cum.begin(), cum.end(), uc) - cum.begin();
        const std::size_t cell = seg < n_cells ? seg : seg - n_cells;
        const double up = rng::uniform(master_seed, 0, static_cast<std::uint32_t>(k),
                                       rng::kLaneInitPos);
        e.temp[k] = init.edges[cell] + up * (init.edges[cell + 1] - init.edges[cell]);
        e.mode[k] = seg < n_cells ? 0 : 1;
    }
    return e;
}

Ensemble uniform_ensemble(const HybridState& s, const TclParams& p, int n_units,
                          std::uint64_t master_seed) {
    p.validate();
    if (n_units <= 0) throw ScenarioError("uniform_ensemble needs a positive unit count");
    Ensemble e;
    e.params = p;
    e.master_seed = master_seed;
    e.temp.assign(n_units, s.temp);
    e.mode.assign(n_units, static_cast<std::uint8_t>(s.mode));
    e.dwell.assign(n_units, s.dwell);
    return e;
}

McRunResult simulate_population(const SimConfig& cfg, const TclParams& p,
                                const ActuationSignal& signal,
                                const std::vector<double>& density_edges,
                                const Ensemble& initial) {
    cfg.validate();
    p.validate();
    signal.validate();
    if (initial.size() != cfg.n_units)
        throw ScenarioError("initial ensemble size does not match SimConfig.n_units");
    if (density_edges.size() < 2)
        throw ScenarioError("density snapshot grid needs at least two edges");

    const auto wall0 = std::chrono::steady_clock::now();

    McRunResult res;
    res.final_state = initial;
    Ensemble& e = res.final_state;
    e.step_index = 0;
    e.clock = 0;

    StepFlags flags;
    flags.dt = cfg.dt;
    flags.dwell_enabled = cfg.dwell_enabled;
    flags.rate_switching_enabled = cfg.rate_switching_enabled;

    const long long n_steps = std::llround(cfg.horizon / cfg.dt);
    const long long snap_every =
        cfg.snapshot_period > 0 ? std::max<long long>(1, std::llround(cfg.snapshot_period / cfg.dt))
                                : 0;

    std::vector<StepOutcome> outcomes(e.size());

    auto record_power = [&]() {
        const AggregatePower ap = aggregate_power(e);
        res.power.push_back({e.clock, ap.power_w, ap.on_fraction});
    };
    auto record_snapshot = [&]() {
        res.snapshots.push_back(empirical_pdf(e, density_edges, /*allow_outside=*/true));
        if (cfg.dwell_enabled)
            res.locked_snapshots.push_back(
                empirical_locked_density(e, density_edges, cfg.locked_dwell_cells));
    };

    record_power();
    if (snap_every > 0) record_snapshot();

    for (long long k = 0; k < n_steps; ++k) {
        const auto eps = actuation_at(signal, static_cast<double>(k) * cfg.dt);
        step_ensemble_parallel(e, eps, flags, outcomes.data());

        for (int u = 0; u < e.size(); ++u) {
            const StepOutcome& o = outcomes[u];
            if (o.eligible) res.stats.eligible_rate_trials += 1;
            if (o.locked) res.stats.locked_rate_suppressions += 1;
            if (o.switched == 0) continue;
            if (o.switched == 1) {
                res.stats.thermostat_switches += 1;
            } else {
                res.stats.rate_switches += 1;
                res.stats.min_dwell_at_rate_switch =
                    std::min(res.stats.min_dwell_at_rate_switch, o.dwell_before);
            }
            if (cfg.record_events) {
                const std::uint8_t now = e.mode[u];
                res.events.push_back({e.clock, static_cast<std::uint32_t>(u),
                                      o.switched == 1 ? SwitchKind::Thermostat : SwitchKind::Rate,
                                      static_cast<std::uint8_t>(1 - now), o.dwell_before});
            }
        }

        record_power();
        if (snap_every > 0 && (k + 1) % snap_every == 0) record_snapshot();
    }

    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

} // namespace tclpop
