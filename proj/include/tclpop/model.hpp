#ifndef TCLPOP_MODEL_HPP
#define TCLPOP_MODEL_HPP

#include "tclpop/errors.hpp"
#include "tclpop/params.hpp"

namespace tclpop {

/// Drift field u_m(T, t) = a*T + b_m. Time enters the signature so that
/// time-varying models can slot in; the shipped model is time-invariant.
inline double drift(const TclParams& p, int mode, double temp, double /*time*/ = 0) {
    return p.a * temp + (mode == 0 ? p.b0 : p.b1);
}

/// Diffusion field sigma_m(T, t); constant in the shipped model.
inline double diffusion(const TclParams& p, int /*mode*/, double /*temp*/ = 0,
                        double /*time*/ = 0) {
    return p.sigma;
}

/// Deterministic thermostat rule for a cooling unit. Returns the new mode;
/// the caller resets the dwell clock when the mode changed.
inline int thermostat_transition(const HybridState& s, const TclParams& p) {
    if (s.mode == 0 && s.temp >= p.t_max)
        return 1;
    if (s.mode == 1 && s.temp <= p.t_min)
        return 0;
    return s.mode;
}

/// Switching-rate design function lambda_i(eps, T). The shipped design is
/// temperature-independent, lambda = eps; the temperature argument is the
/// extension point for richer designs.
inline double rate_function(double eps, double /*temp*/) {
    if (eps < 0)
        throw ScenarioError("rate_function: eps must be nonnegative");
    return eps;
}

/// Rate extended with zero over the unsafe distances next to the thermostat
/// boundaries (and outside the dead-band entirely):
///   switch-on : nonzero only for T in [t_min + delta_t1, t_max)
///   switch-off: nonzero only for T in (t_min, t_max - delta_t0]
inline double masked_rate(double eps, double temp, SwitchDirection dir, const TclParams& p) {
    if (eps < 0)
        throw ScenarioError("masked_rate: eps must be nonnegative");
    if (dir == SwitchDirection::On) {
        if (temp >= p.t_min + p.delta_t1 && temp < p.t_max)
            return rate_function(eps, temp);
    } else {
        if (temp > p.t_min && temp <= p.t_max - p.delta_t0)
            return rate_function(eps, temp);
    }
    return 0.0;
}

/// Instantaneous power draw, r*m.
inline double power_output(const HybridState& s, const TclParams& p) {
    return p.rated_power * s.mode;
}

} // namespace tclpop

#endif
