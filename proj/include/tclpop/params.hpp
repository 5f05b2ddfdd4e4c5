#ifndef TCLPOP_PARAMS_HPP
#define TCLPOP_PARAMS_HPP

#include <cstdint>
#include <utility>
#include <vector>

namespace tclpop {

/// Physical and control constants of one TCL class (cooling-unit convention).
/// Drift is affine, u_m(T) = a*T + b_m; diffusion is the constant sigma.
struct TclParams {
    double a = 0;             // thermal drift coefficient [1/s]
    double b0 = 0;            // off-mode drift offset [K/s]
    double b1 = 0;            // on-mode drift offset [K/s]
    double sigma = 0;         // diffusion coefficient [K/sqrt(s)]
    double t_min = 0;         // lower thermostat bound [K]
    double t_max = 0;         // upper thermostat bound [K]
    double delta_t0 = 0.5;    // switch-off safe distance from t_max [K]
    double delta_t1 = 0.5;    // switch-on safe distance from t_min [K]
    double m0 = 300;          // minimum off-dwell [s]
    double m1 = 300;          // minimum on-dwell [s]
    double rated_power = 100; // compressor draw when on [W]

    /// Throws ScenarioError naming the offending field if any invariant fails.
    void validate() const;

    /// Reference refrigerator parameter set used by the bundled scenarios.
    static TclParams fridge();
};

/// One unit's hybrid state: temperature, power mode, time since last switch.
struct HybridState {
    double temp = 0;  // [K]
    int mode = 0;     // 0 = off, 1 = on
    double dwell = 0; // [s]
};

enum class SwitchDirection { Off = 0, On = 1 };

/// Piecewise-constant broadcast sequence of (eps0, eps1) rate pairs.
/// Sample k applies on [k*period, (k+1)*period); the last sample holds
/// beyond the end of the list.
struct ActuationSignal {
    double period = 60; // broadcast sample period tau_c [s]
    std::vector<std::pair<double, double>> samples; // (eps0, eps1) [1/s]

    void validate() const; // rejects empty list, period <= 0, negative rates

    /// FNV-1a over the binary content; lets two backends prove they consumed
    /// the same signal.
    std::uint64_t checksum() const;

    static ActuationSignal zero(double period, int n_samples);
};

std::pair<double, double> actuation_at(const ActuationSignal& signal, double time);

} // namespace tclpop

#endif
