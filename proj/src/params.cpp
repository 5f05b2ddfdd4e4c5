#include "tclpop/params.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "tclpop/errors.hpp"

namespace tclpop {

namespace {

void require(bool ok, const char* what) {
    if (!ok)
        throw ScenarioError(std::string("invalid parameters: ") + what);
}

} // namespace

void TclParams::validate() const {
    require(std::isfinite(a) && std::isfinite(b0) && std::isfinite(b1), "a, b0, b1 must be finite");
    require(std::isfinite(t_min) && std::isfinite(t_max), "t_min, t_max must be finite");
    require(t_min < t_max, "t_min must be < t_max");
    require(delta_t0 >= 0, "delta_t0 must be >= 0");
    require(delta_t1 >= 0, "delta_t1 must be >= 0");
    require(delta_t0 + delta_t1 < t_max - t_min,
            "delta_t0 + delta_t1 must leave a nonempty actuatable band");
    require(sigma >= 0, "sigma must be >= 0");
    require(rated_power > 0, "rated_power must be > 0");
    require(m0 >= 0 && m1 >= 0, "m0, m1 must be >= 0");
}

TclParams TclParams::fridge() {
    TclParams p;
    p.a = -1.5247e-5;
    p.b0 = 3.6593e-4;
    p.b1 = -0.0026;
    p.sigma = 0.0065;
    p.t_min = 2.0;
    p.t_max = 5.0;
    p.delta_t0 = 0.5;
    p.delta_t1 = 0.5;
    p.m0 = 300.0;
    p.m1 = 300.0;
    p.rated_power = 100.0;
    return p;
}

void ActuationSignal::validate() const {
    if (!(period > 0))
        throw ScenarioError("signal: period must be > 0");
    if (samples.empty())
        throw ScenarioError("signal: sample list must not be empty");
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (!(samples[k].first >= 0) || !(samples[k].second >= 0)) {
            std::ostringstream msg;
            msg << "signal: sample " << k << " has a negative rate";
            throw ScenarioError(msg.str());
        }
    }
}

std::uint64_t ActuationSignal::checksum() const {
    // FNV-1a over the raw bytes of period and every sample pair
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 0x100000001b3ull;
        }
    };
    mix(period);
    for (const auto& [e0, e1] : samples) {
        mix(e0);
        mix(e1);
    }
    return h;
}

ActuationSignal ActuationSignal::zero(double period, int n_samples) {
    ActuationSignal s;
    s.period = period;
    s.samples.assign(static_cast<std::size_t>(n_samples > 0 ? n_samples : 1), {0.0, 0.0});
    return s;
}

std::pair<double, double> actuation_at(const ActuationSignal& signal, double time) {
    // sample k applies on [k*period, (k+1)*period); holds the last value
    // beyond the end of the list
    auto k = static_cast<long long>(std::floor(time / signal.period));
    if (k < 0)
        k = 0;
    if (k >= static_cast<long long>(signal.samples.size()))
        k = static_cast<long long>(signal.samples.size()) - 1;
    return signal.samples[static_cast<std::size_t>(k)];
}

} // namespace tclpop
