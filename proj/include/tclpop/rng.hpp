#ifndef TCLPOP_RNG_HPP
#define TCLPOP_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace tclpop {
namespace rng {

// Counter-based generator (Philox4x32-10). Every draw is a pure function of
// (master seed, step index, unit index, lane), so the ensemble can be
// partitioned across threads in any order without changing a single bit of
// the output, and a disabled consumer does not shift anybody else's stream.

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

} // namespace detail

/// One 10-round Philox4x32 block: 128 output bits from a 128-bit counter and
/// a 64-bit key.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo32(kMul0, ctr[0], hi0, lo0);
        detail::mulhilo32(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// Draw lanes. Each (step, unit, lane) triple is an independent stream.
enum Lane : std::uint32_t {
    kLaneGaussian = 0,    // Euler-Maruyama noise increment
    kLaneSwitchTrial = 1, // Bernoulli uniform for the rate-switch trial
    kLaneInitCell = 16,   // initial-condition sampling: cell selection
    kLaneInitPos = 17,    // initial-condition sampling: position within cell
    kLaneInitAux = 18,
};

inline std::array<std::uint32_t, 4> block_at(std::uint64_t seed, std::uint64_t step,
                                             std::uint32_t unit, std::uint32_t lane) {
    std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(step),
                                        static_cast<std::uint32_t>(step >> 32), unit, lane};
    std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                        static_cast<std::uint32_t>(seed >> 32)};
    return philox4x32(ctr, key);
}

/// Map 64 bits to a double in [0, 1) with 53-bit resolution.
inline double to_unit_halfopen(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Map 64 bits to a double in (0, 1]; safe as a log() argument.
inline double to_unit_openzero(std::uint64_t x) {
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

/// Uniform [0,1) draw for (seed, step, unit, lane).
inline double uniform(std::uint64_t seed, std::uint64_t step, std::uint32_t unit,
                      std::uint32_t lane) {
    auto b = block_at(seed, step, unit, lane);
    return to_unit_halfopen(join(b[0], b[1]));
}

/// Standard normal draw via Box-Muller on one philox block.
inline double gaussian(std::uint64_t seed, std::uint64_t step, std::uint32_t unit,
                       std::uint32_t lane) {
    auto b = block_at(seed, step, unit, lane);
    double u1 = to_unit_openzero(join(b[0], b[1]));
    double u2 = to_unit_halfopen(join(b[2], b[3]));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

} // namespace rng
} // namespace tclpop

#endif
