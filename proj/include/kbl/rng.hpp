#pragma once

#include <kbl/errors.hpp>

#include <array>
#include <cmath>
#include <cstdint>

namespace kbl {

// Philox4x32-10 counter-based generator.  Every variate is a pure function
// of (seed, domain, replica, particle, index), so any particle in any
// replica can be replayed in isolation and parallel schedules cannot change
// the numbers.
namespace philox {

inline constexpr uint32_t W32A = 0x9E3779B9u;
inline constexpr uint32_t W32B = 0xBB67AE85u;
inline constexpr uint32_t M0 = 0xD2511F53u;
inline constexpr uint32_t M1 = 0xCD9E8D57u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
}

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += W32A;
            key[1] += W32B;
        }
        uint32_t hi0, lo0, hi1, lo1;
        mulhilo(M0, ctr[0], hi0, lo0);
        mulhilo(M1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

} // namespace philox

// Purpose tag baked into the counter so that e.g. a particle's Brownian
// increments and its killing threshold never share raw bits.
enum class StreamDomain : uint32_t {
    increments = 0,  // Brownian increments (index = step*d + axis)
    thresholds = 1,  // killing-threshold uniforms (index = 0)
    mc_fallback = 2, // Monte Carlo quadrature fallback
    dictionary = 3,  // randomized growth/dictionary spot checks
    scratch = 4,
};

class RngStream {
public:
    RngStream(uint64_t seed, StreamDomain domain, uint32_t replica = 0, uint32_t particle = 0)
        : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
          c2_(particle),
          c3_(replica | (static_cast<uint32_t>(domain) << 28)) {
        if (replica >= (1u << 28))
            throw config_error("RngStream: replica index exceeds 2^28");
    }

    std::array<uint32_t, 4> raw(uint64_t index) const {
        return philox::block({static_cast<uint32_t>(index),
                              static_cast<uint32_t>(index >> 32), c2_, c3_},
                             key_);
    }

    // Uniform on (0,1]: 53-bit mantissa, never zero, so logs are safe.
    double uniform(uint64_t index) const {
        auto w = raw(index);
        uint64_t x = (static_cast<uint64_t>(w[1]) << 32) | w[0];
        return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; one counter block per variate keeps
    // random access trivial at the cost of half the entropy.
    double gaussian(uint64_t index) const {
        auto w = raw(index);
        uint64_t xa = (static_cast<uint64_t>(w[1]) << 32) | w[0];
        uint64_t xb = (static_cast<uint64_t>(w[3]) << 32) | w[2];
        double u1 = static_cast<double>((xa >> 11) + 1) * 0x1.0p-53;
        double u2 = static_cast<double>((xb >> 11) + 1) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Exp(1) by inversion.
    double exponential(uint64_t index) const { return -std::log(uniform(index)); }

private:
    std::array<uint32_t, 2> key_;
    uint32_t c2_, c3_;
};

} // namespace kbl
