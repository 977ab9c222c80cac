#pragma once

#include <kbl/grid.hpp>

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace kbl {

// Full record of one simulated particle system.  Positions are stored
// time-major — positions[(k*n + i)*d + j] — so the per-step update and the
// fixed-time empirical measure both walk contiguous memory.
struct ParticleEnsemble {
    int n = 0;
    int d = 1;
    TimeGrid grid;
    std::vector<double> positions;  // (m+1) * n * d
    std::vector<double> thresholds; // n, Exp(1) (or nu under a control)
    std::vector<uint8_t> alive;     // (m+1) * n, alive[k*n+i]
    std::vector<double> kill_times; // n, +inf if the particle survives to T

    double pos(int k, int i, int j) const {
        return positions[(static_cast<size_t>(k) * n + i) * d + j];
    }
    std::span<const double> pos_at(int k, int i) const {
        return {positions.data() + (static_cast<size_t>(k) * n + i) * d, static_cast<size_t>(d)};
    }
    std::span<const double> frame(int k) const { // all positions at t_k
        return {positions.data() + static_cast<size_t>(k) * n * d, static_cast<size_t>(n) * d};
    }
    bool is_alive(int k, int i) const { return alive[static_cast<size_t>(k) * n + i] != 0; }
    std::span<const uint8_t> alive_at(int k) const {
        return {alive.data() + static_cast<size_t>(k) * n, static_cast<size_t>(n)};
    }

    static constexpr double never_killed = std::numeric_limits<double>::infinity();
};

// Scalar summaries of the (sub-probability) empirical measure path:
// mass[k] = alive fraction at t_k, zeta_mean[k] = <zeta, mu^n(t_k)>.
// `support` is the generating ensemble when it was retained; streaming
// runs leave it null.
struct EmpiricalMeasurePath {
    TimeGrid grid;
    std::vector<double> mass;
    std::vector<double> zeta_mean;
    std::shared_ptr<const ParticleEnsemble> support;
};

// Accumulated hazard H(t_k) = integral_0^{t_k} <zeta, mu(s)> ds, the scalar
// statistic deciding which thresholds have been crossed.  H[0] = 0 and H is
// nondecreasing.
struct HazardPath {
    TimeGrid grid;
    std::vector<double> H;
};

} // namespace kbl
