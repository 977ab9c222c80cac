#pragma once

#include <kbl/errors.hpp>

namespace kbl {

// Uniform grid t_k = k*T/m on [0, T].  Endpoints are exact; nodes are
// strictly increasing for any T > 0, m >= 1.
struct TimeGrid {
    double T = 1.0;
    int m = 100;

    TimeGrid() = default;
    TimeGrid(double T_, int m_) : T(T_), m(m_) {
        if (!(T > 0.0)) throw config_error("TimeGrid: horizon T must be positive");
        if (m < 1) throw config_error("TimeGrid: need at least one step");
    }

    double dt() const { return T / m; }
    double t(int k) const { return (T * k) / m; }
    int size() const { return m + 1; } // number of nodes

    bool operator==(const TimeGrid&) const = default;
};

} // namespace kbl
