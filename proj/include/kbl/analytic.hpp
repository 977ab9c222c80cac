#pragma once

#include <kbl/bl_dictionary.hpp>
#include <kbl/grid.hpp>
#include <kbl/killing.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace kbl {

struct QuadOptions {
    int gh_nodes = 64;             // tensor Gauss-Hermite nodes per axis (custom zeta, d <= 2)
    long long mc_samples = 1000000; // Monte Carlo fallback sample count (d >= 3)
    uint64_t mc_seed = 0x6b626c2d6d6366ull;
};

// <zeta, N(0, t I_d)>.  Constants return exactly; pure powers reduce to a
// radial Gauss-Laguerre rule that integrates them to machine precision;
// generic integrands use tensor Gauss-Hermite (d <= 2) or seeded Monte Carlo
// with a reported standard error (d >= 3, written to *se_out when non-null).
double gaussian_expectation(const KillingFunction& zeta, double t, int d,
                            const QuadOptions& opts = {}, double* se_out = nullptr);

// Same integration paths for an arbitrary scalar observable.
double gaussian_expectation_fn(const std::function<double(std::span<const double>)>& f, double t,
                               int d, const QuadOptions& opts = {}, double* se_out = nullptr);

// Deterministic limit of the particle system: mass a(t) solving
// da/dt = -a^2 b(t), a(0) = 1, with b(t) = <zeta, N(0, t I_d)>.
struct LimitProfile {
    TimeGrid grid;
    int d = 1;
    std::vector<double> b; // killing moment at each node
    std::vector<double> B; // cumulative trapezoid integral of b
    std::vector<double> a; // surviving mass 1/(1 + B)
    double rk4_deviation = 0.0; // max relative gap against the RK4 cross-check
    double b_se = 0.0;          // quadrature SE when the MC fallback was used

    double mass(int k) const { return a[k]; }
};

// Integrates b, forms a = 1/(1+B), and cross-checks against an RK4 solve of
// the mass ODE; disagreement beyond 10*(T/m)^2 relative is a numeric_error.
LimitProfile solve_limit(const KillingFunction& zeta, const TimeGrid& grid, int d,
                         const QuadOptions& opts = {});

// a(t) * exp{-integral a b} consistency path: the same mass computed through
// the exponential form, for discretization-error audits.
std::vector<double> dual_mass(const LimitProfile& lp);

// <f, mu(t)> = a(t) * <f, N(0, t I_d)> at a grid node (t off-grid is a
// config error).  Dictionary functions use their closed forms.
double limit_observable(const LimitProfile& lp, const BLFunction& f, double t);
double limit_observable(const LimitProfile& lp,
                        const std::function<double(std::span<const double>)>& f, double t,
                        const QuadOptions& opts = {});

} // namespace kbl
