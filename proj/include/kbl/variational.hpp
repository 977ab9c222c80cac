#pragma once

#include <kbl/fixed_point.hpp>
#include <kbl/sim.hpp>

#include <functional>
#include <iosfwd>

namespace kbl {

// Bounded continuous functional of the terminal surviving mass:
// F(mu) = clip(alpha * mass(T) + beta, lo, hi).
struct FSpec {
    double alpha = 1.0;
    double beta = 0.0;
    double lo = 0.0;
    double hi = 1.0;

    double eval(double mass_T) const;
    std::string label() const;
};

// One point on the rate-function frontier: a control, its cost J, and the
// scalar observable of its fixed-point measure path.
struct RateCertificate {
    ControlSpec control;
    double J = 0.0;
    double observable = 0.0; // terminal mass of the fixed point
    int fp_iterations = 0;
    double fp_residual = 0.0;
};

// Evaluate J and the fixed-point observable for every control in the
// family.  Dominated certificates (another certificate achieves an
// observable at least as extreme for strictly less J within `bin_width`)
// are reported on `warn` when non-null.
std::vector<RateCertificate> rate_frontier(const std::vector<ControlSpec>& family,
                                           const KillingFunction& zeta, const TimeGrid& grid,
                                           int M, int d, uint64_t seed,
                                           const FixedPointOptions& fp_opts = {},
                                           double bin_width = 0.02, std::ostream* warn = nullptr);

struct LaplaceEstimate {
    double value = 0.0; // -(1/n) log mean exp(-n F)
    double se = 0.0;    // delta-method standard error
    int replicas = 0;
};

// Plain Monte Carlo estimate of the Laplace functional of the n-particle
// system.  Replica r is a pure function of (seed, r); `workers` threads only
// change the wall clock, never a digit.
LaplaceEstimate laplace_mc(const FSpec& F, int n, int d, const TimeGrid& grid,
                           const KillingFunction& zeta, int replicas, uint64_t seed, int workers);

struct ControlValue {
    ControlSpec control;
    double mean = 0.0; // cost + F under the tilted dynamics
    double se = 0.0;
};

struct LaplaceReport {
    FSpec F;
    int n = 0;
    LaplaceEstimate mc;
    std::vector<ControlValue> scan; // one row per control, family order
    int best = -1;                  // index of the minimizing control
    double upper = 0.0;             // scan[best].mean
    double gap = 0.0;               // upper - mc.value (>= -3 SE when healthy)
};

// Variational upper bound: min over the control family of
// E[cost + F(tilted system)], each estimated from `replicas` runs.  With
// `refine` the winning control's threshold rate is golden-polished inside
// its neighbouring grid bracket (many extra MC evaluations).
LaplaceReport laplace_variational_upper(const FSpec& F, const std::vector<ControlSpec>& family,
                                        int n, int d, const TimeGrid& grid,
                                        const KillingFunction& zeta, int replicas, uint64_t seed,
                                        int workers, bool refine = false);

// Single-particle variational identity for g(W_T, X), X ~ Exp(1):
//   -log E[exp(-g)]  vs  min_{u,lambda} E_{u,lambda}[g] + u^2 T/2 + R(lambda).
struct VarrepResult {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;        // refined minimum over the (u, lambda) family
    double rhs_grid = 0.0;   // best raw grid value
    double u_star = 0.0;     // refined minimizer
    double lambda_star = 1.0;
    int gh_nodes = 0, gl_nodes = 0;
    double quad_gap = 0.0;   // Richardson check: |value(n) - value(2n)|
};

struct VarrepOptions {
    double T = 1.0;
    int gh_nodes = 64;
    int gl_nodes = 64;
    std::vector<double> u_grid = {-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0};
    std::vector<double> lambda_grid = {0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0};
    bool refine = true; // golden-section polish of the best grid axis
};

VarrepResult varrep_check(const std::string& name, const std::function<double(double, double)>& g,
                          const VarrepOptions& opts = {});

// Deterministic bounded test integrands for varrep property sweeps.
std::function<double(double, double)> varrep_random_g(uint64_t seed, int index);

} // namespace kbl
