#pragma once

#include <kbl/bl_dictionary.hpp>
#include <kbl/control.hpp>
#include <kbl/killing.hpp>
#include <kbl/measures.hpp>

#include <cstdint>
#include <optional>

namespace kbl {

// Monte Carlo representation of a candidate path law: M single-particle
// controlled trajectories plus their killing thresholds.  Samples are stored
// sorted by threshold (the law is exchangeable, and sorted storage turns the
// alive-set of any hazard level into a contiguous suffix).
struct ThetaSample {
    int M = 0;
    int d = 1;
    TimeGrid grid;
    std::vector<double> paths;  // time-major: paths[(k*M + r)*d + j], rank r
    std::vector<double> sigmas; // ascending
    std::optional<ControlSpec> control;
    std::vector<double> drift_samples; // realized 0.5 int |psi|^2 per sample (empty if zero drift)

    std::span<const double> frame(int k) const {
        return {paths.data() + static_cast<size_t>(k) * M * d, static_cast<size_t>(M) * d};
    }
};

// Draw M independent controlled single-particle samples.  No killing is
// applied here; thresholds only matter once a hazard path is chosen.
ThetaSample sample_theta(int M, int d, const TimeGrid& grid, const ControlSpec& control,
                         uint64_t seed, uint32_t replica = 0);

struct FixedPointOptions {
    double tol = 1e-6;
    int max_iter = 200;
    double damping = 1.0; // halved automatically when the residual stalls
    std::optional<std::vector<double>> init; // starting hazard (defaults to zero)
};

struct FixedPointResult {
    HazardPath hazard;
    std::vector<double> mass;      // surviving fraction of the sample
    std::vector<double> zeta_mean; // <zeta, survivors>/M per node
    int iterations = 0;
    double residual = 0.0;
};

// Damped Picard iteration for the self-consistent hazard
//   H(t) = int_0^t <zeta, pi_Theta(H)(s)> ds,
// where a sample survives at s iff its threshold exceeds H(s).  Throws
// nonconvergence_error (carrying the last residual) at the iteration cap.
FixedPointResult solve_fixed_point(const ThetaSample& theta, const KillingFunction& zeta,
                                   const FixedPointOptions& opts = {});

// J(Theta) = mean realized drift energy + R(threshold law || Exp(1)).
// The sample must carry its control (config error otherwise).
double j_cost(const ThetaSample& theta);

// Hazard the sample would accumulate if nothing were ever killed; it
// dominates the true fixed point, which makes it a useful second seed when
// probing uniqueness.
std::vector<double> unkilled_hazard(const ThetaSample& theta, const KillingFunction& zeta);

struct ConsistencyReport {
    double sup_mass_dev = 0.0;    // sup_k |sim mass - fixed-point mass|
    double dict_distance_T = 0.0; // dictionary distance of the two terminal measures
    double tolerance = 0.0;
    bool ok = false;
};

// Simulate the n-particle system under `control` and compare its empirical
// measure path against the fixed point of the same control's path law.
ConsistencyReport self_consistency_check(const ControlSpec& control, const KillingFunction& zeta,
                                         const TimeGrid& grid, int n, int M, int d, uint64_t seed,
                                         double tolerance);

} // namespace kbl
