#include <kbl/fixed_point.hpp>
#include <kbl/rng.hpp>
#include <kbl/sim.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kbl {

ThetaSample sample_theta(int M, int d, const TimeGrid& grid, const ControlSpec& control,
                         uint64_t seed, uint32_t replica) {
    if (M < 1) throw config_error("sample_theta: need at least one sample");
    if (d < 1) throw config_error("sample_theta: dimension must be positive");
    if (!control.drift.is_zero() && control.drift.dim() != d)
        throw config_error("sample_theta: drift dimension mismatch");
    const int m = grid.m;
    const double dt = grid.dt(), sdt = std::sqrt(dt);
    const bool affine = control.drift.kind() == DriftPolicy::Kind::affine_feedback;
    const bool scheduled = control.drift.kind() == DriftPolicy::Kind::time_dependent;

    // same stream layout as the particle engine: a theta sample is just a
    // particle that nothing kills
    std::vector<double> sigmas(M);
    for (int i = 0; i < M; ++i) {
        RngStream ts(seed, StreamDomain::thresholds, replica, static_cast<uint32_t>(i));
        sigmas[i] = control.threshold.sample(ts.uniform(0));
    }

    // sort thresholds first so each path can be written straight into its
    // rank slot (any hazard cut is then a contiguous suffix)
    std::vector<int> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return sigmas[a] != sigmas[b] ? sigmas[a] < sigmas[b] : a < b;
    });
    std::vector<int> rank_of(M);
    for (int r = 0; r < M; ++r) rank_of[order[r]] = r;

    const bool has_drift = affine || scheduled;
    ThetaSample th;
    th.M = M;
    th.d = d;
    th.grid = grid;
    th.control = control;
    th.sigmas.resize(M);
    th.paths.assign(static_cast<size_t>(m + 1) * M * d, 0.0);
    if (has_drift) th.drift_samples.resize(M);
    for (int r = 0; r < M; ++r) th.sigmas[r] = sigmas[order[r]];

    std::vector<double> u(d);
    double sched_energy = 0.0;
    if (scheduled) {
        for (int k = 0; k < m; ++k) {
            control.drift.eval(k, {}, u);
            double s = 0.0;
            for (double v : u) s += v * v;
            sched_energy += 0.5 * s * dt;
        }
    }

    for (int i = 0; i < M; ++i) {
        RngStream gs(seed, StreamDomain::increments, replica, static_cast<uint32_t>(i));
        const int r = rank_of[i];
        double cost = 0.0;
        for (int k = 0; k < m; ++k) {
            const double* xk = th.paths.data() + (static_cast<size_t>(k) * M + r) * d;
            double* xk1 = th.paths.data() + (static_cast<size_t>(k + 1) * M + r) * d;
            if (scheduled) control.drift.eval(k, {}, u);
            if (affine) {
                control.drift.eval(k, std::span<const double>(xk, d), u);
                double s = 0.0;
                for (double v : u) s += v * v;
                cost += 0.5 * s * dt;
            }
            for (int j = 0; j < d; ++j) {
                double z = gs.gaussian(static_cast<uint64_t>(k) * d + j);
                xk1[j] = xk[j] + sdt * z + ((scheduled || affine) ? u[j] * dt : 0.0);
            }
        }
        if (affine) th.drift_samples[r] = cost;
        else if (scheduled) th.drift_samples[r] = sched_energy;
    }
    return th;
}

namespace {

// mass and zeta-mean of the suffix of samples with sigma > H_k, per node
void cut_stats(const ThetaSample& th, const KillingFunction& zeta, const std::vector<double>& H,
               std::vector<double>& mass, std::vector<double>& zmean) {
    const int M = th.M, m = th.grid.m, d = th.d;
    const bool cz = zeta.is_constant();
    const double c = cz ? zeta.constant_value() : 0.0;
    for (int k = 0; k <= m; ++k) {
        auto it = std::upper_bound(th.sigmas.begin(), th.sigmas.end(), H[k]);
        int r0 = static_cast<int>(it - th.sigmas.begin()); // first surviving rank
        mass[k] = static_cast<double>(M - r0) / M;
        if (cz) {
            zmean[k] = c * mass[k];
            continue;
        }
        const double* col = th.paths.data() + static_cast<size_t>(k) * M * d;
        double total = 0.0;
        for (int base = r0; base < M; base += 8192) {
            int hi = std::min(M, base + 8192);
            double part = 0.0;
            for (int r = base; r < hi; ++r)
                part += zeta(std::span<const double>(col + static_cast<size_t>(r) * d,
                                                     static_cast<size_t>(d)));
            total += part;
        }
        zmean[k] = total / M;
    }
}

} // namespace

FixedPointResult solve_fixed_point(const ThetaSample& theta, const KillingFunction& zeta,
                                   const FixedPointOptions& opts) {
    const int m = theta.grid.m;
    if (!(opts.tol > 0.0)) throw config_error("solve_fixed_point: tolerance must be positive");
    if (opts.max_iter < 1) throw config_error("solve_fixed_point: iteration cap must be positive");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw config_error("solve_fixed_point: damping must lie in (0,1]");

    std::vector<double> H(m + 1, 0.0);
    if (opts.init) {
        if (static_cast<int>(opts.init->size()) != m + 1)
            throw config_error("solve_fixed_point: init hazard has wrong length");
        H = *opts.init;
        if (H[0] != 0.0) throw config_error("solve_fixed_point: init hazard must start at zero");
    }

    const double h = theta.grid.dt();
    std::vector<double> mass(m + 1), zmean(m + 1), Hnext(m + 1);
    double damping = opts.damping;
    double prev_res = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        cut_stats(theta, zeta, H, mass, zmean);
        double acc = 0.0;
        Hnext[0] = 0.0;
        for (int k = 0; k < m; ++k) {
            acc += 0.5 * h * (zmean[k] + zmean[k + 1]);
            Hnext[k + 1] = (1.0 - damping) * H[k + 1] + damping * acc;
        }
        double res = 0.0;
        for (int k = 0; k <= m; ++k) res = std::max(res, std::abs(Hnext[k] - H[k]));
        H.swap(Hnext);
        if (res < opts.tol) {
            FixedPointResult out;
            out.hazard = {theta.grid, H};
            cut_stats(theta, zeta, H, mass, zmean);
            out.mass = std::move(mass);
            out.zeta_mean = std::move(zmean);
            out.iterations = iter;
            out.residual = res;
            return out;
        }
        // The sampled map is a step function of H (atoms of size 1/M), so an
        // undamped iteration can land in a flat two-cycle straddling a jump.
        // Shrink the step whenever the residual stops falling -- the cycle
        // amplitude is proportional to the damping, so it dies geometrically
        // -- and creep back up after clear progress.
        if (res >= 0.999 * prev_res && damping > 0x1p-20) damping *= 0.5;
        else if (res < 0.5 * prev_res) damping = std::min(opts.damping, damping * 1.25);
        prev_res = res;
    }
    throw nonconvergence_error("solve_fixed_point: Picard iteration did not reach tolerance",
                               prev_res, opts.max_iter);
}

std::vector<double> unkilled_hazard(const ThetaSample& theta, const KillingFunction& zeta) {
    const int m = theta.grid.m;
    std::vector<double> none(m + 1, -1.0); // below every threshold: nobody dies
    std::vector<double> mass(m + 1), zmean(m + 1);
    cut_stats(theta, zeta, none, mass, zmean);
    std::vector<double> H(m + 1, 0.0);
    const double h = theta.grid.dt();
    for (int k = 0; k < m; ++k) H[k + 1] = H[k] + 0.5 * h * (zmean[k] + zmean[k + 1]);
    return H;
}

double j_cost(const ThetaSample& theta) {
    if (!theta.control)
        throw config_error("j_cost: sample carries no control parameters");
    double drift = 0.0;
    if (!theta.drift_samples.empty()) {
        for (double v : theta.drift_samples) drift += v;
        drift /= static_cast<double>(theta.M);
    }
    return drift + theta.control->threshold.relative_entropy();
}

ConsistencyReport self_consistency_check(const ControlSpec& control, const KillingFunction& zeta,
                                         const TimeGrid& grid, int n, int M, int d, uint64_t seed,
                                         double tolerance) {
    RunSpec spec;
    spec.n = n;
    spec.d = d;
    spec.grid = grid;
    spec.zeta = zeta;
    spec.control = control;
    spec.seed = seed;
    spec.keep_ensemble = false;
    SimResult sim = simulate(spec, 0);

    ThetaSample th = sample_theta(M, d, grid, control, seed + 1, 0);
    FixedPointResult fp = solve_fixed_point(th, zeta);

    ConsistencyReport rep;
    rep.tolerance = tolerance;
    for (int k = 0; k <= grid.m; ++k)
        rep.sup_mass_dev = std::max(rep.sup_mass_dev, std::abs(sim.path.mass[k] - fp.mass[k]));

    // terminal measures through the dictionary: simulated alive particles vs
    // the surviving suffix of the theta sample
    auto dict = BLDictionary::standard(d);
    std::vector<uint8_t> th_alive(M);
    for (int r = 0; r < M; ++r) th_alive[r] = th.sigmas[r] > fp.hazard.H[grid.m] ? 1 : 0;
    EmpiricalFrame sim_frame{n, d, sim.final_positions, sim.final_alive};
    EmpiricalFrame th_frame{M, d, th.frame(grid.m), th_alive};
    rep.dict_distance_T = bl_distance_lower(sim_frame, th_frame, dict);

    rep.ok = rep.sup_mass_dev <= tolerance && rep.dict_distance_T <= tolerance;
    return rep;
}

} // namespace kbl
