#include <kbl/sim.hpp>
#include <kbl/rng.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace kbl {

namespace {

constexpr int kChunk = 8192; // fixed reduction block: sum order never depends on scheduling

// Sum of zeta over alive particles, chunked for reproducibility.  `zc` holds
// the per-particle values so kill processing can decrement exactly.
double zeta_sum_alive(const KillingFunction& zeta, const std::vector<double>& x,
                      const std::vector<uint8_t>& alive, std::vector<double>& zc, int n, int d) {
    double total = 0.0;
    for (int base = 0; base < n; base += kChunk) {
        int hi = std::min(n, base + kChunk);
        double part = 0.0;
        for (int i = base; i < hi; ++i) {
            if (!alive[i]) continue;
            double v = zeta(std::span<const double>(x.data() + static_cast<size_t>(i) * d,
                                                    static_cast<size_t>(d)));
            zc[i] = v;
            part += v;
        }
        total += part;
    }
    return total;
}

} // namespace

SimResult simulate(const RunSpec& spec, uint32_t replica) {
    const int n = spec.n, d = spec.d, m = spec.grid.m;
    if (n < 1) throw config_error("simulate: need at least one particle");
    if (d < 1) throw config_error("simulate: dimension must be positive");
    const double dt = spec.grid.dt(), sdt = std::sqrt(dt);
    const ControlSpec ctrl = spec.control.value_or(ControlSpec{DriftPolicy::zero(d)});
    if (!ctrl.drift.is_zero() && ctrl.drift.dim() != d)
        throw config_error("simulate: drift dimension mismatch");
    const bool const_zeta = spec.zeta.is_constant();
    const double zconst = const_zeta ? spec.zeta.constant_value() : 0.0;
    const bool affine = ctrl.drift.kind() == DriftPolicy::Kind::affine_feedback;
    const bool scheduled = ctrl.drift.kind() == DriftPolicy::Kind::time_dependent;

    SimResult out;
    out.path.grid = spec.grid;
    out.path.mass.resize(m + 1);
    out.path.zeta_mean.resize(m + 1);
    out.hazard.grid = spec.grid;
    out.hazard.H.resize(m + 1);

    // thresholds: one uniform per particle through the threshold law
    std::vector<double> thr(n);
    for (int i = 0; i < n; ++i) {
        RngStream ts(spec.seed, StreamDomain::thresholds, replica, static_cast<uint32_t>(i));
        thr[i] = ctrl.threshold.sample(ts.uniform(0));
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return thr[a] != thr[b] ? thr[a] < thr[b] : a < b; // ties die in index order
    });

    std::vector<double> x(static_cast<size_t>(n) * d, 0.0); // B_i(0) = 0
    std::vector<uint8_t> alive(n, 1);
    std::vector<double> kill_times(n, ParticleEnsemble::never_killed);
    std::vector<double> zc(const_zeta ? 0 : n, 0.0);
    std::vector<double> u(d);

    std::shared_ptr<ParticleEnsemble> ens;
    if (spec.keep_ensemble) {
        ens = std::make_shared<ParticleEnsemble>();
        ens->n = n;
        ens->d = d;
        ens->grid = spec.grid;
        ens->positions.assign(static_cast<size_t>(m + 1) * n * d, 0.0);
        ens->thresholds = thr;
        ens->alive.assign(static_cast<size_t>(m + 1) * n, 1);
    }

    std::vector<uint8_t> want_frame(m + 1, 0);
    for (int k : spec.checkpoint_nodes) {
        if (k < 0 || k > m) throw config_error("simulate: checkpoint node off the grid");
        want_frame[k] = 1;
    }
    out.checkpoint_positions.resize(spec.checkpoint_nodes.size());
    out.checkpoint_alive.resize(spec.checkpoint_nodes.size());

    // update dead particles only when something still depends on their path
    // (checkpoint frames mask the dead, so they don't force full walks)
    const bool walk_dead = spec.keep_ensemble || affine;

    double H = 0.0;
    int count = n;
    int p = 0; // rank of the next threshold to cross
    double zsum = 0.0;
    double drift_energy = 0.0; // n * (1/n) sum of realized 0.5 int |psi|^2

    for (int k = 0; k <= m; ++k) {
        if (const_zeta)
            zsum = zconst * count;
        else
            zsum = zeta_sum_alive(spec.zeta, x, alive, zc, n, d);

        out.path.mass[k] = static_cast<double>(count) / n;
        out.path.zeta_mean[k] = zsum / n;
        out.hazard.H[k] = H;
        if (spec.keep_ensemble) {
            std::copy(x.begin(), x.end(),
                      ens->positions.begin() + static_cast<size_t>(k) * n * d);
            std::copy(alive.begin(), alive.end(), ens->alive.begin() + static_cast<size_t>(k) * n);
        }
        if (want_frame[k]) {
            for (size_t c = 0; c < spec.checkpoint_nodes.size(); ++c) {
                if (spec.checkpoint_nodes[c] != k) continue;
                out.checkpoint_positions[c] = x;
                out.checkpoint_alive[c] = alive;
            }
        }
        if (k == m) break;

        // resolve kills in [t_k, t_{k+1}) against the frozen-slope hazard;
        // each death lowers the slope immediately
        double remaining = dt;
        while (count > 0 && zsum > 0.0 && p < n) {
            int i = order[p];
            double gap = thr[i] - H;
            double slope = zsum / n;
            double need = gap <= 0.0 ? 0.0 : gap / slope;
            if (need > remaining) {
                H += slope * remaining;
                remaining = 0.0;
                break;
            }
            H = std::max(H, thr[i]);
            remaining -= need;
            kill_times[i] = spec.grid.t(k) + (dt - remaining);
            alive[i] = 0;
            --count;
            zsum -= const_zeta ? zconst : zc[i];
            if (zsum < 0.0) zsum = 0.0; // cancellation dust
            ++p;
        }
        // (zsum == 0 or count == 0 leaves the hazard flat to the step's end)

        // advance paths to t_{k+1}
        double step_sched_cost = 0.0;
        if (scheduled) {
            ctrl.drift.eval(k, {}, u);
            double s = 0.0;
            for (double v : u) s += v * v;
            step_sched_cost = 0.5 * s * dt;
            drift_energy += step_sched_cost * n;
        }
        for (int i = 0; i < n; ++i) {
            if (!walk_dead && !alive[i]) continue;
            double* xi = x.data() + static_cast<size_t>(i) * d;
            if (affine) {
                ctrl.drift.eval(k, std::span<const double>(xi, d), u);
                double s = 0.0;
                for (double v : u) s += v * v;
                drift_energy += 0.5 * s * dt;
            }
            RngStream gs(spec.seed, StreamDomain::increments, replica, static_cast<uint32_t>(i));
            for (int j = 0; j < d; ++j) {
                double z = gs.gaussian(static_cast<uint64_t>(k) * d + j);
                xi[j] += sdt * z;
                if (scheduled || affine) xi[j] += u[j] * dt;
            }
        }
    }

    // every particle pays the control cost over the full horizon: the tilt
    // acts on the path law, killing only masks the measure
    out.cost.entropy_cost = ctrl.threshold.relative_entropy();
    out.cost.drift_cost = drift_energy / n;

    out.final_positions = std::move(x);
    out.final_alive = alive;
    if (spec.collect_kill_times) out.kill_times = std::move(kill_times);
    if (spec.keep_ensemble) {
        ens->kill_times = spec.collect_kill_times ? out.kill_times : kill_times;
        out.ensemble = ens;
        out.path.support = ens;
    }
    return out;
}

SimResult simulate_uncontrolled(int n, int d, const TimeGrid& grid, const KillingFunction& zeta,
                                uint64_t seed, uint32_t replica, bool keep_ensemble) {
    RunSpec spec;
    spec.n = n;
    spec.d = d;
    spec.grid = grid;
    spec.zeta = zeta;
    spec.seed = seed;
    spec.keep_ensemble = keep_ensemble;
    return simulate(spec, replica);
}

SimResult simulate_controlled(int n, int d, const TimeGrid& grid, const KillingFunction& zeta,
                              const ControlSpec& control, uint64_t seed, uint32_t replica,
                              bool keep_ensemble) {
    RunSpec spec;
    spec.n = n;
    spec.d = d;
    spec.grid = grid;
    spec.zeta = zeta;
    spec.control = control;
    spec.seed = seed;
    spec.keep_ensemble = keep_ensemble;
    return simulate(spec, replica);
}

ReplicaAggregate run_replicas(const RunSpec& spec, int replicas, int workers) {
    if (replicas < 1) throw config_error("run_replicas: need at least one replica");
    RunSpec inner = spec;
    inner.keep_ensemble = false; // aggregates never need full path storage

    ReplicaAggregate agg;
    agg.grid = spec.grid;
    agg.paths.resize(replicas);
    agg.costs.resize(replicas);
    agg.final_positions.resize(replicas);
    agg.final_alive.resize(replicas);
    if (!spec.checkpoint_nodes.empty()) {
        agg.checkpoint_positions.resize(replicas);
        agg.checkpoint_alive.resize(replicas);
    }
    if (spec.collect_kill_times) agg.kill_times.resize(replicas);

    int W = std::clamp(workers, 1, replicas);
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(W);
    auto worker = [&](int w) {
        try {
            for (int r = next.fetch_add(1); r < replicas; r = next.fetch_add(1)) {
                SimResult res = simulate(inner, static_cast<uint32_t>(r));
                agg.paths[r] = std::move(res.path);
                agg.costs[r] = res.cost;
                agg.final_positions[r] = std::move(res.final_positions);
                agg.final_alive[r] = std::move(res.final_alive);
                if (!spec.checkpoint_nodes.empty()) {
                    agg.checkpoint_positions[r] = std::move(res.checkpoint_positions);
                    agg.checkpoint_alive[r] = std::move(res.checkpoint_alive);
                }
                if (spec.collect_kill_times) agg.kill_times[r] = std::move(res.kill_times);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (W == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(W);
        for (int w = 0; w < W; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    // cross-replica moments, accumulated in replica order
    const int nodes = spec.grid.size();
    agg.mass_mean.assign(nodes, 0.0);
    agg.mass_se.assign(nodes, 0.0);
    agg.zeta_mean_mean.assign(nodes, 0.0);
    agg.zeta_mean_se.assign(nodes, 0.0);
    for (int k = 0; k < nodes; ++k) {
        double s = 0.0, s2 = 0.0, z = 0.0, z2 = 0.0;
        for (int r = 0; r < replicas; ++r) {
            double v = agg.paths[r].mass[k];
            s += v;
            s2 += v * v;
            double zv = agg.paths[r].zeta_mean[k];
            z += zv;
            z2 += zv * zv;
        }
        double R = replicas;
        agg.mass_mean[k] = s / R;
        agg.zeta_mean_mean[k] = z / R;
        if (replicas > 1) {
            agg.mass_se[k] = std::sqrt(std::max(0.0, (s2 - s * s / R) / (R - 1) / R));
            agg.zeta_mean_se[k] = std::sqrt(std::max(0.0, (z2 - z * z / R) / (R - 1) / R));
        }
    }
    return agg;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw config_error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    size_t i = 0, j = 0;
    double D = 0.0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        D = std::max(D, std::abs(i / na - j / nb));
    }
    return std::max(D, std::abs(1.0 - (i < a.size() ? i / na : j / nb)));
}

double ks_threshold(size_t n1, size_t n2, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("ks_threshold: alpha must lie in (0,1)");
    double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n1 + n2) / (static_cast<double>(n1) * n2));
}

} // namespace kbl
