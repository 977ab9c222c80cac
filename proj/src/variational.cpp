#include <kbl/variational.hpp>
#include <kbl/quadrature.hpp>
#include <kbl/rng.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace kbl {

double FSpec::eval(double mass_T) const {
    if (!(lo <= hi)) throw config_error("FSpec: empty clip interval");
    return std::clamp(alpha * mass_T + beta, lo, hi);
}

std::string FSpec::label() const {
    return "clip(" + std::to_string(alpha) + "*m+" + std::to_string(beta) + ",[" +
           std::to_string(lo) + "," + std::to_string(hi) + "])";
}

std::vector<RateCertificate> rate_frontier(const std::vector<ControlSpec>& family,
                                           const KillingFunction& zeta, const TimeGrid& grid,
                                           int M, int d, uint64_t seed,
                                           const FixedPointOptions& fp_opts, double bin_width,
                                           std::ostream* warn) {
    if (family.empty()) throw config_error("rate_frontier: empty control family");
    if (!(bin_width > 0.0)) throw config_error("rate_frontier: bin width must be positive");
    std::vector<RateCertificate> certs;
    certs.reserve(family.size());
    for (size_t c = 0; c < family.size(); ++c) {
        ThetaSample th = sample_theta(M, d, grid, family[c], seed, static_cast<uint32_t>(c));
        FixedPointResult fp = solve_fixed_point(th, zeta, fp_opts);
        RateCertificate cert;
        cert.control = family[c];
        cert.J = j_cost(th);
        cert.observable = fp.mass[grid.m];
        cert.fp_iterations = fp.iterations;
        cert.fp_residual = fp.residual;
        certs.push_back(std::move(cert));
    }
    if (warn) {
        // flag certificates beaten within their own observable bin
        std::map<long, double> bin_min;
        for (const auto& c : certs) {
            long b = std::lround(c.observable / bin_width);
            auto it = bin_min.find(b);
            if (it == bin_min.end() || c.J < it->second) bin_min[b] = c.J;
        }
        for (const auto& c : certs) {
            long b = std::lround(c.observable / bin_width);
            if (c.J > bin_min[b] + 1e-12)
                *warn << "rate_frontier: certificate '" << c.control.label()
                      << "' dominated in its bin (J=" << c.J << " > " << bin_min[b] << ")\n";
        }
    }
    return certs;
}

namespace {

// -(1/n) log mean exp(-n F_r), with a delta-method SE; shifted so the
// constant-F case comes out exact
LaplaceEstimate log_mean_exp(const std::vector<double>& F, int n) {
    const int R = static_cast<int>(F.size());
    double ymax = -std::numeric_limits<double>::infinity();
    for (double f : F) ymax = std::max(ymax, -static_cast<double>(n) * f);
    double s = 0.0, s2 = 0.0;
    for (double f : F) {
        double w = std::exp(-static_cast<double>(n) * f - ymax);
        s += w;
        s2 += w * w;
    }
    double mean = s / R;
    LaplaceEstimate est;
    est.replicas = R;
    est.value = -(ymax + std::log(mean)) / n;
    if (R > 1) {
        double var = std::max(0.0, (s2 - s * s / R) / (R - 1.0));
        est.se = std::sqrt(var / R) / (mean * n);
    }
    return est;
}

std::vector<double> functional_samples(const FSpec& F, const RunSpec& spec, int replicas,
                                       int workers, std::vector<double>* costs) {
    RunSpec rs = spec;
    rs.keep_ensemble = false;
    rs.collect_kill_times = false;
    ReplicaAggregate agg = run_replicas(rs, replicas, workers);
    std::vector<double> out(replicas);
    if (costs) costs->resize(replicas);
    for (int r = 0; r < replicas; ++r) {
        out[r] = F.eval(agg.paths[r].mass[spec.grid.m]);
        if (costs) (*costs)[r] = agg.costs[r].total();
    }
    return out;
}

double golden_min(const std::function<double(double)>& f, double a, double b, double tol) {
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

} // namespace

LaplaceEstimate laplace_mc(const FSpec& F, int n, int d, const TimeGrid& grid,
                           const KillingFunction& zeta, int replicas, uint64_t seed, int workers) {
    if (replicas < 2) throw config_error("laplace_mc: need at least two replicas");
    RunSpec spec;
    spec.n = n;
    spec.d = d;
    spec.grid = grid;
    spec.zeta = zeta;
    spec.seed = seed;
    auto Fs = functional_samples(F, spec, replicas, workers, nullptr);
    return log_mean_exp(Fs, n);
}

LaplaceReport laplace_variational_upper(const FSpec& F, const std::vector<ControlSpec>& family,
                                        int n, int d, const TimeGrid& grid,
                                        const KillingFunction& zeta, int replicas, uint64_t seed,
                                        int workers, bool refine) {
    if (family.empty()) throw config_error("laplace_variational_upper: empty control family");
    LaplaceReport rep;
    rep.F = F;
    rep.n = n;
    rep.mc = laplace_mc(F, n, d, grid, zeta, replicas, seed, workers);

    auto evaluate = [&](const ControlSpec& ctrl) {
        RunSpec spec;
        spec.n = n;
        spec.d = d;
        spec.grid = grid;
        spec.zeta = zeta;
        spec.control = ctrl;
        spec.seed = seed; // common random numbers across the family
        std::vector<double> costs;
        auto Fs = functional_samples(F, spec, replicas, workers, &costs);
        double s = 0.0, s2 = 0.0;
        for (int r = 0; r < replicas; ++r) {
            double v = costs[r] + Fs[r];
            s += v;
            s2 += v * v;
        }
        ControlValue cv;
        cv.control = ctrl;
        cv.mean = s / replicas;
        if (replicas > 1)
            cv.se = std::sqrt(std::max(0.0, (s2 - s * s / replicas) / (replicas - 1.0)) /
                              replicas);
        return cv;
    };

    for (const auto& ctrl : family) rep.scan.push_back(evaluate(ctrl));
    rep.best = 0;
    for (size_t i = 1; i < rep.scan.size(); ++i)
        if (rep.scan[i].mean < rep.scan[rep.best].mean) rep.best = static_cast<int>(i);

    const ControlSpec& bc = rep.scan[rep.best].control;
    if (refine && bc.threshold.kind() == ThresholdLaw::Kind::exp_rate) {
        // polish the threshold rate of the winning control inside its
        // neighbouring grid bracket (noisy MC objective: coarse tolerance)
        std::vector<double> lams;
        for (const auto& c : family)
            if (c.threshold.kind() == ThresholdLaw::Kind::exp_rate)
                lams.push_back(c.threshold.rate());
        std::sort(lams.begin(), lams.end());
        lams.erase(std::unique(lams.begin(), lams.end()), lams.end());
        auto it = std::lower_bound(lams.begin(), lams.end(), bc.threshold.rate());
        double llo = it == lams.begin() ? lams.front() / 2.0 : *(it - 1);
        double lhi = (it + 1) == lams.end() ? lams.back() * 2.0 : *(it + 1);
        auto with_rate = [&](double lam) {
            ControlSpec c = bc;
            c.threshold = ThresholdLaw::exponential(lam);
            c.name = "refined(" + c.drift.label() + ",lam=" + std::to_string(lam) + ")";
            return c;
        };
        double lam = golden_min([&](double l) { return evaluate(with_rate(l)).mean; },
                                llo, lhi, 1e-2);
        ControlValue cv = evaluate(with_rate(lam));
        if (cv.mean < rep.scan[rep.best].mean) {
            rep.scan.push_back(std::move(cv));
            rep.best = static_cast<int>(rep.scan.size()) - 1;
        }
    }
    rep.upper = rep.scan[rep.best].mean;
    rep.gap = rep.upper - rep.mc.value;
    return rep;
}

namespace {

double varrep_lhs_at(const std::function<double(double, double)>& g, double T, int ngh, int ngl) {
    auto gh = gauss_hermite(ngh);
    auto gl = gauss_laguerre(ngl);
    const double s = std::sqrt(2.0 * T), sqrt_pi = 1.7724538509055160273;
    double sum = 0.0;
    for (int i = 0; i < gh.size(); ++i) {
        double w = s * gh.nodes[i];
        double inner = 0.0;
        for (int j = 0; j < gl.size(); ++j)
            inner += gl.weights[j] * std::exp(-g(w, gl.nodes[j]));
        sum += gh.weights[i] * inner;
    }
    return -std::log(sum / sqrt_pi);
}

double varrep_rhs_at(const std::function<double(double, double)>& g, double T, double u,
                     double lambda, int ngh, int ngl) {
    auto gh = gauss_hermite(ngh);
    auto gl = gauss_laguerre(ngl);
    const double s = std::sqrt(2.0 * T), sqrt_pi = 1.7724538509055160273;
    double sum = 0.0;
    for (int i = 0; i < gh.size(); ++i) {
        double w = s * gh.nodes[i] + u * T;
        double inner = 0.0;
        for (int j = 0; j < gl.size(); ++j)
            inner += gl.weights[j] * g(w, gl.nodes[j] / lambda);
        sum += gh.weights[i] * inner;
    }
    return sum / sqrt_pi + 0.5 * u * u * T + entropy_exp(lambda);
}

} // namespace

VarrepResult varrep_check(const std::string& name, const std::function<double(double, double)>& g,
                          const VarrepOptions& opts) {
    if (opts.u_grid.empty() || opts.lambda_grid.empty())
        throw config_error("varrep_check: empty scan grid");
    for (double l : opts.lambda_grid)
        if (!(l > 0.0)) throw config_error("varrep_check: lambda grid must be positive");

    VarrepResult res;
    res.name = name;
    res.gh_nodes = opts.gh_nodes;
    res.gl_nodes = opts.gl_nodes;

    double lhs1 = varrep_lhs_at(g, opts.T, opts.gh_nodes, opts.gl_nodes);
    double lhs2 = varrep_lhs_at(g, opts.T, 2 * opts.gh_nodes, 2 * opts.gl_nodes);
    res.quad_gap = std::abs(lhs2 - lhs1);
    if (!(res.quad_gap <= 1e-6) || !std::isfinite(lhs2)) // NaN-safe
        throw numeric_error("varrep_check: Laplace quadrature not converged (doubling moved it)");
    res.lhs = lhs2;

    size_t bu = 0, bl = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t iu = 0; iu < opts.u_grid.size(); ++iu)
        for (size_t il = 0; il < opts.lambda_grid.size(); ++il) {
            double v = varrep_rhs_at(g, opts.T, opts.u_grid[iu], opts.lambda_grid[il],
                                     opts.gh_nodes, opts.gl_nodes);
            if (v < best) {
                best = v;
                bu = iu;
                bl = il;
            }
        }
    res.rhs_grid = best;
    res.u_star = opts.u_grid[bu];
    res.lambda_star = opts.lambda_grid[bl];
    res.rhs = best;

    if (opts.refine) {
        // polish one axis at a time inside the neighbouring grid brackets
        auto lam_sorted = opts.lambda_grid;
        std::sort(lam_sorted.begin(), lam_sorted.end());
        auto it = std::lower_bound(lam_sorted.begin(), lam_sorted.end(), res.lambda_star);
        double llo = it == lam_sorted.begin() ? lam_sorted.front() / 2.0 : *(it - 1);
        double lhi = (it + 1) == lam_sorted.end() ? lam_sorted.back() * 2.0 : *(it + 1);
        double lam = golden_min(
            [&](double l) {
                return varrep_rhs_at(g, opts.T, res.u_star, l, opts.gh_nodes, opts.gl_nodes);
            },
            llo, lhi, 1e-9);

        auto u_sorted = opts.u_grid;
        std::sort(u_sorted.begin(), u_sorted.end());
        auto iu = std::lower_bound(u_sorted.begin(), u_sorted.end(), res.u_star);
        double ulo = iu == u_sorted.begin() ? u_sorted.front() - 1.0 : *(iu - 1);
        double uhi = (iu + 1) == u_sorted.end() ? u_sorted.back() + 1.0 : *(iu + 1);
        double uu = golden_min(
            [&](double v) {
                return varrep_rhs_at(g, opts.T, v, lam, opts.gh_nodes, opts.gl_nodes);
            },
            ulo, uhi, 1e-10);

        double refined = varrep_rhs_at(g, opts.T, uu, lam, 2 * opts.gh_nodes, 2 * opts.gl_nodes);
        if (refined <= res.rhs) {
            res.rhs = refined;
            res.u_star = uu;
            res.lambda_star = lam;
        }
    }
    return res;
}

std::function<double(double, double)> varrep_random_g(uint64_t seed, int index) {
    RngStream st(seed, StreamDomain::scratch, static_cast<uint32_t>(index));
    double q0 = 2.0 * st.uniform(0) - 1.0;
    double q1 = 2.0 * st.uniform(1) - 1.0;
    double q2 = 2.0 * st.uniform(2) - 1.0;
    double q3 = 2.0 * st.uniform(3) - 1.0;
    return [=](double w, double x) {
        double ex = -std::expm1(-x); // 1 - e^{-x}
        return q0 * std::tanh(w) + q1 * ex + q2 * std::tanh(w) * ex +
               q3 * std::cos(w) * std::exp(-0.5 * x);
    };
}

} // namespace kbl
