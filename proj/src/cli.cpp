#include <kbl/cli.hpp>

#include <kbl/analytic.hpp>
#include <kbl/csv.hpp>
#include <kbl/fixed_point.hpp>
#include <kbl/variational.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>

namespace kbl {

int resolve_workers(int configured) {
    const char* env = std::getenv("KBL_WORKERS");
    if (!env || !*env) return configured;
    char* end = nullptr;
    long w = std::strtol(env, &end, 10);
    if (*end != '\0' || w < 1 || w > 4096)
        throw config_error("KBL_WORKERS: expected a positive worker count, got '" +
                           std::string(env) + "'");
    return static_cast<int>(w);
}

namespace {

int grid_node(const TimeGrid& grid, double t, const std::string& what) {
    double kf = t / grid.dt();
    int k = static_cast<int>(std::lround(kf));
    if (k < 0 || k > grid.m || std::abs(grid.t(k) - t) > 1e-9 * std::max(1.0, grid.T))
        throw config_error(what + ": time " + std::to_string(t) + " is not a grid node");
    return k;
}

std::string out_path(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

bool report(std::ostream& log, const std::string& what, bool ok) {
    log << "  [" << (ok ? "PASS" : "FAIL") << "] " << what << "\n";
    return ok;
}

// ---------------------------------------------------------------- lln-check

int cmd_lln_check(const ExperimentConfig& cfg, const std::string& out, std::ostream& log) {
    const auto zeta = cfg.model.make_zeta();
    const auto grid = cfg.model.make_grid();
    const int d = cfg.model.d, R = cfg.run.replicas;
    const int W = resolve_workers(cfg.run.workers);

    RunSpec spec;
    spec.n = cfg.run.n;
    spec.d = d;
    spec.grid = grid;
    spec.zeta = zeta;
    spec.seed = cfg.run.seed;
    spec.keep_ensemble = false;
    spec.collect_kill_times = false;
    for (double t : cfg.lln.checkpoints)
        spec.checkpoint_nodes.push_back(grid_node(grid, t, "lln.checkpoints"));

    ReplicaAggregate agg = run_replicas(spec, R, W);
    LimitProfile lp = solve_limit(zeta, grid, d);
    std::vector<double> dual = dual_mass(lp);

    {
        CsvWriter paths(out_path(out, "lln_paths.csv"), {"replica", "t", "mass", "zeta_mean"});
        for (int r = 0; r < R; ++r)
            for (int k = 0; k <= grid.m; ++k)
                paths.row({csv_num(r), csv_num(grid.t(k)), csv_num(agg.paths[r].mass[k]),
                           csv_num(agg.paths[r].zeta_mean[k])});
    }
    double sup_dev = 0.0, dual_dev = 0.0;
    {
        CsvWriter sum(out_path(out, "lln_summary.csv"),
                      {"t", "mass_mean", "mass_se", "limit_mass", "dual_mass", "abs_dev"});
        for (int k = 0; k <= grid.m; ++k) {
            double dev = std::abs(agg.mass_mean[k] - lp.a[k]);
            sup_dev = std::max(sup_dev, dev);
            dual_dev = std::max(dual_dev, std::abs(dual[k] - lp.a[k]));
            sum.row({csv_num(grid.t(k)), csv_num(agg.mass_mean[k]), csv_num(agg.mass_se[k]),
                     csv_num(lp.a[k]), csv_num(dual[k]), csv_num(dev)});
        }
    }
    {
        auto dict = BLDictionary::standard(d, cfg.lln.dict_count);
        CsvWriter dcsv(out_path(out, "lln_dict.csv"), {"t", "dist_mean", "dist_se"});
        for (size_t c = 0; c < spec.checkpoint_nodes.size(); ++c) {
            int k = spec.checkpoint_nodes[c];
            GaussianMeasure limit{lp.a[k], grid.t(k), d};
            double s = 0.0, s2 = 0.0;
            for (int r = 0; r < R; ++r) {
                EmpiricalFrame frame{spec.n, d, agg.checkpoint_positions[r][c],
                                     agg.checkpoint_alive[r][c]};
                double dist = bl_distance_lower(frame, limit, dict);
                s += dist;
                s2 += dist * dist;
            }
            double mean = s / R;
            double se = R > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / R) / (R - 1.0) / R)) : 0.0;
            dcsv.row({csv_num(grid.t(k)), csv_num(mean), csv_num(se)});
        }
    }

    log << "lln-check: n=" << spec.n << " replicas=" << R << " workers=" << W << "\n";
    std::ostringstream m1;
    m1 << "sup_k |mean mass - limit| = " << sup_dev << " (tolerance " << cfg.lln.tolerance << ")";
    bool ok = report(log, m1.str(), sup_dev <= cfg.lln.tolerance);
    std::ostringstream m2;
    m2 << "dual-formula mass deviation = " << dual_dev << " (bound "
       << 10.0 * grid.dt() * grid.dt() << ")";
    ok &= report(log, m2.str(), dual_dev <= 10.0 * grid.dt() * grid.dt());
    return ok ? 0 : 1;
}

// ----------------------------------------------------------------- simulate

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out, std::ostream& log) {
    const auto zeta = cfg.model.make_zeta();
    const auto grid = cfg.model.make_grid();
    const int W = resolve_workers(cfg.run.workers);

    RunSpec spec;
    spec.n = cfg.run.n;
    spec.d = cfg.model.d;
    spec.grid = grid;
    spec.zeta = zeta;
    spec.seed = cfg.run.seed;
    spec.keep_ensemble = false;
    spec.collect_kill_times = cfg.sim.kill_times;
    if (cfg.control.configured())
        spec.control = cfg.control.make_control(cfg.model.d, grid.m);

    ReplicaAggregate agg = run_replicas(spec, cfg.run.replicas, W);

    {
        CsvWriter paths(out_path(out, "paths.csv"), {"replica", "t", "mass", "zeta_mean"});
        for (int r = 0; r < cfg.run.replicas; ++r)
            for (int k = 0; k <= grid.m; ++k)
                paths.row({csv_num(r), csv_num(grid.t(k)), csv_num(agg.paths[r].mass[k]),
                           csv_num(agg.paths[r].zeta_mean[k])});
    }
    if (cfg.sim.kill_times) {
        CsvWriter kt(out_path(out, "kill_times.csv"), {"replica", "particle", "kill_time"});
        for (int r = 0; r < cfg.run.replicas; ++r)
            for (int i = 0; i < spec.n; ++i)
                kt.row({csv_num(r), csv_num(i), csv_num(agg.kill_times[r][i])});
    }

    log << "simulate: n=" << spec.n << " replicas=" << cfg.run.replicas << " workers=" << W
        << (spec.control ? " control=" + spec.control->label() : std::string(" uncontrolled"))
        << "\n";
    log << "  terminal mass mean = " << agg.mass_mean[grid.m] << " (se " << agg.mass_se[grid.m]
        << ")\n";
    if (spec.control)
        log << "  cost: drift = " << agg.costs[0].drift_cost
            << ", entropy = " << agg.costs[0].entropy_cost << "\n";
    return 0;
}

// -------------------------------------------------------------- fixed-point

int cmd_fixed_point(const ExperimentConfig& cfg, const std::string& out, std::ostream& log) {
    const auto zeta = cfg.model.make_zeta();
    const auto grid = cfg.model.make_grid();
    const int d = cfg.model.d;
    ControlSpec control = cfg.control.configured() ? cfg.control.make_control(d, grid.m)
                                                   : ControlSpec{DriftPolicy::zero(d)};

    ThetaSample th = sample_theta(cfg.fixed_point.M, d, grid, control, cfg.run.seed);
    FixedPointOptions opts;
    opts.tol = cfg.fixed_point.tol;
    opts.max_iter = cfg.fixed_point.max_iter;
    opts.damping = cfg.fixed_point.damping;

    FixedPointResult fp = solve_fixed_point(th, zeta, opts);
    FixedPointOptions opts2 = opts;
    opts2.init = unkilled_hazard(th, zeta);
    FixedPointResult fp2 = solve_fixed_point(th, zeta, opts2);

    double init_gap = 0.0;
    for (int k = 0; k <= grid.m; ++k)
        init_gap = std::max(init_gap, std::abs(fp.hazard.H[k] - fp2.hazard.H[k]));

    const bool zero_ctrl = control.is_zero_control();
    std::vector<double> limit;
    double mass_dev = 0.0;
    if (zero_ctrl) {
        LimitProfile lp = solve_limit(zeta, grid, d);
        limit = lp.a;
        for (int k = 0; k <= grid.m; ++k)
            mass_dev = std::max(mass_dev, std::abs(fp.mass[k] - lp.a[k]));
    }

    {
        std::vector<std::string> header = {"t", "H", "mass", "zeta_mean"};
        if (zero_ctrl) header.push_back("limit_mass");
        CsvWriter fpw(out_path(out, "fixed_point.csv"), header);
        for (int k = 0; k <= grid.m; ++k) {
            std::vector<std::string> row = {csv_num(grid.t(k)), csv_num(fp.hazard.H[k]),
                                            csv_num(fp.mass[k]), csv_num(fp.zeta_mean[k])};
            if (zero_ctrl) row.push_back(csv_num(limit[k]));
            fpw.row(row);
        }
    }

    log << "fixed-point: M=" << cfg.fixed_point.M << " control=" << control.label() << "\n";
    std::ostringstream m1;
    m1 << "converged in " << fp.iterations << " iterations, residual = " << fp.residual
       << " (tol " << opts.tol << ", cap " << opts.max_iter << ")";
    bool ok = report(log, m1.str(), true); // solve_fixed_point throws otherwise
    std::ostringstream m2;
    m2 << "independent inits agree: sup gap = " << init_gap << " (bound " << 2.0 * opts.tol << ")";
    ok &= report(log, m2.str(), init_gap <= 2.0 * opts.tol);
    if (zero_ctrl) {
        std::ostringstream m3;
        m3 << "mass vs deterministic limit: sup dev = " << mass_dev << " (tolerance "
           << cfg.fixed_point.mass_tol << ")";
        ok &= report(log, m3.str(), mass_dev <= cfg.fixed_point.mass_tol);
    }
    return ok ? 0 : 1;
}

// ------------------------------------------------------------ rate-frontier

std::vector<ControlSpec> control_grid(const std::vector<double>& lambdas,
                                      const std::vector<double>& us, int d, int m) {
    std::vector<ControlSpec> family;
    for (double lam : lambdas)
        for (double u : us) {
            ControlSpec spec;
            if (u != 0.0) {
                std::vector<double> uv(d, 0.0);
                uv[0] = u; // scalar drifts act along the first axis
                spec.drift = DriftPolicy::constant(uv, m);
            } else {
                spec.drift = DriftPolicy::zero(d);
            }
            spec.threshold = ThresholdLaw::exponential(lam);
            std::ostringstream name;
            name << "u=" << u << ",lam=" << lam;
            spec.name = name.str();
            family.push_back(std::move(spec));
        }
    return family;
}

int cmd_rate_frontier(const ExperimentConfig& cfg, const std::string& out, std::ostream& log) {
    const auto zeta = cfg.model.make_zeta();
    const auto grid = cfg.model.make_grid();
    const int d = cfg.model.d;

    auto family = control_grid(cfg.frontier.lambda_grid, cfg.frontier.u_grid, d, grid.m);
    FixedPointOptions fpo;
    fpo.tol = cfg.fixed_point.tol;
    fpo.max_iter = cfg.fixed_point.max_iter;
    fpo.damping = cfg.fixed_point.damping;
    auto certs = rate_frontier(family, zeta, grid, cfg.frontier.M, d, cfg.run.seed, fpo,
                               cfg.frontier.bin_width, &log);

    int zero_idx = -1;
    {
        CsvWriter fcsv(out_path(out, "frontier.csv"),
                       {"control", "J", "observable", "fp_iterations", "fp_residual"});
        for (size_t i = 0; i < certs.size(); ++i) {
            const auto& c = certs[i];
            if (c.control.is_zero_control()) zero_idx = static_cast<int>(i);
            fcsv.row({c.control.label(), csv_num(c.J), csv_num(c.observable),
                      csv_num(c.fp_iterations), csv_num(c.fp_residual)});
        }
    }

    log << "rate-frontier: " << certs.size() << " certificates, M=" << cfg.frontier.M << "\n";
    bool ok = report(log, "family contains the zero control", zero_idx >= 0);
    if (zero_idx >= 0) {
        const auto& z = certs[zero_idx];
        std::ostringstream m1;
        m1 << "zero control: J = " << z.J << " (must be exactly 0), observable = " << z.observable
           << " vs " << cfg.frontier.zero_observable << " +- " << cfg.frontier.zero_tolerance;
        ok &= report(log, m1.str(),
                     z.J == 0.0 && std::abs(z.observable - cfg.frontier.zero_observable) <=
                                       cfg.frontier.zero_tolerance);
    }
    bool positive = true;
    for (size_t i = 0; i < certs.size(); ++i)
        if (static_cast<int>(i) != zero_idx && !(certs[i].J > 0.0)) positive = false;
    ok &= report(log, "every tilted certificate pays J > 0", positive);
    return ok ? 0 : 1;
}

// ---------------------------------------------------------- laplace-compare

int cmd_laplace_compare(const ExperimentConfig& cfg, const std::string& out, std::ostream& log) {
    const auto zeta = cfg.model.make_zeta();
    const auto grid = cfg.model.make_grid();
    const int d = cfg.model.d, R = cfg.run.replicas;
    const int W = resolve_workers(cfg.run.workers);
    auto family = control_grid(cfg.laplace.lambda_grid, cfg.laplace.u_grid, d, grid.m);

    CsvWriter lcsv(out_path(out, "laplace.csv"),
                   {"alpha", "n", "mc", "mc_se", "upper", "upper_se", "best_control", "gap"});
    bool ok = true;
    log << "laplace-compare: replicas=" << R << " workers=" << W << " family=" << family.size()
        << "\n";
    for (double alpha : cfg.laplace.alpha_values) {
        FSpec F{alpha, cfg.laplace.beta, cfg.laplace.clip_lo, cfg.laplace.clip_hi};
        std::vector<int> ns = cfg.laplace.n_values;
        std::sort(ns.begin(), ns.end());
        double prev_gap = 0.0, prev_se = 0.0;
        bool have_prev = false;
        for (int n : ns) {
            LaplaceReport rep = laplace_variational_upper(F, family, n, d, grid, zeta, R,
                                                          cfg.run.seed, W, cfg.laplace.refine);
            lcsv.row({csv_num(alpha), csv_num(n), csv_num(rep.mc.value), csv_num(rep.mc.se),
                      csv_num(rep.upper), csv_num(rep.scan[rep.best].se),
                      rep.scan[rep.best].control.label(), csv_num(rep.gap)});

            std::ostringstream m1;
            m1 << "alpha=" << alpha << " n=" << n << ": upper " << rep.upper << " >= mc "
               << rep.mc.value << " - 3se (" << 3.0 * rep.mc.se << ")";
            ok &= report(log, m1.str(), rep.upper >= rep.mc.value - 3.0 * rep.mc.se);
            if (have_prev) {
                double slack = 3.0 * (rep.mc.se + prev_se);
                std::ostringstream m2;
                m2 << "alpha=" << alpha << " n=" << n << ": gap " << rep.gap
                   << " <= previous gap " << prev_gap << " + slack " << slack;
                ok &= report(log, m2.str(), rep.gap <= prev_gap + slack);
            }
            prev_gap = rep.gap;
            prev_se = rep.mc.se;
            have_prev = true;
        }
    }
    return ok ? 0 : 1;
}

// ------------------------------------------------------------- varrep-check

int cmd_varrep_check(const ExperimentConfig& cfg, const std::string& out, std::ostream& log) {
    VarrepOptions vopts;
    vopts.T = cfg.model.T;
    vopts.gh_nodes = cfg.varrep.gh_nodes;
    vopts.gl_nodes = cfg.varrep.gl_nodes;

    CsvWriter vcsv(out_path(out, "varrep.csv"),
                   {"case", "lhs", "rhs", "gap", "u_star", "lambda_star", "quad_gap"});
    bool ok = true;
    log << "varrep-check: gh=" << vopts.gh_nodes << " gl=" << vopts.gl_nodes << " T=" << vopts.T
        << "\n";

    auto emit = [&](const VarrepResult& r) {
        vcsv.row({r.name, csv_num(r.lhs), csv_num(r.rhs), csv_num(r.rhs - r.lhs),
                  csv_num(r.u_star), csv_num(r.lambda_star), csv_num(r.quad_gap)});
    };

    {
        VarrepResult r = varrep_check("const(0.3)", [](double, double) { return 0.3; }, vopts);
        emit(r);
        std::ostringstream m;
        m << "const case: lhs = " << r.lhs << " (expect 0.3), gap = " << r.rhs - r.lhs;
        ok &= report(log, m.str(),
                     std::abs(r.lhs - 0.3) <= 1e-9 && std::abs(r.rhs - r.lhs) <= 1e-9);
    }
    for (double alpha : cfg.varrep.alphas) {
        VarrepResult r = varrep_check("linear(" + std::to_string(alpha) + ")",
                                      [alpha](double, double x) { return alpha * x; }, vopts);
        emit(r);
        double expect = std::log1p(alpha);
        std::ostringstream m;
        m << "linear alpha=" << alpha << ": lhs = " << r.lhs << " (expect " << expect
          << "), |rhs-lhs| = " << std::abs(r.rhs - r.lhs) << ", minimizer (u,lam) = (" << r.u_star
          << "," << r.lambda_star << ")";
        ok &= report(log, m.str(),
                     std::abs(r.lhs - expect) <= 1e-9 && std::abs(r.rhs - r.lhs) <= 1e-5 &&
                         std::abs(r.lambda_star - (1.0 + alpha)) <= 1e-3 &&
                         std::abs(r.u_star) <= 1e-6);
    }
    bool rand_ok = true;
    double worst = 0.0;
    for (int i = 0; i < cfg.varrep.random_cases; ++i) {
        VarrepResult r = varrep_check("random(" + std::to_string(i) + ")",
                                      varrep_random_g(cfg.run.seed, i), vopts);
        emit(r);
        worst = std::min(worst, r.rhs - r.lhs);
        rand_ok &= r.rhs >= r.lhs - 1e-6;
    }
    if (cfg.varrep.random_cases > 0) {
        std::ostringstream m;
        m << cfg.varrep.random_cases << " random integrands: min(rhs - lhs) = " << worst
          << " (must exceed -1e-6)";
        ok &= report(log, m.str(), rand_ok);
    }
    return ok ? 0 : 1;
}

// ------------------------------------------------------------------ wiring

void print_plan(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& log) {
    log << "dry-run: " << opts.command << "\n";
    log << "  model: zeta=" << cfg.model.zeta << "(" << cfg.model.zeta_param
        << ") d=" << cfg.model.d << " T=" << cfg.model.T << " m=" << cfg.model.m << "\n";
    log << "  run: n=" << cfg.run.n << " replicas=" << cfg.run.replicas
        << " seed=" << cfg.run.seed << " workers=" << resolve_workers(cfg.run.workers) << "\n";
    log << "  out: " << opts.out_dir << "\n";
}

} // namespace

int run_command(const CliOptions& opts, std::ostream& log) {
    ExperimentConfig cfg =
        opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
    if (opts.seed) cfg.run.seed = *opts.seed;

    // construct the model objects even on a dry run so bad values surface now
    cfg.model.make_zeta();
    cfg.model.make_grid();
    if (cfg.control.configured()) cfg.control.make_control(cfg.model.d, cfg.model.m);

    if (opts.dry_run) {
        print_plan(cfg, opts, log);
        return 0;
    }
    if (opts.command == "lln-check") return cmd_lln_check(cfg, opts.out_dir, log);
    if (opts.command == "simulate") return cmd_simulate(cfg, opts.out_dir, log);
    if (opts.command == "fixed-point") return cmd_fixed_point(cfg, opts.out_dir, log);
    if (opts.command == "rate-frontier") return cmd_rate_frontier(cfg, opts.out_dir, log);
    if (opts.command == "laplace-compare") return cmd_laplace_compare(cfg, opts.out_dir, log);
    if (opts.command == "varrep-check") return cmd_varrep_check(cfg, opts.out_dir, log);
    throw config_error("unknown command '" + opts.command + "'");
}

int cli_main(const CliOptions& opts, std::ostream& log, std::ostream& err) {
    try {
        return run_command(opts, log);
    } catch (const config_error& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nonconvergence_error& e) {
        err << "numeric error: " << e.what() << " (residual " << e.residual << " after "
            << e.iterations << " iterations)\n";
        return 3;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace kbl
