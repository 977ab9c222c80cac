#include <doctest.h>

#include <kbl/analytic.hpp>
#include <kbl/variational.hpp>

#include <cmath>

using namespace kbl;

TEST_CASE("functional spec clips where it should") {
    FSpec F{2.0, -0.3, 0.0, 1.0};
    CHECK(F.eval(0.4) == doctest::Approx(0.5));
    CHECK(F.eval(0.0) == 0.0);  // clipped below
    CHECK(F.eval(0.9) == 1.0);  // clipped above
    FSpec bad{1.0, 0.0, 1.0, 0.0};
    CHECK_THROWS_AS(bad.eval(0.5), config_error);
}

TEST_CASE("laplace estimator is exact for constant functionals") {
    // F == 0.3 regardless of the path: -(1/n) log mean exp(-n 0.3) = 0.3
    FSpec F{0.0, 0.3, 0.0, 1.0};
    LaplaceEstimate est = laplace_mc(F, 50, 1, TimeGrid(1.0, 20),
                                     KillingFunction::constant(1.0), 6, 99, 2);
    CHECK(est.value == 0.3);
    CHECK(est.se == 0.0);
    CHECK(est.replicas == 6);
    CHECK_THROWS_AS(laplace_mc(F, 50, 1, TimeGrid(1.0, 20), KillingFunction::constant(1.0),
                               1, 99, 1),
                    config_error);
}

TEST_CASE("variational identity: linear observable off the scan grid") {
    // g(w, x) = alpha x has lhs log(1+alpha), minimised at u = 0,
    // lambda = 1 + alpha; alpha = 0.3 keeps the optimum off the default
    // lambda grid, so only the golden polish can reach it
    VarrepOptions opts;
    VarrepResult r = varrep_check("lin", [](double, double x) { return 0.3 * x; }, opts);
    CHECK(r.lhs == doctest::Approx(std::log(1.3)).epsilon(1e-10));
    CHECK(std::abs(r.rhs - r.lhs) <= 1e-5);
    CHECK(r.rhs >= r.lhs - 1e-9); // scan side of an exact identity stays above
    CHECK(r.lambda_star == doctest::Approx(1.3).epsilon(1e-3));
    CHECK(std::abs(r.u_star) <= 1e-6);
    CHECK(r.rhs <= r.rhs_grid); // polish only ever improves on the grid
    CHECK(r.quad_gap <= 1e-6);
}

TEST_CASE("variational identity: constant and w-dependent cases") {
    VarrepResult c = varrep_check("const", [](double, double) { return 0.42; });
    CHECK(c.lhs == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(std::abs(c.rhs - c.lhs) <= 1e-9);

    // g(w, x) = w^2 / 8: lhs = -log E exp(-W^2/8) = 0.5 log(1 + T/4)
    VarrepResult q = varrep_check("quad", [](double w, double) { return w * w / 8.0; });
    CHECK(q.lhs == doctest::Approx(0.5 * std::log(1.25)).epsilon(1e-10));
    CHECK(q.rhs >= q.lhs - 1e-9);
}

TEST_CASE("variational upper bound holds on random bounded integrands") {
    for (int i = 0; i < 5; ++i) {
        auto g = varrep_random_g(2024, i);
        // deterministic: the same (seed, index) builds the same function
        CHECK(g(0.7, 1.1) == varrep_random_g(2024, i)(0.7, 1.1));
        CHECK(std::abs(g(0.3, 2.0)) <= 4.0);
        VarrepResult r = varrep_check("rand", g);
        CHECK(r.rhs >= r.lhs - 1e-6);
        CHECK(r.rhs >= r.lhs - 1e-9); // in practice the gap is nonnegative
    }
}

TEST_CASE("unresolvable quadrature is refused, not silently wrong") {
    // frequency 40 is far beyond what 64..128 Hermite nodes resolve
    CHECK_THROWS_AS(varrep_check("wild", [](double w, double) { return std::cos(40.0 * w); }),
                    numeric_error);
}

TEST_CASE("rate frontier: reference control is free, tilts pay exactly") {
    TimeGrid grid(1.0, 40);
    auto zeta = KillingFunction::constant(1.0);
    std::vector<ControlSpec> family;
    family.push_back(ControlSpec{DriftPolicy::zero(1)});
    family.push_back(ControlSpec{DriftPolicy::zero(1), ThresholdLaw::exponential(2.0), "l2"});
    auto certs = rate_frontier(family, zeta, grid, 20000, 1, 11);
    REQUIRE(certs.size() == 2);
    CHECK(certs[0].J == 0.0); // exactly free
    CHECK(certs[0].observable == doctest::Approx(0.5).epsilon(0.03));
    CHECK(certs[1].J == entropy_exp(2.0)); // pure threshold tilt: entropy only
    CHECK(certs[1].observable == doctest::Approx(1.0 / 3.0).epsilon(0.03));
    CHECK(certs[1].fp_residual < 1e-6);
    CHECK_THROWS_AS(rate_frontier({}, zeta, grid, 100, 1, 1), config_error);
}

TEST_CASE("laplace upper bound dominates the MC value") {
    TimeGrid grid(1.0, 40);
    auto zeta = KillingFunction::constant(1.0);
    FSpec F{1.0, 0.0, 0.0, 1.0};
    std::vector<ControlSpec> family;
    family.push_back(ControlSpec{DriftPolicy::zero(1)});
    family.push_back(ControlSpec{DriftPolicy::zero(1), ThresholdLaw::exponential(1.25), "l"});
    LaplaceReport rep = laplace_variational_upper(F, family, 200, 1, grid, zeta, 6, 4, 2);
    CHECK(rep.scan.size() == 2);
    CHECK(rep.best >= 0);
    CHECK(rep.upper >= rep.mc.value - 3.0 * rep.mc.se);
    CHECK(rep.gap == rep.upper - rep.mc.value);
    // fully deterministic: rerunning reproduces every digit
    LaplaceReport rep2 = laplace_variational_upper(F, family, 200, 1, grid, zeta, 6, 4, 2);
    CHECK(rep.mc.value == rep2.mc.value);
    CHECK(rep.upper == rep2.upper);
    CHECK(rep.scan[0].mean == rep2.scan[0].mean);
}

TEST_CASE("laplace refinement can only lower the bound") {
    TimeGrid grid(1.0, 30);
    auto zeta = KillingFunction::constant(1.0);
    FSpec F{1.0, 0.0, 0.0, 1.0};
    std::vector<ControlSpec> family;
    family.push_back(ControlSpec{DriftPolicy::zero(1)});
    family.push_back(ControlSpec{DriftPolicy::zero(1), ThresholdLaw::exponential(1.5), "a"});
    family.push_back(ControlSpec{DriftPolicy::zero(1), ThresholdLaw::exponential(2.0), "b"});
    LaplaceReport plain = laplace_variational_upper(F, family, 150, 1, grid, zeta, 4, 7, 2, false);
    LaplaceReport ref = laplace_variational_upper(F, family, 150, 1, grid, zeta, 4, 7, 2, true);
    CHECK(ref.upper <= plain.upper);
    // Do NOT compare against mc - 3se here: few-replica plain MC is biased
    // upward on this rare-event functional, and a well-polished bound rightly
    // dips below it.  The honest floor is the family's analytic limit value,
    //   min_lambda R(lambda) + 1/(1 + lambda T),
    // up to the bound's own sampling error.
    double analytic = std::numeric_limits<double>::infinity();
    for (double lam = 0.5; lam <= 4.0; lam += 1e-4)
        analytic = std::min(analytic, entropy_exp(lam) + 1.0 / (1.0 + lam * grid.T));
    CHECK(ref.upper >= analytic - 3.0 * ref.scan[ref.best].se - 0.05 /* finite-n slack */);
}
