#include "doctest.h"

#include <cmath>

#include "osc/bench.hpp"
#include "osc/solver.hpp"
#include "oracles.hpp"

using namespace osc;

namespace {
const double kSqrt3 = std::sqrt(3.0);
}

TEST_CASE("fit_log2_slope matches pairwise ratios on clean power laws") {
    std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125};
    std::vector<double> err;
    for (double e : eps) err.push_back(3.7 * std::pow(e, 1.8));
    const double slope = fit_log2_slope(eps, err);
    CHECK(slope == doctest::Approx(1.8).epsilon(1e-9));
    for (size_t i = 1; i < eps.size(); ++i) {
        const double pairwise = std::log2(err[i - 1] / err[i]);
        CHECK(std::abs(slope - pairwise) < 0.1);
    }
}

TEST_CASE("frozen effective: exact two-ray form in 1-D") {
    CellOptions opts;
    opts.resolution = 256;
    const auto eff = frozen_effective_spec(builtin_spec("cos1d"), opts);
    CHECK(eff.fit_error < 1e-9);
    CHECK(evaluate(*eff.spec, SymMatrix(1.0), {0, 0}) == doctest::Approx(kSqrt3).epsilon(1e-9));
    CHECK(evaluate(*eff.spec, SymMatrix(-2.0), {0, 0}) ==
          doctest::Approx(-2.0 * kSqrt3).epsilon(1e-9));

    // the min pair has a genuine kink at 0: c_plus < c_minus
    const auto effmin = frozen_effective_spec(builtin_spec("minpair1d"), opts);
    CHECK(effmin.fit_error < 1e-9);
    const double cp = evaluate(*effmin.spec, SymMatrix(1.0), {0, 0});
    const double cm = -evaluate(*effmin.spec, SymMatrix(-1.0), {0, 0});
    CHECK(cp < cm - 0.01);
    const double cp_oracle =
        oracle::harmonic_mean([](double y) { return std::min(oracle::a_cos(y), oracle::a_sin(y)); });
    CHECK(cp == doctest::Approx(cp_oracle).epsilon(1e-4));  // kinked coefficient: O(h^2) cell bias
}

TEST_CASE("frozen effective: y-independent passthrough and 2-D linear") {
    CellOptions opts;
    opts.resolution = 64;
    const auto fro = frozen_effective_spec(builtin_spec("pucci2d"), opts);
    CHECK(fro.spec->y_independent());
    const auto sep = frozen_effective_spec(builtin_spec("sep2d"), opts);
    CHECK(sep.fit_error < 1e-6);
    CHECK(evaluate(*sep.spec, SymMatrix::identity(2), {0, 0}) ==
          doctest::Approx(2.0 * kSqrt3).epsilon(1e-4));
}

TEST_CASE("homogenization sweep on the 1-D model: rate 2 against the effective limit") {
    SweepConfig config;
    config.spec = builtin_spec("cos1d");
    config.epsilons = {0.125, 0.0625, 0.03125};
    config.points_per_eps = 16;
    const auto rep = homogenization_sweep(config);
    REQUIRE(rep.entries.size() == 3);
    for (const auto& e : rep.entries) CHECK(e.ok);
    // integer 1/eps kills the affine drift, so the raw error is the pure
    // eps^2 corrector term; consecutive ratios sit near 4
    for (size_t i = 1; i < rep.entries.size(); ++i) {
        CHECK(rep.entries[i].raw < rep.entries[i - 1].raw);
        CHECK(std::exp2(rep.entries[i].log2_ratio_from_prev) > 1.5);
    }
    CHECK(rep.pass);
    // the raw errors match the quadrature oracle within discretization slack
    for (const auto& e : rep.entries) {
        const oracle::Model1D exact(e.eps);
        double oracle_err = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double x = 0.25 + 0.5 * i / 400.0;
            oracle_err = std::max(oracle_err, std::abs(exact.value(x) - oracle::ubar_model(x)));
        }
        CHECK(e.raw == doctest::Approx(oracle_err).epsilon(0.15));
    }
}

TEST_CASE("two-scale correction beats the raw error on the 1-D model") {
    SweepConfig config;
    config.spec = builtin_spec("cos1d");
    config.epsilons = {0.0625, 0.03125};
    config.points_per_eps = 16;
    config.interior_margin = 0.25;
    const auto rep = homogenization_sweep(config);
    for (const auto& e : rep.entries) {
        CHECK(e.ok);
        CHECK(e.corrected < e.raw);
    }
}

TEST_CASE("y-independent sweep: error is pure discretization, flat in eps") {
    SweepConfig config;
    config.spec = builtin_spec("key1d-concave");
    config.epsilons = {0.25, 0.125};
    config.with_correction = false;
    const auto rep = homogenization_sweep(config);
    for (const auto& e : rep.entries) {
        CHECK(e.ok);
        CHECK(e.raw < 1e-7);  // same operator, same solver, nested grids
    }
}

TEST_CASE("campanato fit: quadratic data is reproduced exactly at every level") {
    // manufactured quadratic for the frozen effective problem
    CellOptions copts;
    copts.resolution = 128;
    const auto eff = frozen_effective_spec(builtin_spec("key1d-concave"), copts);
    const BoxGrid g = BoxGrid::interval(0.0, 1.0, 512);
    const double m = 0.7;
    GridFunction u{Grid{g}};
    for (Index n = 0; n < g.size(); ++n) {
        const double x = g.coord(n).x;
        u[n] = 0.5 * m * (x - 0.5) * (x - 0.5) + 0.3 * (x - 0.5) - 0.2;
    }
    MatrixGrid anchors;
    anchors.dim = 1;
    anchors.lo = 0.0;
    anchors.hi = 1.5;
    anchors.step = 0.25;
    const CorrectorField field(builtin_spec("key1d-concave"), anchors, copts);
    const double f_center = evaluate(*eff.spec, SymMatrix(m), {0, 0});
    const auto fit = campanato_fit(u, g.node(256), 0.5, 4, eff, field, 1.0 / 64.0, f_center);
    REQUIRE(fit.levels.size() >= 2);
    for (const auto& level : fit.levels) {
        CHECK(level.remainder < 1e-10);
        CHECK(level.M.m11() == doctest::Approx(m).epsilon(1e-6));
    }
}

TEST_CASE("campanato fit on the 1-D model: cascade ratios below 1.5 mu^2 + floor") {
    const double eps = 1.0 / 128.0;
    const int cells = 2048;
    auto problem = make_problem(Operator{builtin_spec("cos1d")}, eps,
                                BoxGrid::interval(0.0, 1.0, cells), [](Point) { return 1.0; },
                                [](Point) { return 0.0; });
    auto [u, r] = solve_dirichlet(problem);
    CellOptions copts;
    const auto eff = frozen_effective_spec(builtin_spec("cos1d"), copts);
    MatrixGrid anchors;
    anchors.dim = 1;
    anchors.lo = 0.25;
    anchors.hi = 0.95;
    anchors.step = 0.1;
    const CorrectorField field(builtin_spec("cos1d"), anchors, copts);
    const auto fit =
        campanato_fit(u, problem.grid.node(1024), 0.5, 4, eff, field, eps, 1.0);
    REQUIRE(fit.levels.size() >= 3);
    const double floor = 1e-6 * (1.0 + u.sup_abs());
    for (size_t k = 1; k < fit.levels.size(); ++k) {
        CHECK(fit.levels[k].remainder <= 1.5 * 0.25 * fit.levels[k - 1].remainder + floor);
        // fitted anchors satisfy the constraint
        CHECK(evaluate(*eff.spec, fit.levels[k].M, {0, 0}) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("campanato fit truncates below the resolution floor") {
    const double eps = 1.0 / 16.0;
    auto problem = make_problem(Operator{builtin_spec("cos1d")}, eps,
                                BoxGrid::interval(0.0, 1.0, 256), [](Point) { return 1.0; },
                                [](Point) { return 0.0; });
    auto [u, r] = solve_dirichlet(problem);
    CellOptions copts;
    const auto eff = frozen_effective_spec(builtin_spec("cos1d"), copts);
    MatrixGrid anchors;
    anchors.dim = 1;
    anchors.lo = 0.25;
    anchors.hi = 0.95;
    anchors.step = 0.1;
    const CorrectorField field(builtin_spec("cos1d"), anchors, copts);
    const auto fit = campanato_fit(u, problem.grid.node(128), 0.5, 6, eff, field, eps, 1.0);
    CHECK_FALSE(fit.truncation_note.empty());
    CHECK(fit.levels.size() < 6);
}

TEST_CASE("regularity certificate on the 1-D model") {
    SweepConfig config;
    config.spec = builtin_spec("cos1d");
    config.epsilons = {0.125, 0.0625, 0.03125};
    const auto rep = regularity_certificate(config);
    CHECK(rep.pass);
    for (const auto& f : rep.flags) CHECK(f.pass);
}
