#include "doctest.h"

#include <cmath>
#include <random>

#include "osc/grid.hpp"
#include "osc/norms.hpp"
#include "oracles.hpp"

using namespace osc;

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;

GridFunction sample_box(const BoxGrid& g, const std::function<double(Point)>& f) {
    GridFunction u{Grid{g}};
    for (Index n = 0; n < g.size(); ++n) u[n] = f(g.coord(n));
    return u;
}
}  // namespace

TEST_CASE("hessian_at is exact on quadratics at every interior node") {
    const SymMatrix M(1.7, -0.4, 0.35);
    for (int cells : {8, 17, 40}) {
        const BoxGrid g = BoxGrid::square(0.0, 1.0, 0.0, 1.0, cells);
        GridFunction u = sample_box(g, [&](Point p) {
            return 0.5 * (M.m11() * p.x * p.x + M.m22() * p.y * p.y) + M.m12() * p.x * p.y;
        });
        for (Index n = 0; n < g.size(); ++n) {
            if (!hessian_stencil_available(u, n)) continue;
            const SymMatrix h = hessian_at(u, n);
            CHECK(std::abs(h.m11() - M.m11()) < 1e-10 * M.frobenius());
            CHECK(std::abs(h.m22() - M.m22()) < 1e-10 * M.frobenius());
            CHECK(std::abs(h.m12() - M.m12()) < 1e-10 * M.frobenius());
        }
    }
}

TEST_CASE("hessian_at of a constant is the zero matrix") {
    const TorusGrid g(1, 32);
    GridFunction u{Grid{g}, std::vector<double>(32, 3.25)};
    for (Index n = 0; n < g.size(); ++n) CHECK(hessian_at(u, n).frobenius() == 0.0);
}

TEST_CASE("hessian_at converges at second order on sin(2 pi x)") {
    // expected value at x = 0.25: -(2 pi)^2 sin(pi/2) = -39.4784176...
    const double exact = -kTwoPi * kTwoPi;
    double prev_err = 0.0;
    for (int res : {64, 128, 256}) {
        const TorusGrid g(1, res);
        GridFunction u{Grid{g}};
        for (Index n = 0; n < g.size(); ++n) u[n] = std::sin(kTwoPi * g.coord(n).x);
        const Index node = g.node(res / 4);
        const double err = std::abs(hessian_at(u, node).m11() - exact);
        CHECK(err < 2.0 * kTwoPi * kTwoPi * std::pow(M_PI / res, 2));
        if (prev_err > 0.0) {
            const double ratio = prev_err / err;
            CHECK(ratio > 3.2);
            CHECK(ratio < 4.8);
        }
        prev_err = err;
    }
    CHECK(std::abs(exact + 39.4784176) < 1e-6);
}

TEST_CASE("hessian_at refuses boundary-adjacent box nodes") {
    const BoxGrid g = BoxGrid::interval(0.0, 1.0, 16);
    GridFunction u{Grid{g}};
    CHECK_THROWS_AS(hessian_at(u, 0), StencilUnavailable);
    CHECK_NOTHROW(hessian_at(u, 1));
}

TEST_CASE("holder_quotient vanishes when u is the supplied affine") {
    const BoxGrid g = BoxGrid::interval(-1.0, 1.0, 64);
    GridFunction u = sample_box(g, [](Point p) { return 0.7 - 1.3 * p.x; });
    AffineFunction l{u[32], -1.3, 0.0};
    CHECK(holder_quotient(u, 32, l, 0.5, 0.0, 0.9) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("holder_quotient of x^2/2 against zero affine at alpha = 1 is 1/2") {
    const BoxGrid g = BoxGrid::interval(-1.0, 1.0, 128);
    GridFunction u = sample_box(g, [](Point p) { return 0.5 * p.x * p.x; });
    const Index center = 64;  // x = 0
    AffineFunction l{0.0, 0.0, 0.0};
    CHECK(holder_quotient(u, center, l, 1.0, 0.0, 0.8) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("holder_quotient is monotone in exclusion and radius") {
    const BoxGrid g = BoxGrid::interval(0.0, 1.0, 128);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    GridFunction u = sample_box(g, [&](Point p) {
        return std::sin(5.0 * p.x) + 0.3 * std::cos(17.0 * p.x);
    });
    const Index center = 64;
    AffineFunction l{u[center], ur(rng), 0.0};
    const double q_base = holder_quotient(u, center, l, 0.5, 0.01, 0.3);
    CHECK(holder_quotient(u, center, l, 0.5, 0.05, 0.3) <= q_base + 1e-14);
    CHECK(holder_quotient(u, center, l, 0.5, 0.01, 0.4) >= q_base - 1e-14);
    CHECK_THROWS_AS(holder_quotient(u, center, l, 0.5, 0.3, 0.2), std::domain_error);
}

TEST_CASE("second_difference_sup of a quadratic is |M| and of zero is zero") {
    const SymMatrix M(2.0, -1.0, 0.5);
    const BoxGrid g = BoxGrid::square(0.0, 1.0, 0.0, 1.0, 32);
    GridFunction u = sample_box(g, [&](Point p) {
        return 0.5 * (M.m11() * p.x * p.x + M.m22() * p.y * p.y) + M.m12() * p.x * p.y;
    });
    CHECK(second_difference_sup(u, {}, 0.0) == doctest::Approx(M.frobenius()).epsilon(1e-9));
    GridFunction z{Grid{g}};
    CHECK(second_difference_sup(z, {}, 0.0) == 0.0);
}

TEST_CASE("second_difference_sup honors exclusion centers") {
    const BoxGrid g = BoxGrid::interval(0.0, 1.0, 64);
    GridFunction u = sample_box(g, [](Point p) {
        const double d = p.x - 0.5;
        return std::exp(-200.0 * d * d);  // concentrated bump at 0.5
    });
    const double with_bump = second_difference_sup(u, {}, 0.0);
    const double without = second_difference_sup(u, {Point{0.5, 0.0}}, 0.2);
    CHECK(without < 0.05 * with_bump);
}

TEST_CASE("lp_norm basics and the sup bound") {
    const BoxGrid g = BoxGrid::interval(0.0, 1.0, 256);
    GridFunction c = sample_box(g, [](Point) { return -2.5; });
    CHECK(lp_norm(c, 3.0) == doctest::Approx(2.5).epsilon(2e-2));
    GridFunction z{Grid{g}};
    CHECK(lp_norm(z, 2.0) == 0.0);
    GridFunction x = sample_box(g, [](Point p) { return p.x; });
    CHECK(lp_norm(x, 2.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-3));
    // sup-norm convention dominates every finite p on the same region
    const double sup = lp_norm(x, std::numeric_limits<double>::infinity());
    for (double p : {1.0, 2.0, 8.0}) CHECK(lp_norm(x, p) <= sup + 1e-12);
    CHECK_THROWS_AS(lp_norm(x, 0.5), std::domain_error);
}

TEST_CASE("grid invariants") {
    CHECK_THROWS(TorusGrid(1, 4));
    CHECK_THROWS(BoxGrid::interval(1.0, 0.0, 16));
    const TorusGrid t(2, 16);
    CHECK(t.wrap(-1) == 15);
    CHECK(t.wrap(16) == 0);
    CHECK(t.spacing() * t.resolution == 1.0);
    const BoxGrid b = BoxGrid::square(0.0, 1.0, 0.0, 0.5, 32);
    int boundary = 0;
    for (Index n = 0; n < b.size(); ++n) boundary += b.is_boundary(n) ? 1 : 0;
    CHECK(boundary == 2 * 33 + 2 * 15);  // every node is interior xor boundary
}
