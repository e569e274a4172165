#include "osc/blayer.hpp"

#include <cmath>

#include "osc/norms.hpp"

namespace osc {

BoundaryLayerProblem make_boundary_layer_problem(SpecPtr spec, const SymMatrix& M, double epsilon,
                                                 int cells, const CellOptions& cell_opts) {
    BoundaryLayerProblem p;
    p.spec = std::move(spec);
    p.anchor = M;
    p.cell = solve_cell(Operator{p.spec}, M, cell_opts);
    p.epsilon = epsilon;
    p.domain = p.spec->dim() == 1 ? BoxGrid::interval(0.0, 1.0, cells)
                                  : BoxGrid::square(0.0, 1.0, 0.0, 1.0, cells);
    return p;
}

namespace {

double gamma_distance(const BoxGrid& g, const Point& x) {
    // Flat portion of the boundary: {x2 = 0} in 2-D, {x = 0} in 1-D.
    return std::min(g.dim == 1 ? x.x - g.lo[0] : x.y - g.lo[1], 1.0);
}

}  // namespace

BoundaryLayerSolution solve_boundary_layer(const BoundaryLayerProblem& problem, double tol) {
    if (!(problem.cell.anchor == problem.anchor))
        throw std::invalid_argument("solve_boundary_layer: cell anchor mismatch");
    const double eps = problem.epsilon;
    const BoxGrid& g = problem.domain;
    const int dim = g.dim;

    // Translated operator carrying the anchor and the corrector Hessian.
    const ScaledOperator scaled = translate_scale(problem.spec, problem.anchor, 1.0, problem.cell);

    DirichletProblem dp;
    dp.op = Operator{scaled};
    dp.epsilon = eps;
    dp.grid = g;
    dp.rhs = GridFunction(Grid{g});
    dp.boundary = GridFunction(Grid{g});
    const TorusGrid& cg = problem.cell.corrector.torus();
    double bsup = 0.0;
    for (Index n = 0; n < g.size(); ++n) {
        const Point x = g.coord(n);
        const Point y = dp.cell_point(x);
        if (g.is_boundary(n)) {
            const double w = torus_interpolate_cubic(cg, problem.cell.corrector.values(), y);
            dp.boundary[n] = -eps * eps * w;
            bsup = std::max(bsup, std::abs(dp.boundary[n]));
        } else {
            // Interior equation: G(D^2 zeta, x/eps) = Fbar(M) - F(M + D^2 w, x/eps),
            // the right side being the pointwise cell residual.
            dp.rhs[n] = problem.cell.effective_value -
                        evaluate(*problem.spec, scaled.shift(y), y);
        }
    }
    auto [zeta, report] = solve_dirichlet(dp, tol);

    BoundaryLayerSolution out;
    out.zeta = std::move(zeta);
    out.epsilon = eps;
    out.sup_abs = out.zeta.sup_abs();
    out.boundary_data_sup = bsup;

    // Dyadic bands in d(x, Gamma), measured over the window mirroring
    // Omega_{1/2} near the flat portion: the other boundary sides carry the
    // same oscillating data and hold an O(1) Hessian plateau of their own,
    // so the window keeps a fixed margin from them.
    const double h = g.spacing();
    auto in_window = [&](const Point& x) {
        if (dim == 1) return x.x <= g.lo[0] + 0.5 * (g.hi[0] - g.lo[0]);
        return x.x >= g.lo[0] + 0.25 && x.x <= g.hi[0] - 0.25 &&
               x.y <= g.lo[1] + 0.5 * (g.hi[1] - g.lo[1]);
    };
    for (double d_lo = 0.25; d_lo >= 2.0 * h; d_lo *= 0.5) {
        DecayBand band;
        band.d_lo = d_lo;
        band.d_mid = 1.5 * d_lo;
        double sup = 0.0;
        bool seen = false;
        for (Index n = 0; n < g.size(); ++n) {
            if (!hessian_stencil_available(out.zeta, n)) continue;
            const Point x = g.coord(n);
            if (!in_window(x)) continue;
            const double d = gamma_distance(g, x);
            if (d < d_lo || d >= 2.0 * d_lo) continue;
            seen = true;
            sup = std::max(sup, hessian_at(out.zeta, n).frobenius());
        }
        if (!seen) break;
        band.sup_hessian = sup;
        band.reference = eps * eps / (band.d_mid * band.d_mid);
        band.ratio = sup * band.d_mid * band.d_mid / (eps * eps);
        out.bands.push_back(band);
    }

    // Discrete L^p norms of |D^2 zeta| up to Gamma.
    GridFunction hn{Grid{g}};
    for (Index n = 0; n < g.size(); ++n)
        hn[n] = hessian_stencil_available(out.zeta, n) ? hessian_at(out.zeta, n).frobenius() : 0.0;
    for (double p : {4.0, 8.0}) out.lp_hessian.emplace_back(p, lp_norm(hn, p));
    return out;
}

DecayProfile decay_profile(const BoundaryLayerSolution& sol) {
    return DecayProfile{sol.bands, sol.lp_hessian};
}

}  // namespace osc
