#include "osc/grid.hpp"

#include "osc/norms.hpp"

namespace osc {

namespace {

// Neighbor lookup with torus wraparound; returns -1 when a box neighbor
// would leave the grid.
Index shift(const Grid& g, Index n, int di, int dj) {
    if (const auto* t = std::get_if<TorusGrid>(&g)) {
        const auto m = t->multi(n);
        return t->node(m[0] + di, t->dim == 2 ? m[1] + dj : 0);
    }
    const auto& b = std::get<BoxGrid>(g);
    const auto m = b.multi(n);
    const Index i = m[0] + di;
    if (i < 0 || i > b.cells[0]) return -1;
    if (b.dim == 1) return dj == 0 ? b.node(i) : -1;
    const Index j = m[1] + dj;
    if (j < 0 || j > b.cells[1]) return -1;
    return b.node(i, j);
}

}  // namespace

bool hessian_stencil_available(const GridFunction& u, Index node) {
    const Grid& g = u.grid();
    if (std::holds_alternative<TorusGrid>(g)) return true;
    const int dim = grid_dim(g);
    if (shift(g, node, 1, 0) < 0 || shift(g, node, -1, 0) < 0) return false;
    if (dim == 2) {
        if (shift(g, node, 0, 1) < 0 || shift(g, node, 0, -1) < 0) return false;
        if (shift(g, node, 1, 1) < 0 || shift(g, node, -1, -1) < 0) return false;
        if (shift(g, node, 1, -1) < 0 || shift(g, node, -1, 1) < 0) return false;
    }
    return true;
}

SymMatrix hessian_at(const GridFunction& u, Index node) {
    if (!hessian_stencil_available(u, node))
        throw StencilUnavailable("hessian_at: node too close to the box boundary");
    const Grid& g = u.grid();
    const double h = grid_spacing(g);
    const double ih2 = 1.0 / (h * h);
    const double c = u[node];
    const double uxx = (u[shift(g, node, 1, 0)] - 2.0 * c + u[shift(g, node, -1, 0)]) * ih2;
    if (grid_dim(g) == 1) return SymMatrix(uxx);
    const double uyy = (u[shift(g, node, 0, 1)] - 2.0 * c + u[shift(g, node, 0, -1)]) * ih2;
    const double uxy = (u[shift(g, node, 1, 1)] + u[shift(g, node, -1, -1)] -
                        u[shift(g, node, 1, -1)] - u[shift(g, node, -1, 1)]) *
                       0.25 * ih2;
    return SymMatrix(uxx, uyy, uxy);
}

double holder_quotient(const GridFunction& u, Index center, const AffineFunction& affine,
                       double alpha, double exclusion, double radius) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::domain_error("holder_quotient: alpha must be in (0,1]");
    if (exclusion < 0.0) throw std::domain_error("holder_quotient: exclusion must be >= 0");
    if (exclusion >= radius) throw std::domain_error("holder_quotient: empty annulus");
    const Point c = u.coord(center);
    double sup = 0.0;
    for (Index n = 0; n < u.size(); ++n) {
        const Point p = u.coord(n);
        const double d = distance(p, c);
        if (d <= exclusion || d > radius) continue;
        const double q = std::abs(u[n] - affine(c, p)) / std::pow(d, 1.0 + alpha);
        sup = std::max(sup, q);
    }
    return sup;
}

double second_difference_sup(const GridFunction& u,
                             const std::vector<Point>& exclusion_centers,
                             double exclusion_radius, const Region& region) {
    const int dim = u.dim();
    double sup = 0.0;
    for (Index n = 0; n < u.size(); ++n) {
        const Point p = u.coord(n);
        if (!region.contains(p, dim)) continue;
        bool excluded = false;
        for (const Point& c : exclusion_centers) {
            if (capped_distance(p, c) <= exclusion_radius) {
                excluded = true;
                break;
            }
        }
        if (excluded) continue;
        if (!hessian_stencil_available(u, n)) continue;
        sup = std::max(sup, hessian_at(u, n).frobenius());
    }
    return sup;
}

namespace {

// Trapezoid weight: box-boundary nodes count by the fraction of a cell they
// own, so the weights sum to the domain measure exactly.
double node_weight(const Grid& g, Index n) {
    if (std::holds_alternative<TorusGrid>(g)) return 1.0;
    const auto& b = std::get<BoxGrid>(g);
    const auto m = b.multi(n);
    double w = (m[0] == 0 || m[0] == b.cells[0]) ? 0.5 : 1.0;
    if (b.dim == 2 && (m[1] == 0 || m[1] == b.cells[1])) w *= 0.5;
    return w;
}

}  // namespace

double lp_norm(const GridFunction& u, double p, const Region& region) {
    if (p < 1.0) throw std::domain_error("lp_norm: p must be >= 1");
    const int dim = u.dim();
    const double h = u.spacing();
    const double cell = dim == 1 ? h : h * h;
    bool nonempty = false;
    if (std::isinf(p)) {
        double sup = 0.0;
        for (Index n = 0; n < u.size(); ++n) {
            if (!region.contains(u.coord(n), dim)) continue;
            nonempty = true;
            sup = std::max(sup, std::abs(u[n]));
        }
        if (!nonempty) throw std::domain_error("lp_norm: empty region");
        return sup;
    }
    double acc = 0.0;
    for (Index n = 0; n < u.size(); ++n) {
        if (!region.contains(u.coord(n), dim)) continue;
        nonempty = true;
        acc += std::pow(std::abs(u[n]), p) * cell * node_weight(u.grid(), n);
    }
    if (!nonempty) throw std::domain_error("lp_norm: empty region");
    return std::pow(acc, 1.0 / p);
}

}  // namespace osc
