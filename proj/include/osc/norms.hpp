#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "osc/grid.hpp"

namespace osc {

/// Axis-aligned sub-box of a grid's coordinate domain, used to select nodes.
/// Default-constructed region contains everything.
struct Region {
    std::array<double, 2> lo{-std::numeric_limits<double>::infinity(),
                             -std::numeric_limits<double>::infinity()};
    std::array<double, 2> hi{std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity()};

    static Region all() { return {}; }

    /// Nodes at distance >= margin from the box boundary.
    static Region interior_of(const BoxGrid& g, double margin) {
        Region r;
        r.lo = {g.lo[0] + margin, g.lo[1] + margin};
        r.hi = {g.hi[0] - margin, g.hi[1] - margin};
        return r;
    }

    bool contains(const Point& p, int dim) const {
        const double eps = 1e-12;
        if (p.x < lo[0] - eps || p.x > hi[0] + eps) return false;
        if (dim == 2 && (p.y < lo[1] - eps || p.y > hi[1] + eps)) return false;
        return true;
    }
};

struct AffineFunction {
    double value = 0.0;       // value at the anchor point
    double gx = 0.0, gy = 0.0;  // gradient

    double operator()(const Point& anchor, const Point& p) const {
        return value + gx * (p.x - anchor.x) + gy * (p.y - anchor.y);
    }
};

/// sup over nodes with exclusion < |x - center| <= radius of
/// |u(x) - l(x)| / |x - center|^(1+alpha), l anchored at the center node.
double holder_quotient(const GridFunction& u, Index center, const AffineFunction& affine,
                       double alpha, double exclusion, double radius);

/// sup of |hessian_at| (Frobenius) over region nodes at capped distance
/// > exclusion_radius from every exclusion center. Box nodes without a full
/// stencil are skipped.
double second_difference_sup(const GridFunction& u,
                             const std::vector<Point>& exclusion_centers,
                             double exclusion_radius, const Region& region = Region::all());

/// Discrete L^p norm (h^n sum |u|^p)^(1/p) over region nodes; p = infinity
/// gives the sup norm.
double lp_norm(const GridFunction& u, double p, const Region& region = Region::all());

}  // namespace osc
