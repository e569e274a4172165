#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "osc/matrix.hpp"

namespace osc {

using Index = std::int64_t;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// Distance capped at 1, matching d(x,A) = min(dist(x,A), 1).
inline double capped_distance(const Point& a, const Point& b) {
    return std::min(distance(a, b), 1.0);
}

/// Uniform grid on the n-torus [0,1)^n, n in {1,2}. resolution points per
/// axis, spacing 1/resolution; index arithmetic wraps around.
struct TorusGrid {
    int dim = 1;
    int resolution = 8;

    TorusGrid() = default;
    TorusGrid(int dim_, int resolution_) : dim(dim_), resolution(resolution_) {
        if (dim < 1 || dim > 2) throw std::invalid_argument("TorusGrid: dim must be 1 or 2");
        if (resolution < 8) throw std::invalid_argument("TorusGrid: resolution must be >= 8");
    }

    double spacing() const { return 1.0 / resolution; }
    Index size() const { return dim == 1 ? resolution : Index(resolution) * resolution; }

    Index wrap(Index i) const {
        Index m = i % resolution;
        return m < 0 ? m + resolution : m;
    }

    Index node(Index i, Index j = 0) const {
        if (dim == 1) return wrap(i);
        return wrap(j) * resolution + wrap(i);
    }

    std::array<Index, 2> multi(Index n) const {
        if (dim == 1) return {n, 0};
        return {n % resolution, n / resolution};
    }

    Point coord(Index n) const {
        const auto m = multi(n);
        return {m[0] * spacing(), m[1] * spacing()};
    }
};

/// Uniform grid on an axis-aligned box; boundary nodes carry Dirichlet data.
/// In 2-D the spacing must agree across axes (the diagonal stencil needs
/// square cells).
struct BoxGrid {
    int dim = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};
    std::array<int, 2> cells{8, 8};  // nodes per axis = cells + 1

    BoxGrid() = default;

    static BoxGrid interval(double a, double b, int cells) {
        BoxGrid g;
        g.dim = 1;
        g.lo = {a, 0.0};
        g.hi = {b, 0.0};
        g.cells = {cells, 0};
        g.validate();
        return g;
    }

    static BoxGrid square(double ax, double bx, double ay, double by, int cells_x) {
        BoxGrid g;
        g.dim = 2;
        g.lo = {ax, ay};
        g.hi = {bx, by};
        const double h = (bx - ax) / cells_x;
        const double len_y = by - ay;
        const int cells_y = static_cast<int>(std::llround(len_y / h));
        g.cells = {cells_x, cells_y};
        g.validate();
        return g;
    }

    void validate() const {
        if (dim < 1 || dim > 2) throw std::invalid_argument("BoxGrid: dim must be 1 or 2");
        for (int d = 0; d < dim; ++d) {
            if (hi[d] <= lo[d]) throw std::invalid_argument("BoxGrid: empty axis interval");
            if (cells[d] < 2) throw std::invalid_argument("BoxGrid: needs >= 2 cells per axis");
        }
        if (dim == 2) {
            const double hx = (hi[0] - lo[0]) / cells[0];
            const double hy = (hi[1] - lo[1]) / cells[1];
            if (std::abs(hx - hy) > 1e-12 * hx)
                throw std::invalid_argument("BoxGrid: 2-D grids must have square cells");
        }
    }

    double spacing() const { return (hi[0] - lo[0]) / cells[0]; }
    int npts(int d) const { return cells[d] + 1; }
    Index size() const { return dim == 1 ? npts(0) : Index(npts(0)) * npts(1); }

    Index node(Index i, Index j = 0) const { return dim == 1 ? i : j * npts(0) + i; }

    std::array<Index, 2> multi(Index n) const {
        if (dim == 1) return {n, 0};
        return {n % npts(0), n / npts(0)};
    }

    bool is_boundary(Index n) const {
        const auto m = multi(n);
        if (m[0] == 0 || m[0] == cells[0]) return true;
        if (dim == 2 && (m[1] == 0 || m[1] == cells[1])) return true;
        return false;
    }

    Point coord(Index n) const {
        const auto m = multi(n);
        return {lo[0] + m[0] * spacing(), dim == 2 ? lo[1] + m[1] * spacing() : 0.0};
    }

    /// Euclidean distance from node to the boundary of the box.
    double boundary_distance(Index n) const {
        const Point p = coord(n);
        double d = std::min(p.x - lo[0], hi[0] - p.x);
        if (dim == 2) d = std::min({d, p.y - lo[1], hi[1] - p.y});
        return d;
    }
};

using Grid = std::variant<TorusGrid, BoxGrid>;

inline int grid_dim(const Grid& g) {
    return std::visit([](const auto& gr) { return gr.dim; }, g);
}
inline Index grid_size(const Grid& g) {
    return std::visit([](const auto& gr) { return gr.size(); }, g);
}
inline double grid_spacing(const Grid& g) {
    return std::visit([](const auto& gr) { return gr.spacing(); }, g);
}
inline Point grid_coord(const Grid& g, Index n) {
    return std::visit([n](const auto& gr) { return gr.coord(n); }, g);
}

/// Real-valued function sampled on a grid. Values are immutable in spirit:
/// solvers build them once and hand them out by value.
class GridFunction {
public:
    GridFunction() = default;

    explicit GridFunction(Grid grid, double fill = 0.0)
        : grid_(std::move(grid)), values_(grid_size(grid_), fill) {}

    GridFunction(Grid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (static_cast<Index>(values_.size()) != grid_size(grid_))
            throw std::invalid_argument("GridFunction: value count does not match grid");
    }

    const Grid& grid() const { return grid_; }
    int dim() const { return grid_dim(grid_); }
    Index size() const { return static_cast<Index>(values_.size()); }
    double spacing() const { return grid_spacing(grid_); }

    double operator[](Index n) const { return values_[static_cast<size_t>(n)]; }
    double& operator[](Index n) { return values_[static_cast<size_t>(n)]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    Point coord(Index n) const { return grid_coord(grid_, n); }

    bool on_torus() const { return std::holds_alternative<TorusGrid>(grid_); }

    const TorusGrid& torus() const {
        if (!on_torus()) throw std::invalid_argument("GridFunction: torus grid expected");
        return std::get<TorusGrid>(grid_);
    }

    const BoxGrid& box() const {
        if (on_torus()) throw std::invalid_argument("GridFunction: box grid expected");
        return std::get<BoxGrid>(grid_);
    }

    double sup_abs() const {
        double s = 0.0;
        for (double v : values_) s = std::max(s, std::abs(v));
        return s;
    }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    Grid grid_{TorusGrid{1, 8}};
    std::vector<double> values_;
};

struct StencilUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Centered second differences at a node: diagonal entries by the three-point
/// formula, the cross term by the four-point formula. Exact on quadratics.
/// Throws StencilUnavailable at box nodes without a full neighborhood.
SymMatrix hessian_at(const GridFunction& u, Index node);

/// True if every neighbor needed by hessian_at exists (always true on a torus).
bool hessian_stencil_available(const GridFunction& u, Index node);

}  // namespace osc
