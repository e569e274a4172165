#include "osc/scaled_operator.hpp"

#include <cmath>
#include <random>

namespace osc {

double torus_interpolate(const TorusGrid& g, const std::vector<double>& values, const Point& y) {
    const int n = g.resolution;
    const double fx = y.x * n;
    const Index ix = static_cast<Index>(std::floor(fx));
    const double tx = fx - ix;
    if (g.dim == 1) {
        const double v0 = values[static_cast<size_t>(g.wrap(ix))];
        const double v1 = values[static_cast<size_t>(g.wrap(ix + 1))];
        return v0 * (1.0 - tx) + v1 * tx;
    }
    const double fy = y.y * n;
    const Index iy = static_cast<Index>(std::floor(fy));
    const double ty = fy - iy;
    const double v00 = values[static_cast<size_t>(g.node(ix, iy))];
    const double v10 = values[static_cast<size_t>(g.node(ix + 1, iy))];
    const double v01 = values[static_cast<size_t>(g.node(ix, iy + 1))];
    const double v11 = values[static_cast<size_t>(g.node(ix + 1, iy + 1))];
    return (v00 * (1.0 - tx) + v10 * tx) * (1.0 - ty) + (v01 * (1.0 - tx) + v11 * tx) * ty;
}

namespace {

double catmull_rom(double vm1, double v0, double v1, double v2, double t) {
    const double a = -0.5 * vm1 + 1.5 * v0 - 1.5 * v1 + 0.5 * v2;
    const double b = vm1 - 2.5 * v0 + 2.0 * v1 - 0.5 * v2;
    const double c = 0.5 * (v1 - vm1);
    return ((a * t + b) * t + c) * t + v0;
}

}  // namespace

double torus_interpolate_cubic(const TorusGrid& g, const std::vector<double>& values,
                               const Point& y) {
    const int n = g.resolution;
    const double fx = y.x * n;
    const Index ix = static_cast<Index>(std::floor(fx));
    const double tx = fx - ix;
    auto row = [&](Index j) {
        auto at = [&](Index i) { return values[static_cast<size_t>(g.node(i, j))]; };
        return catmull_rom(at(ix - 1), at(ix), at(ix + 1), at(ix + 2), tx);
    };
    if (g.dim == 1) {
        auto at = [&](Index i) { return values[static_cast<size_t>(g.wrap(i))]; };
        return catmull_rom(at(ix - 1), at(ix), at(ix + 1), at(ix + 2), tx);
    }
    const double fy = y.y * n;
    const Index iy = static_cast<Index>(std::floor(fy));
    const double ty = fy - iy;
    return catmull_rom(row(iy - 1), row(iy), row(iy + 1), row(iy + 2), ty);
}

HessianField::HessianField(const GridFunction& w) : grid_(w.torus()) {
    const Index n = w.size();
    h11_.resize(n);
    h22_.resize(grid_.dim == 2 ? n : 0);
    h12_.resize(grid_.dim == 2 ? n : 0);
    for (Index i = 0; i < n; ++i) {
        const SymMatrix h = hessian_at(w, i);
        h11_[static_cast<size_t>(i)] = h.m11();
        if (grid_.dim == 2) {
            h22_[static_cast<size_t>(i)] = h.m22();
            h12_[static_cast<size_t>(i)] = h.m12();
        }
    }
}

SymMatrix HessianField::at_node(Index n) const {
    if (grid_.dim == 1) return SymMatrix(h11_[static_cast<size_t>(n)]);
    return SymMatrix(h11_[static_cast<size_t>(n)], h22_[static_cast<size_t>(n)],
                     h12_[static_cast<size_t>(n)]);
}

SymMatrix HessianField::interpolate(const Point& y) const {
    if (grid_.dim == 1) return SymMatrix(torus_interpolate_cubic(grid_, h11_, y));
    return SymMatrix(torus_interpolate_cubic(grid_, h11_, y),
                     torus_interpolate_cubic(grid_, h22_, y),
                     torus_interpolate_cubic(grid_, h12_, y));
}

ScaledOperator::ScaledOperator(SpecPtr base, SymMatrix anchor, double mu, GridFunction corrector)
    : base_(std::move(base)), anchor_(anchor), mu_(mu), has_corrector_(true), field_(corrector) {
    if (mu_ <= 0.0) throw std::invalid_argument("ScaledOperator: mu must be > 0");
    if (anchor_.dim() != base_->dim())
        throw std::invalid_argument("ScaledOperator: anchor dimension mismatch");
}

ScaledOperator::ScaledOperator(SpecPtr base, SymMatrix anchor, double mu)
    : base_(std::move(base)), anchor_(anchor), mu_(mu) {
    if (mu_ <= 0.0) throw std::invalid_argument("ScaledOperator: mu must be > 0");
    if (anchor_.dim() != base_->dim())
        throw std::invalid_argument("ScaledOperator: anchor dimension mismatch");
}

SymMatrix ScaledOperator::shift(const Point& y) const {
    if (!has_corrector_) return anchor_;
    return anchor_ + field_.interpolate(y);
}

double ScaledOperator::evaluate(const SymMatrix& N, const Point& y) const {
    const SymMatrix c = shift(y);
    return (osc::evaluate(*base_, N * mu_ + c, y) - osc::evaluate(*base_, c, y)) / mu_;
}

EllipticityEstimate ellipticity_margin(const ScaledOperator& op, int sample_count, unsigned seed) {
    if (sample_count < 100)
        throw std::invalid_argument("ellipticity_margin: sample_count must be >= 100");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> yu(0.0, 1.0);
    const int dim = op.dim();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < sample_count; ++s) {
        SymMatrix M = dim == 1 ? SymMatrix(2.0 * u(rng)) : SymMatrix(2.0 * u(rng), 2.0 * u(rng), 2.0 * u(rng));
        SymMatrix N(1.0);
        if (dim == 2) {
            const double b11 = u(rng), b12 = u(rng), b21 = u(rng), b22 = u(rng);
            N = SymMatrix(b11 * b11 + b21 * b21, b12 * b12 + b22 * b22, b11 * b12 + b21 * b22);
            const double f = N.frobenius();
            if (f < 1e-8) continue;
            N = N * (1.0 / f);
        }
        const Point y{yu(rng), dim == 2 ? yu(rng) : 0.0};
        const double q = op.evaluate(M + N, y) - op.evaluate(M, y);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    if (lo <= 0.0) throw DegeneracyError("scaled operator: observed ellipticity lower estimate <= 0");
    return {lo, hi};
}

}  // namespace osc
