#pragma once

#include <vector>

#include "osc/grid.hpp"
#include "osc/operator_spec.hpp"

namespace osc {

/// Periodic multilinear interpolation on a torus grid.
double torus_interpolate(const TorusGrid& g, const std::vector<double>& values, const Point& y);

/// Periodic Catmull-Rom (cubic) interpolation; exact at nodes, third-order
/// accurate in between.
double torus_interpolate_cubic(const TorusGrid& g, const std::vector<double>& values,
                               const Point& y);

/// Symmetric-matrix field on a torus grid (the corrector Hessian D^2_h w),
/// precomputed at nodes and interpolated in between.
class HessianField {
public:
    HessianField() = default;
    explicit HessianField(const GridFunction& torus_function);

    const TorusGrid& grid() const { return grid_; }
    SymMatrix at_node(Index n) const;
    SymMatrix interpolate(const Point& y) const;

private:
    TorusGrid grid_{1, 8};
    std::vector<double> h11_, h22_, h12_;
};

/// The scaled-translated operator
///   F_{M,mu}(N, y) = (F(mu N + M + D^2 w(y), y) - F(M + D^2 w(y), y)) / mu
/// with the corrector Hessian sampled from a cell solution. Shares the base
/// spec's ellipticity constants.
class ScaledOperator {
public:
    ScaledOperator(SpecPtr base, SymMatrix anchor, double mu, GridFunction corrector);

    /// Anchor-free variant (zero corrector); equals the base for mu = 1, M = 0.
    ScaledOperator(SpecPtr base, SymMatrix anchor, double mu);

    const SpecPtr& base() const { return base_; }
    const SymMatrix& anchor() const { return anchor_; }
    double mu() const { return mu_; }
    int dim() const { return base_->dim(); }
    double lambda() const { return base_->lambda(); }
    double Lambda() const { return base_->Lambda(); }
    bool has_corrector() const { return has_corrector_; }
    const HessianField& corrector_hessian() const { return field_; }

    /// M + D^2 w at y (anchor alone when the corrector is absent).
    SymMatrix shift(const Point& y) const;

    double evaluate(const SymMatrix& N, const Point& y) const;

private:
    SpecPtr base_;
    SymMatrix anchor_;
    double mu_;
    bool has_corrector_ = false;
    HessianField field_;
};

EllipticityEstimate ellipticity_margin(const ScaledOperator& op, int sample_count,
                                       unsigned seed = 2026);

}  // namespace osc
