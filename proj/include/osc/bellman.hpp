#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "osc/grid.hpp"
#include "osc/scaled_operator.hpp"

namespace osc {

/// Directional second differences of a grid function at a node. The monotone
/// scheme applies coefficient matrices to these rather than to the raw cross
/// stencil: tr(A D^2 u) is discretized as
///   (a11-|a12|) dxx + (a22-|a12|) dyy + |a12| (a12>=0 ? dpp : dmm),
/// which is exact on quadratics and monotone when |a12| <= min(a11, a22).
struct DirectionalDiffs {
    double dxx = 0.0;
    double dyy = 0.0;
    double dpp = 0.0;  // second difference along (1, 1)
    double dmm = 0.0;  // second difference along (1, -1)
};

/// Scheme value of a linear leaf with coefficient matrix A on directional
/// differences.
double scheme_apply(const SymMatrix& A, const DirectionalDiffs& d, int dim);

/// Differences representing a literal matrix argument S, so that
/// scheme_apply(A, diffs_from_matrix(S)) == tr(A S) exactly.
DirectionalDiffs diffs_from_matrix(const SymMatrix& S);

struct MonotonicityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape of the min/max selection tree, shared by every node of a compiled
/// form. Leaves index into the per-node affine-leaf table.
struct ShapeNode {
    enum Kind { Leaf, Min, Max } kind = Leaf;
    int leaf = -1;
    std::vector<ShapeNode> children;
};

/// One problem operator compiled to per-node affine leaves:
///   F_node(D^2 u) = minmax over leaves of [ scheme_apply(A_l, D^2_h u) + c_l ].
/// Pucci leaves are expanded into a finite family of admissible coefficient
/// matrices (axis-aligned plus rotated eigenframes); anchors, corrector
/// fields and translate/scale offsets are folded into the constants c_l.
class CompiledForm {
public:
    CompiledForm() = default;

    int dim() const { return dim_; }
    Index nodes() const { return nodes_; }
    int leaf_count() const { return leaf_count_; }
    const ShapeNode& shape() const { return shape_; }

    const SymMatrix& leaf_matrix(Index node, int leaf) const {
        return A_[static_cast<size_t>(node) * leaf_count_ + leaf];
    }
    double leaf_offset(Index node, int leaf) const {
        return c_[static_cast<size_t>(node) * leaf_count_ + leaf];
    }

    double value(Index node, const DirectionalDiffs& d) const;
    int select(Index node, const DirectionalDiffs& d) const;

    /// Rejects leaves violating |a12| <= min(a11, a22); reports the first
    /// offending node and entry.
    void audit_monotonicity() const;

    static CompiledForm build(const OperatorSpec& spec, const std::vector<Point>& ys,
                              const SymMatrix* anchor = nullptr);
    static CompiledForm build(const ScaledOperator& op, const std::vector<Point>& ys,
                              const SymMatrix* anchor = nullptr);

private:
    int dim_ = 1;
    Index nodes_ = 0;
    int leaf_count_ = 0;
    ShapeNode shape_;
    std::vector<SymMatrix> A_;
    std::vector<double> c_;
};

/// Number of rotation angles used to expand a 2-D Pucci leaf.
constexpr int kPucciAngles = 8;

}  // namespace osc
