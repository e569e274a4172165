#include "osc/bellman.hpp"

#include <cmath>

namespace osc {

double scheme_apply(const SymMatrix& A, const DirectionalDiffs& d, int dim) {
    if (dim == 1) return A.m11() * d.dxx;
    const double off = A.m12();
    const double a = std::abs(off);
    return (A.m11() - a) * d.dxx + (A.m22() - a) * d.dyy + a * (off >= 0.0 ? d.dpp : d.dmm);
}

DirectionalDiffs diffs_from_matrix(const SymMatrix& S) {
    DirectionalDiffs d;
    d.dxx = S.m11();
    if (S.dim() == 2) {
        d.dyy = S.m22();
        d.dpp = S.m11() + 2.0 * S.m12() + S.m22();
        d.dmm = S.m11() - 2.0 * S.m12() + S.m22();
    }
    return d;
}

namespace {

struct Walk {
    double best = 0.0;
    int leaf = -1;
};

// Evaluate the selection tree at one node, tracking the active leaf.
Walk walk(const ShapeNode& s, const CompiledForm& f, Index node, const DirectionalDiffs& d) {
    switch (s.kind) {
        case ShapeNode::Leaf: {
            const double v = scheme_apply(f.leaf_matrix(node, s.leaf), d, f.dim()) +
                             f.leaf_offset(node, s.leaf);
            return {v, s.leaf};
        }
        case ShapeNode::Min: {
            Walk best = walk(s.children.front(), f, node, d);
            for (size_t i = 1; i < s.children.size(); ++i) {
                Walk w = walk(s.children[i], f, node, d);
                if (w.best < best.best) best = w;
            }
            return best;
        }
        case ShapeNode::Max: {
            Walk best = walk(s.children.front(), f, node, d);
            for (size_t i = 1; i < s.children.size(); ++i) {
                Walk w = walk(s.children[i], f, node, d);
                if (w.best > best.best) best = w;
            }
            return best;
        }
    }
    throw std::logic_error("walk: unknown shape node");
}

// Flattened leaf layout: assign leaf indices by a DFS over the spec tree,
// expanding Pucci nodes into their coefficient family.
struct LeafPlan {
    ShapeNode shape;
    int count = 0;
    // Generators: for each leaf, how to produce (A, c) at a point y.
    struct Gen {
        enum Kind { LinearLeaf, PucciMember } kind = LinearLeaf;
        const CoefficientField* coef = nullptr;
        SymMatrix fixed_matrix;  // PucciMember
    };
    std::vector<Gen> gens;
};

void plan_node(const SpecNode& n, LeafPlan& plan, ShapeNode& out, int dim) {
    switch (n.kind) {
        case NodeKind::Linear: {
            out.kind = ShapeNode::Leaf;
            out.leaf = plan.count++;
            LeafPlan::Gen g;
            g.kind = LeafPlan::Gen::LinearLeaf;
            g.coef = &n.coef;
            plan.gens.push_back(g);
            break;
        }
        case NodeKind::Min:
        case NodeKind::Max: {
            out.kind = n.kind == NodeKind::Min ? ShapeNode::Min : ShapeNode::Max;
            out.children.resize(n.children.size());
            for (size_t i = 0; i < n.children.size(); ++i)
                plan_node(n.children[i], plan, out.children[i], dim);
            break;
        }
        case NodeKind::PucciMinus:
        case NodeKind::PucciPlus: {
            out.kind = n.kind == NodeKind::PucciMinus ? ShapeNode::Min : ShapeNode::Max;
            const double lam = n.pucci_lambda, Lam = n.pucci_Lambda;
            std::vector<SymMatrix> family;
            if (dim == 1) {
                family = {SymMatrix(lam), SymMatrix(Lam)};
            } else {
                const double pairs[2] = {lam, Lam};
                for (int ia = 0; ia < kPucciAngles; ++ia) {
                    const double th = 0.5 * M_PI * ia / kPucciAngles;
                    const double cth = std::cos(th), sth = std::sin(th);
                    for (double m1 : pairs)
                        for (double m2 : pairs) {
                            if (ia > 0 && m1 == m2) continue;  // rotation of c*I is c*I
                            family.emplace_back(m1 * cth * cth + m2 * sth * sth,
                                                m1 * sth * sth + m2 * cth * cth,
                                                (m1 - m2) * cth * sth);
                        }
                }
            }
            for (const SymMatrix& A : family) {
                ShapeNode leaf;
                leaf.kind = ShapeNode::Leaf;
                leaf.leaf = plan.count++;
                LeafPlan::Gen g;
                g.kind = LeafPlan::Gen::PucciMember;
                g.fixed_matrix = A;
                plan.gens.push_back(g);
                out.children.push_back(leaf);
            }
            break;
        }
    }
}

}  // namespace

double CompiledForm::value(Index node, const DirectionalDiffs& d) const {
    return walk(shape_, *this, node, d).best;
}

int CompiledForm::select(Index node, const DirectionalDiffs& d) const {
    return walk(shape_, *this, node, d).leaf;
}

void CompiledForm::audit_monotonicity() const {
    if (dim_ == 1) return;
    for (Index n = 0; n < nodes_; ++n) {
        for (int l = 0; l < leaf_count_; ++l) {
            const SymMatrix& A = leaf_matrix(n, l);
            if (std::abs(A.m12()) > std::min(A.m11(), A.m22()) + 1e-12) {
                throw MonotonicityError(
                    "monotone stencil precondition |a12| <= min(a11,a22) fails at node " +
                    std::to_string(n) + ", leaf " + std::to_string(l) + ": a12 = " +
                    std::to_string(A.m12()) + ", diag = (" + std::to_string(A.m11()) + ", " +
                    std::to_string(A.m22()) + ")");
            }
        }
    }
}

CompiledForm CompiledForm::build(const OperatorSpec& spec, const std::vector<Point>& ys,
                                 const SymMatrix* anchor) {
    CompiledForm f;
    f.dim_ = spec.dim();
    f.nodes_ = static_cast<Index>(ys.size());
    LeafPlan plan;
    plan_node(spec.root(), plan, f.shape_, f.dim_);
    f.leaf_count_ = plan.count;
    f.A_.resize(static_cast<size_t>(f.nodes_) * f.leaf_count_);
    f.c_.resize(f.A_.size());
    for (Index n = 0; n < f.nodes_; ++n) {
        const Point& y = ys[static_cast<size_t>(n)];
        for (int l = 0; l < f.leaf_count_; ++l) {
            const auto& g = plan.gens[static_cast<size_t>(l)];
            const SymMatrix A =
                g.kind == LeafPlan::Gen::LinearLeaf ? g.coef->eval(y) : g.fixed_matrix;
            const size_t at = static_cast<size_t>(n) * f.leaf_count_ + l;
            f.A_[at] = A;
            f.c_[at] = anchor ? A.inner(*anchor) : 0.0;
        }
    }
    return f;
}

CompiledForm CompiledForm::build(const ScaledOperator& op, const std::vector<Point>& ys,
                                 const SymMatrix* anchor) {
    // G(S) = (F(mu S + M + W(y), y) - F(M + W(y), y)) / mu applied to
    // S = anchor + D^2 u. Leaves keep their matrices; the shift and the base
    // value fold into the constant.
    CompiledForm f = build(*op.base(), ys, nullptr);
    const double mu = op.mu();
    for (Index n = 0; n < f.nodes_; ++n) {
        const Point& y = ys[static_cast<size_t>(n)];
        const SymMatrix shift = op.shift(y);
        // The scheme's own value at the shift keeps G(0) = 0 exact even for
        // angle-expanded Pucci leaves.
        const double base_val = f.value(n, diffs_from_matrix(shift));
        for (int l = 0; l < f.leaf_count_; ++l) {
            const size_t at = static_cast<size_t>(n) * f.leaf_count_ + l;
            const SymMatrix& A = f.A_[at];
            double c = (A.inner(shift) - base_val) / mu;
            if (anchor) c += A.inner(*anchor);
            f.c_[at] = c;
        }
    }
    return f;
}

}  // namespace osc
