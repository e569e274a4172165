#include "osc/scheme.hpp"

#include <Eigen/Sparse>

#include <chrono>
#include <cmath>
#include <unordered_set>

namespace osc {

namespace {

// Slot offsets: E W N S NE SW NW SE
constexpr int kDi[8] = {1, -1, 0, 0, 1, -1, 1, -1};
constexpr int kDj[8] = {0, 0, 1, -1, 1, -1, -1, 1};

}  // namespace

SchemeGrid SchemeGrid::box_interior(const BoxGrid& grid, const std::vector<double>& boundary_values) {
    if (static_cast<Index>(boundary_values.size()) != grid.size())
        throw std::invalid_argument("SchemeGrid: boundary value vector must cover the grid");
    SchemeGrid sg;
    sg.dim_ = grid.dim;
    sg.h_ = grid.spacing();
    sg.node_count_ = grid.size();
    sg.node_unknown_.assign(static_cast<size_t>(sg.node_count_), -1);
    sg.neighbors_.assign(static_cast<size_t>(sg.node_count_) * kSlots, -1);
    sg.boundary_ = boundary_values;
    for (Index n = 0; n < sg.node_count_; ++n) {
        if (grid.is_boundary(n)) continue;
        sg.node_unknown_[static_cast<size_t>(n)] = static_cast<Index>(sg.unknown_node_.size());
        sg.unknown_node_.push_back(n);
        const auto m = grid.multi(n);
        const int slots = grid.dim == 1 ? 2 : 8;
        for (int s = 0; s < slots; ++s) {
            const Index i = m[0] + kDi[s];
            const Index j = grid.dim == 2 ? m[1] + kDj[s] : 0;
            sg.neighbors_[static_cast<size_t>(n) * kSlots + s] = grid.node(i, j);
        }
    }
    return sg;
}

SchemeGrid SchemeGrid::torus(const TorusGrid& grid) {
    SchemeGrid sg;
    sg.dim_ = grid.dim;
    sg.h_ = grid.spacing();
    sg.node_count_ = grid.size();
    sg.node_unknown_.resize(static_cast<size_t>(sg.node_count_));
    sg.unknown_node_.resize(static_cast<size_t>(sg.node_count_));
    sg.neighbors_.assign(static_cast<size_t>(sg.node_count_) * kSlots, -1);
    sg.boundary_.assign(static_cast<size_t>(sg.node_count_), 0.0);
    for (Index n = 0; n < sg.node_count_; ++n) {
        sg.node_unknown_[static_cast<size_t>(n)] = n;
        sg.unknown_node_[static_cast<size_t>(n)] = n;
        const auto m = grid.multi(n);
        const int slots = grid.dim == 1 ? 2 : 8;
        for (int s = 0; s < slots; ++s)
            sg.neighbors_[static_cast<size_t>(n) * kSlots + s] =
                grid.node(m[0] + kDi[s], grid.dim == 2 ? m[1] + kDj[s] : 0);
    }
    return sg;
}

DirectionalDiffs SchemeGrid::diffs(const std::vector<double>& v, Index node) const {
    const double ih2 = 1.0 / (h_ * h_);
    const double c = v[static_cast<size_t>(node)];
    auto at = [&](int slot) { return v[static_cast<size_t>(neighbor(node, slot))]; };
    DirectionalDiffs d;
    d.dxx = (at(0) - 2.0 * c + at(1)) * ih2;
    if (dim_ == 2) {
        d.dyy = (at(2) - 2.0 * c + at(3)) * ih2;
        d.dpp = (at(4) - 2.0 * c + at(5)) * ih2;
        d.dmm = (at(6) - 2.0 * c + at(7)) * ih2;
    }
    return d;
}

double scheme_residual(const SchemeGrid& sg, const CompiledForm& form,
                       const std::vector<double>& v, const std::vector<double>& rhs, double delta,
                       double constant) {
    double sup = 0.0;
    for (Index k = 0; k < sg.unknown_count(); ++k) {
        const Index n = sg.unknown_node(k);
        const double r = form.value(n, sg.diffs(v, n)) - delta * v[static_cast<size_t>(n)] -
                         rhs[static_cast<size_t>(n)] - constant;
        sup = std::max(sup, std::abs(r));
    }
    return sup;
}

namespace {

struct LeafWeights {
    // slot weights (E W N S NE SW NW SE) and the center weight
    double w[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    double center = 0.0;
};

LeafWeights leaf_weights(const SymMatrix& A, int dim, double h) {
    const double ih2 = 1.0 / (h * h);
    LeafWeights lw;
    if (dim == 1) {
        lw.w[0] = lw.w[1] = A.m11() * ih2;
        lw.center = -2.0 * A.m11() * ih2;
        return lw;
    }
    const double off = A.m12();
    const double a = std::abs(off);
    const double ax = (A.m11() - a) * ih2;
    const double ay = (A.m22() - a) * ih2;
    lw.w[0] = lw.w[1] = ax;
    lw.w[2] = lw.w[3] = ay;
    if (off >= 0.0)
        lw.w[4] = lw.w[5] = a * ih2;
    else
        lw.w[6] = lw.w[7] = a * ih2;
    lw.center = -2.0 * (ax + ay + a * ih2);
    return lw;
}

std::uint64_t policy_hash(const std::vector<int>& policy) {
    std::uint64_t h = 1469598103934665603ull;
    for (int p : policy) {
        h ^= static_cast<std::uint64_t>(p) + 0x9e3779b97f4a7c15ull;
        h *= 1099511628211ull;
    }
    return h;
}

using Sparse = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Solve the linear problem induced by a fixed policy. For Ergodic mode the
// system is augmented with the constant column and the row u(origin) = 0.
std::pair<std::vector<double>, double> policy_solve(const SchemeGrid& sg, const CompiledForm& form,
                                                    const std::vector<int>& policy,
                                                    const std::vector<double>& rhs, double delta,
                                                    ConstantMode mode, Index origin_node) {
    const Index nu = sg.unknown_count();
    const int dim = sg.dim();
    const double h = sg.spacing();
    const Index dofs = mode == ConstantMode::Ergodic ? nu + 1 : nu;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(nu) * 10);
    Eigen::VectorXd b(dofs);
    for (Index k = 0; k < nu; ++k) {
        const Index n = sg.unknown_node(k);
        const int leaf = policy[static_cast<size_t>(k)];
        const LeafWeights lw = leaf_weights(form.leaf_matrix(n, leaf), dim, h);
        double diag = lw.center - delta;
        double rhs_k = rhs[static_cast<size_t>(n)] - form.leaf_offset(n, leaf);
        const int slots = dim == 1 ? 2 : 8;
        for (int s = 0; s < slots; ++s) {
            if (lw.w[s] == 0.0) continue;
            const Index nb = sg.neighbor(n, s);
            const Index ku = sg.node_unknown(nb);
            if (ku >= 0)
                trips.emplace_back(static_cast<int>(k), static_cast<int>(ku), lw.w[s]);
            else
                rhs_k -= lw.w[s] * sg.boundary_value(nb);
        }
        trips.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
        if (mode == ConstantMode::Ergodic)
            trips.emplace_back(static_cast<int>(k), static_cast<int>(nu), -1.0);
        b(k) = rhs_k;
    }
    if (mode == ConstantMode::Ergodic) {
        const Index ko = sg.node_unknown(origin_node);
        if (ko < 0) throw SolverError("ergodic normalization node is not an unknown");
        trips.emplace_back(static_cast<int>(nu), static_cast<int>(ko), 1.0);
        b(nu) = 0.0;
    }
    Sparse A(static_cast<int>(dofs), static_cast<int>(dofs));
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    Eigen::SparseLU<Sparse> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw SolverError("policy linear system: factorization failed");
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success) throw SolverError("policy linear system: solve failed");
    // One step of iterative refinement; discounted cell solves carry
    // solutions of size O(1/delta) where the bare backward error is visible.
    x += lu.solve(Eigen::VectorXd(b - A * x));
    std::vector<double> full(static_cast<size_t>(sg.node_count()));
    for (Index n = 0; n < sg.node_count(); ++n) {
        const Index ku = sg.node_unknown(n);
        full[static_cast<size_t>(n)] = ku >= 0 ? x(ku) : sg.boundary_value(n);
    }
    const double c = mode == ConstantMode::Ergodic ? x(nu) : 0.0;
    return {std::move(full), c};
}

std::vector<int> select_policy(const SchemeGrid& sg, const CompiledForm& form,
                               const std::vector<double>& v) {
    std::vector<int> policy(static_cast<size_t>(sg.unknown_count()));
    for (Index k = 0; k < sg.unknown_count(); ++k) {
        const Index n = sg.unknown_node(k);
        policy[static_cast<size_t>(k)] = form.select(n, sg.diffs(v, n));
    }
    return policy;
}

}  // namespace

SchemeSolution solve_scheme(const SchemeGrid& sg, const CompiledForm& form,
                            const std::vector<double>& rhs, double delta, ConstantMode mode,
                            Index origin_node, double tol, int max_policy_iters,
                            long max_fallback_sweeps, const std::vector<double>* initial) {
    const auto t0 = std::chrono::steady_clock::now();
    form.audit_monotonicity();
    SchemeSolution out;
    std::vector<double> v = initial ? *initial
                                    : std::vector<double>(static_cast<size_t>(sg.node_count()), 0.0);
    if (!initial) {
        for (Index n = 0; n < sg.node_count(); ++n)
            if (sg.node_unknown(n) < 0) v[static_cast<size_t>(n)] = sg.boundary_value(n);
    }
    double c = 0.0;
    double best = scheme_residual(sg, form, v, rhs, delta, c);
    out.report.residual_history.push_back(best);
    const bool single_leaf = form.leaf_count() == 1;
    std::unordered_set<std::uint64_t> seen;
    bool fallback = false;

    for (int iter = 0; iter < max_policy_iters; ++iter) {
        if (best <= tol) break;
        const std::vector<int> policy = select_policy(sg, form, v);
        if (!seen.insert(policy_hash(policy)).second) {
            fallback = true;  // policy cycle
            break;
        }
        auto [v_new, c_new] = policy_solve(sg, form, policy, rhs, delta, mode, origin_node);
        const double res = scheme_residual(sg, form, v_new, rhs, delta, c_new);
        ++out.report.iterations;
        if (res > best + 1e-12 && !single_leaf) {
            // Safeguard: a policy step must not increase the residual. Keep
            // the better iterate as the fallback seed without logging the
            // rejected step.
            if (res < out.report.residual_history.front()) {
                v = std::move(v_new);
                c = c_new;
            }
            fallback = true;
            break;
        }
        v = std::move(v_new);
        c = c_new;
        best = res;
        out.report.residual_history.push_back(best);
        if (single_leaf) break;
    }

    if (best > tol && !fallback && out.report.iterations >= max_policy_iters) fallback = true;

    out.report.method = single_leaf ? "linear" : "policy-iteration";
    if (fallback && best > tol) {
        out.report.method = "damped-fixed-point";
        best = scheme_residual(sg, form, v, rhs, delta, c);
        const double h = sg.spacing();
        const double ih2 = 1.0 / (h * h);
        // Per-node damped pseudo-time steps sized by the active leaf's
        // center weight; for ergodic mode the constant is re-projected to
        // the mean each sweep.
        for (long sweep = 0; sweep < max_fallback_sweeps && best > tol; ++sweep) {
            double mean_val = 0.0;
            if (mode == ConstantMode::Ergodic) {
                for (Index k = 0; k < sg.unknown_count(); ++k) {
                    const Index n = sg.unknown_node(k);
                    mean_val += form.value(n, sg.diffs(v, n)) - delta * v[static_cast<size_t>(n)] -
                                rhs[static_cast<size_t>(n)];
                }
                c = mean_val / sg.unknown_count();
            }
            for (Index k = 0; k < sg.unknown_count(); ++k) {
                const Index n = sg.unknown_node(k);
                const DirectionalDiffs d = sg.diffs(v, n);
                const int leaf = form.select(n, d);
                const SymMatrix& A = form.leaf_matrix(n, leaf);
                double center;
                if (sg.dim() == 1)
                    center = 2.0 * A.m11() * ih2;
                else
                    center = 2.0 * (A.m11() + A.m22() - std::abs(A.m12())) * ih2;
                const double tau = 0.9 / (center + delta);
                const double r = form.value(n, d) - delta * v[static_cast<size_t>(n)] -
                                 rhs[static_cast<size_t>(n)] - c;
                v[static_cast<size_t>(n)] += tau * r;
            }
            if (mode == ConstantMode::Ergodic) {
                const double shift = v[static_cast<size_t>(origin_node)];
                for (Index k = 0; k < sg.unknown_count(); ++k)
                    v[static_cast<size_t>(sg.unknown_node(k))] -= shift;
            }
            if (sweep % 64 == 63 || sweep == max_fallback_sweeps - 1)
                best = scheme_residual(sg, form, v, rhs, delta, c);
            ++out.report.iterations;
        }
        best = scheme_residual(sg, form, v, rhs, delta, c);
        out.report.residual_history.push_back(best);
    }

    out.report.final_residual = best;
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (best > tol)
        throw NonconvergenceError("scheme solve did not reach tolerance (residual " +
                                      std::to_string(best) + ")",
                                  best);
    out.values = std::move(v);
    out.constant = c;
    return out;
}

}  // namespace osc
