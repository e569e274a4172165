#pragma once

#include <string>
#include <vector>

#include "osc/bellman.hpp"
#include "osc/grid.hpp"

namespace osc {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonconvergenceError : SolverError {
    NonconvergenceError(const std::string& what, double residual)
        : SolverError(what), last_residual(residual) {}
    double last_residual;
};

struct SolveReport {
    int iterations = 0;
    double final_residual = 0.0;
    std::string method;  // policy-iteration | damped-fixed-point | linear
    double wall_seconds = 0.0;
    std::vector<double> residual_history;  // sup residual after each accepted step
};

/// Stencil topology over the unknowns of a scheme problem: interior nodes of
/// a box (Dirichlet data folded in) or every node of a torus.
class SchemeGrid {
public:
    static SchemeGrid box_interior(const BoxGrid& grid, const std::vector<double>& boundary_values);
    static SchemeGrid torus(const TorusGrid& grid);

    int dim() const { return dim_; }
    double spacing() const { return h_; }
    Index unknown_count() const { return static_cast<Index>(unknown_node_.size()); }
    Index node_count() const { return node_count_; }
    Index unknown_node(Index k) const { return unknown_node_[static_cast<size_t>(k)]; }
    bool is_unknown(Index node) const { return node_unknown_[static_cast<size_t>(node)] >= 0; }
    Index node_unknown(Index node) const { return node_unknown_[static_cast<size_t>(node)]; }

    /// 8 neighbor slots: E W N S NE SW NW SE; entries are full-grid node ids.
    static constexpr int kSlots = 8;
    Index neighbor(Index node, int slot) const {
        return neighbors_[static_cast<size_t>(node) * kSlots + slot];
    }

    double boundary_value(Index node) const { return boundary_[static_cast<size_t>(node)]; }

    DirectionalDiffs diffs(const std::vector<double>& full_values, Index node) const;

private:
    int dim_ = 1;
    double h_ = 0.0;
    Index node_count_ = 0;
    std::vector<Index> unknown_node_;   // unknown -> node
    std::vector<Index> node_unknown_;   // node -> unknown or -1
    std::vector<Index> neighbors_;      // node * 8 + slot (valid for unknowns)
    std::vector<double> boundary_;      // node -> Dirichlet value (box only)
};

enum class ConstantMode {
    None,     // plain Dirichlet / discounted rows
    Ergodic,  // extra unknown c with normalization u(origin) = 0
};

struct SchemeSolution {
    std::vector<double> values;  // full grid, boundary values embedded
    double constant = 0.0;       // ergodic constant when requested
    SolveReport report;
};

/// Howard policy iteration with a non-increase safeguard on the sup residual
/// and a damped fixed-point fallback on policy cycling. Each policy step
/// solves one sparse linear system.
SchemeSolution solve_scheme(const SchemeGrid& sg, const CompiledForm& form,
                            const std::vector<double>& rhs_full, double delta, ConstantMode mode,
                            Index origin_node, double tol, int max_policy_iters,
                            long max_fallback_sweeps = 100000,
                            const std::vector<double>* initial = nullptr);

/// Sup over unknowns of |F_h(u) - delta u - rhs - c|.
double scheme_residual(const SchemeGrid& sg, const CompiledForm& form,
                       const std::vector<double>& full_values, const std::vector<double>& rhs_full,
                       double delta, double constant);

}  // namespace osc
