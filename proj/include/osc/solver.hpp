#pragma once

#include <limits>
#include <variant>

#include "osc/scheme.hpp"

namespace osc {

using Operator = std::variant<SpecPtr, ScaledOperator>;

int operator_dim(const Operator& op);

/// Dirichlet problem F(D^2 u, x/eps) - delta u = f on a box grid.
/// eps = infinity freezes the coefficients at y = 0. Oscillations must be
/// resolved: eps > 2 h unless allow_unresolved is set.
struct DirichletProblem {
    Operator op;
    double epsilon = std::numeric_limits<double>::infinity();
    BoxGrid grid;
    GridFunction rhs;       // sampled on grid; interior values used
    GridFunction boundary;  // sampled on grid; boundary values used
    double delta = 0.0;
    bool allow_unresolved = false;

    /// y = x / eps wrapped to the unit cell (0 when frozen).
    Point cell_point(const Point& x) const;
};

DirichletProblem make_problem(Operator op, double epsilon, BoxGrid grid,
                              const std::function<double(Point)>& f,
                              const std::function<double(Point)>& g, double delta = 0.0);

constexpr double kDefaultSolveTol = 1e-8;
constexpr int kDefaultMaxPolicies = 200;

std::pair<GridFunction, SolveReport> solve_dirichlet(const DirichletProblem& problem,
                                                     double tol = kDefaultSolveTol,
                                                     int max_iter = kDefaultMaxPolicies);

/// Sup over interior nodes of |F(D^2_h u, x/eps) - delta u - f| under the
/// solver's own discretization.
double residual(const DirichletProblem& problem, const GridFunction& u);

struct AuditInapplicable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Checks that u_sub / u_super are discrete sub/supersolutions with ordered
/// boundary data (else throws AuditInapplicable), then reports whether
/// u_sub <= u_super everywhere.
bool comparison_audit(const DirichletProblem& problem, const GridFunction& u_sub,
                      const GridFunction& u_super, double audit_tol = 1e-7);

}  // namespace osc
