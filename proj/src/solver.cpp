#include "osc/solver.hpp"

#include <cmath>

namespace osc {

int operator_dim(const Operator& op) {
    if (const auto* s = std::get_if<SpecPtr>(&op)) return (*s)->dim();
    return std::get<ScaledOperator>(op).dim();
}

Point DirichletProblem::cell_point(const Point& x) const {
    if (std::isinf(epsilon)) return {0.0, 0.0};
    auto wrap = [](double t) {
        double r = std::fmod(t, 1.0);
        return r < 0 ? r + 1.0 : r;
    };
    return {wrap(x.x / epsilon), grid.dim == 2 ? wrap(x.y / epsilon) : 0.0};
}

DirichletProblem make_problem(Operator op, double epsilon, BoxGrid grid,
                              const std::function<double(Point)>& f,
                              const std::function<double(Point)>& g, double delta) {
    DirichletProblem p;
    p.op = std::move(op);
    p.epsilon = epsilon;
    p.grid = grid;
    p.rhs = GridFunction(Grid{grid});
    p.boundary = GridFunction(Grid{grid});
    for (Index n = 0; n < grid.size(); ++n) {
        const Point x = grid.coord(n);
        if (grid.is_boundary(n))
            p.boundary[n] = g(x);
        else
            p.rhs[n] = f(x);
    }
    p.delta = delta;
    return p;
}

namespace {

void validate(const DirichletProblem& p) {
    if (operator_dim(p.op) != p.grid.dim)
        throw std::invalid_argument("DirichletProblem: operator/grid dimension mismatch");
    if (!p.rhs.all_finite() || !p.boundary.all_finite())
        throw std::invalid_argument("DirichletProblem: data must be finite");
    if (p.delta < 0.0) throw std::invalid_argument("DirichletProblem: delta must be >= 0");
    if (!p.allow_unresolved && p.epsilon <= 2.0 * p.grid.spacing())
        throw SolverError(
            "DirichletProblem: epsilon <= 2h leaves the oscillation unresolved "
            "(set allow_unresolved to override)");
}

CompiledForm compile(const DirichletProblem& p) {
    std::vector<Point> ys(static_cast<size_t>(p.grid.size()));
    for (Index n = 0; n < p.grid.size(); ++n)
        ys[static_cast<size_t>(n)] = p.cell_point(p.grid.coord(n));
    if (const auto* s = std::get_if<SpecPtr>(&p.op)) return CompiledForm::build(**s, ys);
    return CompiledForm::build(std::get<ScaledOperator>(p.op), ys);
}

}  // namespace

std::pair<GridFunction, SolveReport> solve_dirichlet(const DirichletProblem& p, double tol,
                                                     int max_iter) {
    validate(p);
    const CompiledForm form = compile(p);
    const SchemeGrid sg = SchemeGrid::box_interior(p.grid, p.boundary.values());
    SchemeSolution sol =
        solve_scheme(sg, form, p.rhs.values(), p.delta, ConstantMode::None, 0, tol, max_iter);
    GridFunction u(Grid{p.grid}, std::move(sol.values));
    return {std::move(u), std::move(sol.report)};
}

double residual(const DirichletProblem& p, const GridFunction& u) {
    validate(p);
    if (u.size() != p.grid.size())
        throw std::invalid_argument("residual: function does not live on the problem grid");
    const CompiledForm form = compile(p);
    const SchemeGrid sg = SchemeGrid::box_interior(p.grid, p.boundary.values());
    return scheme_residual(sg, form, u.values(), p.rhs.values(), p.delta, 0.0);
}

bool comparison_audit(const DirichletProblem& p, const GridFunction& u_sub,
                      const GridFunction& u_super, double audit_tol) {
    validate(p);
    if (u_sub.size() != p.grid.size() || u_super.size() != p.grid.size())
        throw std::invalid_argument("comparison_audit: functions must live on the problem grid");
    const CompiledForm form = compile(p);
    const SchemeGrid sg = SchemeGrid::box_interior(p.grid, p.boundary.values());
    // Signed residuals: a subsolution satisfies F_h(u) - delta u - f >= 0.
    for (Index k = 0; k < sg.unknown_count(); ++k) {
        const Index n = sg.unknown_node(k);
        const double rs = form.value(n, sg.diffs(u_sub.values(), n)) -
                          p.delta * u_sub[n] - p.rhs[n];
        if (rs < -audit_tol)
            throw AuditInapplicable("comparison_audit: u_sub is not a subsolution (residual " +
                                    std::to_string(rs) + ")");
        const double rp = form.value(n, sg.diffs(u_super.values(), n)) -
                          p.delta * u_super[n] - p.rhs[n];
        if (rp > audit_tol)
            throw AuditInapplicable("comparison_audit: u_super is not a supersolution (residual " +
                                    std::to_string(rp) + ")");
    }
    for (Index n = 0; n < p.grid.size(); ++n) {
        if (!p.grid.is_boundary(n)) continue;
        if (u_sub[n] > u_super[n] + audit_tol)
            throw AuditInapplicable("comparison_audit: boundary data not ordered");
    }
    const double slack = 1e-12 * (1.0 + u_sub.sup_abs() + u_super.sup_abs());
    for (Index n = 0; n < p.grid.size(); ++n)
        if (u_sub[n] > u_super[n] + slack) return false;
    return true;
}

}  // namespace osc
