#include "osc/cell.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "osc/par.hpp"

namespace osc {

namespace {

int default_resolution(int dim) { return dim == 1 ? 256 : 128; }

int operator_max_frequency(const Operator& op) {
    if (const auto* s = std::get_if<SpecPtr>(&op)) return (*s)->max_frequency();
    return std::get<ScaledOperator>(op).base()->max_frequency();
}

bool operator_y_independent(const Operator& op) {
    if (const auto* s = std::get_if<SpecPtr>(&op)) return (*s)->y_independent();
    const auto& sc = std::get<ScaledOperator>(op);
    return sc.base()->y_independent() && !sc.has_corrector();
}

double operator_evaluate(const Operator& op, const SymMatrix& M, const Point& y) {
    if (const auto* s = std::get_if<SpecPtr>(&op)) return evaluate(**s, M, y);
    return std::get<ScaledOperator>(op).evaluate(M, y);
}

CompiledForm compile_on_torus(const Operator& op, const TorusGrid& grid, const SymMatrix& anchor) {
    std::vector<Point> ys(static_cast<size_t>(grid.size()));
    for (Index n = 0; n < grid.size(); ++n) ys[static_cast<size_t>(n)] = grid.coord(n);
    if (const auto* s = std::get_if<SpecPtr>(&op)) return CompiledForm::build(**s, ys, &anchor);
    return CompiledForm::build(std::get<ScaledOperator>(op), ys, &anchor);
}

// Richardson extrapolation of the trail c(delta) = c + a delta + b delta^2
// along a delta-halving sequence.
double richardson_12(const std::vector<std::pair<double, double>>& trail) {
    if (trail.size() < 3) return trail.back().second;
    std::vector<double> t1;
    for (size_t i = 1; i < trail.size(); ++i)
        t1.push_back(2.0 * trail[i].second - trail[i - 1].second);
    double t2 = t1.back();
    if (t1.size() >= 2) t2 = (4.0 * t1.back() - t1[t1.size() - 2]) / 3.0;
    return t2;
}

}  // namespace

CellSolution solve_cell(const Operator& op, const SymMatrix& M, const CellOptions& opts) {
    const int dim = operator_dim(op);
    if (M.dim() != dim) throw std::invalid_argument("solve_cell: anchor dimension mismatch");
    const int res = opts.resolution > 0 ? opts.resolution : default_resolution(dim);
    const int max_freq = operator_max_frequency(op);
    if (max_freq > 0 && res < 8 * max_freq)
        throw std::invalid_argument(
            "solve_cell: resolution must resolve the highest coefficient frequency by >= 8 points");
    const TorusGrid grid(dim, res);

    CellSolution out;
    out.anchor = M;

    if (opts.allow_frozen_shortcut && operator_y_independent(op)) {
        // Exact solution: w == 0, c = F(M, 0).
        out.effective_value = operator_evaluate(op, M, Point{0.0, 0.0});
        out.corrector = GridFunction(Grid{grid});
        out.residual = 0.0;
        out.method = "frozen";
        return out;
    }

    const CompiledForm form = compile_on_torus(op, grid, M);
    const SchemeGrid sg = SchemeGrid::torus(grid);
    const std::vector<double> zero_rhs(static_cast<size_t>(grid.size()), 0.0);
    const Index origin = 0;
    const double engine_tol = opts.tol;

    if (opts.method == CellMethod::MeanCorrection) {
        SchemeSolution sol = solve_scheme(sg, form, zero_rhs, 0.0, ConstantMode::Ergodic, origin,
                                          engine_tol, kDefaultMaxPolicies);
        out.effective_value = sol.constant;
        out.corrector = GridFunction(Grid{grid}, std::move(sol.values));
        out.residual = sol.report.final_residual;
        out.method = "mean-correction";
    } else {
        // Discounted problems are solved in the recentred variable
        // v = w - w(origin) with s = delta w(origin) as an extra unknown:
        // F(M + D^2 v, y) - delta v - s = 0, v(origin) = 0. This keeps every
        // magnitude O(1) where the raw w^delta ~ Fbar/delta would drown the
        // residual in roundoff, and s is the trail value directly.
        std::vector<double> warm;
        for (int k = 3; k <= 12; ++k) {
            const double delta = std::ldexp(1.0, -k);
            SchemeSolution sol =
                solve_scheme(sg, form, zero_rhs, delta, ConstantMode::Ergodic, origin, engine_tol,
                             kDefaultMaxPolicies, 100000, warm.empty() ? nullptr : &warm);
            out.discount_trail.emplace_back(delta, sol.constant);
            warm = std::move(sol.values);
        }
        const double c_rich = richardson_12(out.discount_trail);
        // Fix the constant by re-solving the exact cell equation, warm-started
        // from the last discounted iterate (already recentred at the origin).
        SchemeSolution polish = solve_scheme(sg, form, zero_rhs, 0.0, ConstantMode::Ergodic, origin,
                                             engine_tol, kDefaultMaxPolicies, 100000, &warm);
        if (std::abs(polish.constant - c_rich) > 10.0 * opts.tol) {
            std::ostringstream msg;
            msg << "solve_cell: vanishing-discount extrapolation (" << c_rich
                << ") disagrees with the mean-correction polish (" << polish.constant
                << ") beyond 10 tol";
            throw CrossMethodError(msg.str());
        }
        out.effective_value = polish.constant;
        out.corrector = GridFunction(Grid{grid}, std::move(polish.values));
        out.residual = polish.report.final_residual;
        out.method = "vanishing-discount";
    }

    // Normalization is pinned by the ergodic system row; enforce exactly.
    const double w0 = out.corrector[0];
    if (w0 != 0.0)
        for (auto& v : out.corrector.values()) v -= w0;

    if (!out.corrector.all_finite())
        throw SolverError("solve_cell: corrector contains non-finite values");

    // Sanity: the ergodic constant lies between min_y and max_y of F(M, .).
    if (std::holds_alternative<SpecPtr>(op)) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Index n = 0; n < grid.size(); ++n) {
            const double v = operator_evaluate(op, M, grid.coord(n));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (out.effective_value < lo - 10.0 * opts.tol - 1e-9 ||
            out.effective_value > hi + 10.0 * opts.tol + 1e-9)
            throw SolverError("solve_cell: effective value escapes the min/max sandwich");
    }
    return out;
}

namespace {

struct CacheKey {
    std::string id;
    std::array<double, 3> m;
    int dim;
    int resolution;
    int method;

    bool operator<(const CacheKey& o) const {
        return std::tie(id, m, dim, resolution, method) <
               std::tie(o.id, o.m, o.dim, o.resolution, o.method);
    }
};

std::mutex g_cache_mutex;
std::map<CacheKey, double> g_cache;

}  // namespace

double effective_value(const SpecPtr& spec, const SymMatrix& M, const CellOptions& opts) {
    const CacheKey key{spec->name(),
                       {M.m11(), M.dim() == 2 ? M.m22() : 0.0, M.dim() == 2 ? M.m12() : 0.0},
                       M.dim(),
                       opts.resolution > 0 ? opts.resolution : default_resolution(spec->dim()),
                       static_cast<int>(opts.method)};
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        auto it = g_cache.find(key);
        if (it != g_cache.end()) return it->second;
    }
    const double value = solve_cell(Operator{spec}, M, opts).effective_value;
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        g_cache[key] = value;  // identical keys recompute identical values
    }
    return value;
}

void clear_effective_cache() {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    g_cache.clear();
}

ScaledOperator translate_scale(const SpecPtr& spec, const SymMatrix& M, double mu,
                               const CellSolution& cell) {
    if (mu <= 0.0) throw std::invalid_argument("translate_scale: mu must be > 0");
    if (!(cell.anchor == M))
        throw std::invalid_argument("translate_scale: cell was solved for a different anchor");
    return ScaledOperator(spec, M, mu, cell.corrector);
}

std::pair<double, double> corrector_hessian_floor(const CellSolution& cell) {
    const GridFunction& w = cell.corrector;
    double lo = std::numeric_limits<double>::infinity();
    for (Index n = 0; n < w.size(); ++n)
        lo = std::min(lo, (hessian_at(w, n) + cell.anchor).frobenius());
    const double mn = cell.anchor.frobenius();
    return {lo, mn > 0 ? lo / mn : 0.0};
}

Index MatrixGrid::axis_count() const {
    return static_cast<Index>(std::floor((hi - lo) / step + 1.5));
}

Index MatrixGrid::size() const {
    const Index n = axis_count();
    return dim == 1 ? n : n * n * n;
}

SymMatrix MatrixGrid::anchor(Index i) const {
    const Index n = axis_count();
    if (dim == 1) return SymMatrix(lo + step * i);
    const Index i12 = i / (n * n);
    const Index i22 = (i / n) % n;
    const Index i11 = i % n;
    return SymMatrix(lo + step * i11, lo + step * i22, lo + step * i12);
}

double EffectiveTable::interpolate(const SymMatrix& M) const {
    const Index n = grid.axis_count();
    auto locate = [&](double v) {
        const double t = (v - grid.lo) / grid.step;
        if (t < -1e-9 || t > n - 1 + 1e-9)
            throw ExtrapolationError("EffectiveTable: anchor outside tabulated range");
        Index i = static_cast<Index>(std::floor(t));
        i = std::clamp<Index>(i, 0, n - 2);
        return std::make_pair(i, t - i);
    };
    if (grid.dim == 1) {
        auto [i, t] = locate(M.m11());
        return values[static_cast<size_t>(i)] * (1 - t) + values[static_cast<size_t>(i + 1)] * t;
    }
    auto [i1, t1] = locate(M.m11());
    auto [i2, t2] = locate(M.m22());
    auto [i3, t3] = locate(M.m12());
    double acc = 0.0;
    for (int b3 = 0; b3 < 2; ++b3)
        for (int b2 = 0; b2 < 2; ++b2)
            for (int b1 = 0; b1 < 2; ++b1) {
                const double wgt = (b1 ? t1 : 1 - t1) * (b2 ? t2 : 1 - t2) * (b3 ? t3 : 1 - t3);
                const Index at = (i3 + b3) * n * n + (i2 + b2) * n + (i1 + b1);
                acc += wgt * values[static_cast<size_t>(at)];
            }
    return acc;
}

EffectiveTable tabulate_effective(const SpecPtr& spec, const MatrixGrid& grid,
                                  const CellOptions& opts, int jobs) {
    if (grid.dim != spec->dim())
        throw std::invalid_argument("tabulate_effective: grid/spec dimension mismatch");
    EffectiveTable table;
    table.spec_id = spec->name();
    table.grid = grid;
    const Index n = grid.size();
    table.values.assign(static_cast<size_t>(n), 0.0);
    table.residuals.assign(static_cast<size_t>(n), 0.0);
    std::vector<std::string> failure(1);
    std::atomic<Index> failed_at{-1};
    parallel_for(n, jobs, [&](Index i) {
        try {
            const CellSolution cell = solve_cell(Operator{spec}, grid.anchor(i), opts);
            table.values[static_cast<size_t>(i)] = cell.effective_value;
            table.residuals[static_cast<size_t>(i)] = cell.residual;
        } catch (const std::exception& e) {
            Index expect = -1;
            if (failed_at.compare_exchange_strong(expect, i)) failure[0] = e.what();
        }
    });
    if (failed_at.load() >= 0)
        throw TabulateError("tabulate_effective: node " + std::to_string(failed_at.load()) +
                                " failed: " + failure[0],
                            std::move(table), failed_at.load());
    return table;
}

EllipticityCheckReport check_effective_ellipticity(const SpecPtr& spec, int trials,
                                                   const CellOptions& opts, unsigned seed) {
    if (trials < 50) throw std::invalid_argument("check_effective_ellipticity: trials must be >= 50");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> um(-2.0, 2.0);
    std::uniform_real_distribution<double> us(0.1, 2.0);
    std::uniform_real_distribution<double> uu(-1.0, 1.0);
    EllipticityCheckReport rep;
    rep.trials = trials;
    rep.worst_lower_margin = std::numeric_limits<double>::infinity();
    rep.worst_upper_margin = std::numeric_limits<double>::infinity();
    const int dim = spec->dim();
    for (int t = 0; t < trials; ++t) {
        SymMatrix M = dim == 1 ? SymMatrix(um(rng)) : SymMatrix(um(rng), um(rng), um(rng));
        SymMatrix N(1.0);
        if (dim == 2) {
            const double b11 = uu(rng), b12 = uu(rng), b21 = uu(rng), b22 = uu(rng);
            N = SymMatrix(b11 * b11 + b21 * b21, b12 * b12 + b22 * b22, b11 * b12 + b21 * b22);
            const double f = N.frobenius();
            if (f < 1e-6) {
                N = SymMatrix::identity(2);
            } else {
                N = N * (1.0 / f);
            }
        }
        N = N * us(rng);
        const double inc = effective_value(spec, M + N, opts) - effective_value(spec, M, opts);
        const double slack = 4.0 * opts.tol * (1.0 + N.frobenius());
        const double lower = inc - (spec->lambda() * N.frobenius() - slack);
        const double upper = (spec->Lambda() * N.trace() + slack) - inc;
        rep.worst_lower_margin = std::min(rep.worst_lower_margin, lower);
        rep.worst_upper_margin = std::min(rep.worst_upper_margin, upper);
        if (lower < 0.0 || upper < 0.0) {
            ++rep.violations;
            rep.pass = false;
        }
    }
    return rep;
}

ScalingIdentityReport check_scaling_identity(const SpecPtr& spec, const SymMatrix& M, double mu,
                                             int n_samples, const CellOptions& opts,
                                             unsigned seed) {
    ScalingIdentityReport rep;
    rep.samples = n_samples;
    rep.tolerance = 10.0 * opts.tol;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> un(-1.5, 1.5);
    CellOptions cell_opts = opts;
    cell_opts.allow_frozen_shortcut = false;  // exercise the full scheme path
    const CellSolution base = solve_cell(Operator{spec}, M, cell_opts);
    const ScaledOperator scaled = translate_scale(spec, M, mu, base);
    const int dim = spec->dim();
    for (int s = 0; s < n_samples; ++s) {
        const SymMatrix N = dim == 1 ? SymMatrix(un(rng)) : SymMatrix(un(rng), un(rng), 0.0);
        const CellSolution lhs = solve_cell(Operator{scaled}, N, cell_opts);
        const CellSolution shifted = solve_cell(Operator{spec}, N * mu + M, cell_opts);
        const double rhs = (shifted.effective_value - base.effective_value) / mu;
        const double gap = std::abs(lhs.effective_value - rhs);
        rep.worst_value_gap = std::max(rep.worst_value_gap, gap);
        double wgap = 0.0;
        for (Index n = 0; n < lhs.corrector.size(); ++n) {
            const double ref = (shifted.corrector[n] - base.corrector[n]) / mu;
            wgap = std::max(wgap, std::abs(lhs.corrector[n] - ref));
        }
        rep.worst_corrector_gap = std::max(rep.worst_corrector_gap, wgap);
        if (gap > rep.tolerance || wgap > rep.tolerance) rep.pass = false;
    }
    return rep;
}

MinMonotonicityReport check_min_monotonicity(const SpecPtr& spec1, const SpecPtr& spec2,
                                             const std::vector<SymMatrix>& anchors,
                                             const CellOptions& opts) {
    if (spec1->lambda() != spec2->lambda() || spec1->Lambda() != spec2->Lambda())
        throw std::invalid_argument("check_min_monotonicity: specs must share (lambda, Lambda)");
    MinMonotonicityReport rep;
    rep.samples = static_cast<int>(anchors.size());
    SpecPtr min_spec =
        make_spec("min(" + spec1->name() + "," + spec2->name() + ")", spec1->dim(), spec1->lambda(),
                  spec1->Lambda(), std::max(spec1->kappa(), spec2->kappa()),
                  std::min(spec1->gamma(), spec2->gamma()),
                  SpecNode::min_of({spec1->root(), spec2->root()}));
    for (const SymMatrix& M : anchors) {
        const double e1 = solve_cell(Operator{spec1}, M, opts).effective_value;
        const double e2 = solve_cell(Operator{spec2}, M, opts).effective_value;
        const double em = solve_cell(Operator{min_spec}, M, opts).effective_value;
        const double violation = em - std::min(e1, e2);
        rep.worst_violation = std::max(rep.worst_violation, violation);
        rep.max_gap = std::max(rep.max_gap, std::min(e1, e2) - em);
        if (violation > 2.0 * opts.tol) rep.pass = false;
    }
    return rep;
}

namespace {

std::vector<SymMatrix> sphere_directions(int dim, int count) {
    std::vector<SymMatrix> dirs;
    if (dim == 1) {
        dirs.emplace_back(1.0);
        dirs.emplace_back(-1.0);
        return dirs;
    }
    std::mt19937_64 rng(7771);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < count; ++i) {
        SymMatrix m(g(rng), g(rng), g(rng));
        const double f = m.frobenius();
        if (f > 1e-8) dirs.push_back(m * (1.0 / f));
    }
    // include the axis directions
    dirs.emplace_back(1.0, 0.0, 0.0);
    dirs.emplace_back(0.0, 1.0, 0.0);
    dirs.emplace_back(0.0, 0.0, std::sqrt(0.5));
    dirs.emplace_back(-1.0, 0.0, 0.0);
    dirs.emplace_back(0.0, -1.0, 0.0);
    dirs.emplace_back(0.0, 0.0, -std::sqrt(0.5));
    SymMatrix iso = SymMatrix::identity(2);
    dirs.push_back(iso * (1.0 / iso.frobenius()));
    dirs.push_back(iso * (-1.0 / iso.frobenius()));
    return dirs;
}

double dense_y_osc(const OperatorSpec& spec, const SymMatrix& M) {
    const int npts = 128;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int j = 0; j < (spec.dim() == 2 ? npts : 1); ++j)
        for (int i = 0; i < npts; ++i) {
            const double v = evaluate(spec, M, {double(i) / npts, double(j) / npts});
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    return hi - lo;
}

}  // namespace

KeyEqualityReport check_key_equality(const SpecPtr& concave, const SpecPtr& convex,
                                     const std::vector<SymMatrix>& anchor_grid,
                                     const CellOptions& opts) {
    KeyEqualityReport rep;
    const int dim = concave->dim();
    const double R = 1.0;  // hypotheses are scale invariant for homogeneous lattices
    const double kappa = std::max(concave->kappa(), convex->kappa());
    const double gamma = std::min(concave->gamma(), convex->gamma());
    const double kng = kappa * std::pow(double(dim), gamma / 2.0);

    // L_est from the corrector Hessian floor diagnostic on the combined spec.
    SpecPtr combined = build_cabre_caffarelli(concave, convex);
    CellOptions probe = opts;
    probe.allow_frozen_shortcut = true;
    double ratio_min = std::numeric_limits<double>::infinity();
    for (double m : {2.0, 4.0}) {
        const SymMatrix M = SymMatrix::identity(dim) * (m / SymMatrix::identity(dim).frobenius());
        const auto [floor_norm, ratio] = corrector_hessian_floor(solve_cell(Operator{combined}, M, probe));
        (void)floor_norm;
        ratio_min = std::min(ratio_min, ratio);
    }
    rep.L_est = ratio_min > 1e-12 ? std::max(1.0, 1.0 / ratio_min) : 1e12;

    // Hypothesis audit. Fully y-independent pairs realize the degenerate
    // regime (oscillation vanishes on every ball); otherwise both the
    // small-ball oscillation condition and the band gap must hold.
    const bool y_free = concave->y_independent() && convex->y_independent();
    const auto dirs = sphere_directions(dim, 200);
    bool large_ok = true;
    double worst_large = std::numeric_limits<double>::infinity();
    for (const SymMatrix& d : dirs) {
        for (double mag : {R, 1.5 * R, 2.0 * R, 3.0 * R}) {
            const SymMatrix M = d * mag;
            const int npts = concave->y_independent() && convex->y_independent() ? 1 : 64;
            double gap_min = std::numeric_limits<double>::infinity();
            for (int j = 0; j < (dim == 2 ? npts : 1); ++j)
                for (int i = 0; i < npts; ++i) {
                    const Point y{double(i) / npts, double(j) / npts};
                    gap_min = std::min(gap_min, evaluate(*convex, M, y) - evaluate(*concave, M, y));
                }
            const double margin = gap_min - kng * M.frobenius();
            worst_large = std::min(worst_large, margin);
            if (margin < -1e-9 * (1.0 + M.frobenius())) large_ok = false;
        }
    }
    bool const_ok = true;
    if (!y_free) {
        for (const SymMatrix& d : dirs) {
            for (double mag : {0.25 * R, 0.5 * R, rep.L_est * R}) {
                const SymMatrix M = d * mag;
                const double osc = std::max(dense_y_osc(*concave, M), dense_y_osc(*convex, M));
                if (osc > 1e-9 * (1.0 + M.frobenius())) {
                    const_ok = false;
                    break;
                }
            }
            if (!const_ok) break;
        }
    }
    if (!(const_ok && large_ok)) {
        rep.applicable = false;
        rep.audit_note = std::string("hypothesis audit failed: ") +
                         (!const_ok ? "oscillation present on the audit ball" : "") +
                         (!const_ok && !large_ok ? "; " : "") +
                         (!large_ok ? "band gap below kappa n^(gamma/2) |M|" : "");
        return rep;
    }
    rep.applicable = true;
    rep.audit_note = y_free ? "degenerate regime (y-independent pair)" : "hypotheses audited";

    // Equality check by cell solves through the full scheme path.
    CellOptions cs = opts;
    cs.allow_frozen_shortcut = false;
    rep.pass = true;
    for (const SymMatrix& M : anchor_grid) {
        const double em = solve_cell(Operator{combined}, M, cs).effective_value;
        const double e1 = solve_cell(Operator{concave}, M, cs).effective_value;
        const double e2 = solve_cell(Operator{convex}, M, cs).effective_value;
        const double gap = std::abs(em - std::min(e1, e2));
        if (gap > rep.worst_gap) {
            rep.worst_gap = gap;
            rep.worst_anchor = M;
        }
        if (gap > 3.0 * opts.tol) rep.pass = false;
    }
    return rep;
}

}  // namespace osc
