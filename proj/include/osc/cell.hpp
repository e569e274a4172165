#pragma once

#include <map>
#include <mutex>
#include <optional>

#include "osc/solver.hpp"

namespace osc {

enum class CellMethod { VanishingDiscount, MeanCorrection };

struct CrossMethodError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Corrector + effective value for one anchor M: the unique constant c with a
/// periodic solution of F(M + D^2 w, y) = c, normalized by w(origin) = 0.
struct CellSolution {
    SymMatrix anchor;
    double effective_value = 0.0;
    GridFunction corrector;  // on a TorusGrid, corrector[origin] == 0
    double residual = 0.0;
    std::string method;
    std::vector<std::pair<double, double>> discount_trail;  // (delta, delta * w_delta(origin))
};

struct CellOptions {
    int resolution = 0;  // 0: 256 in 1-D, 128 per axis in 2-D
    CellMethod method = CellMethod::VanishingDiscount;
    double tol = 1e-6;
    /// y-independent specs admit the exact frozen solution w == 0,
    /// c = F(M, 0); disable to force the full scheme solve.
    bool allow_frozen_shortcut = true;
};

CellSolution solve_cell(const Operator& op, const SymMatrix& M, const CellOptions& opts = {});

/// Cached wrapper returning only the effective value. Cache key is
/// (spec name, anchor bits, resolution, method); concurrent access is
/// mutex-guarded with last-writer-wins semantics.
double effective_value(const SpecPtr& spec, const SymMatrix& M, const CellOptions& opts = {});

void clear_effective_cache();

/// Builds the scaled-translated operator F_{M,mu} from a cell solution for
/// (spec, M); the cell anchor must match.
ScaledOperator translate_scale(const SpecPtr& spec, const SymMatrix& M, double mu,
                               const CellSolution& cell);

/// (min over torus nodes of |D^2_h w + M|, that minimum divided by |M|).
std::pair<double, double> corrector_hessian_floor(const CellSolution& cell);

/// Rectangular anchor grid in the symmetric-matrix coordinates (m) in 1-D,
/// (m11, m22, m12) in 2-D.
struct MatrixGrid {
    int dim = 1;
    double lo = -4.0;
    double hi = 4.0;
    double step = 0.5;

    Index axis_count() const;
    Index size() const;
    SymMatrix anchor(Index i) const;
};

struct EffectiveTable {
    std::string spec_id;
    MatrixGrid grid;
    std::vector<double> values;
    std::vector<double> residuals;

    double value_at(Index i) const { return values[static_cast<size_t>(i)]; }

    /// Multilinear interpolation between tabulated anchors; approximate by
    /// construction. Throws ExtrapolationError outside the tabulated range.
    double interpolate(const SymMatrix& M) const;
};

struct ExtrapolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TabulateError : std::runtime_error {
    TabulateError(const std::string& what, EffectiveTable partial_, Index failed_node_)
        : std::runtime_error(what), partial(std::move(partial_)), failed_node(failed_node_) {}
    EffectiveTable partial;
    Index failed_node;
};

EffectiveTable tabulate_effective(const SpecPtr& spec, const MatrixGrid& grid,
                                  const CellOptions& opts = {}, int jobs = 1);

/// Sampled Lemma-style sandwich check for the effective functional:
/// lambda |N| - slack <= Fbar(M+N) - Fbar(M) <= Lambda tr(N) + slack,
/// slack = 4 tol (1 + |N|). In 1-D tr(N) = |N|; at rank-one N the two
/// coincide in 2-D as well.
struct EllipticityCheckReport {
    bool pass = true;
    int trials = 0;
    int violations = 0;
    double worst_lower_margin = 0.0;  // min over samples of (increment - lambda|N| + slack)
    double worst_upper_margin = 0.0;  // min over samples of (Lambda tr N + slack - increment)
};

EllipticityCheckReport check_effective_ellipticity(const SpecPtr& spec, int trials,
                                                   const CellOptions& opts = {},
                                                   unsigned seed = 2028);

/// Effective/corrector transformation identity under translate_scale:
///   Fbar_{M,mu}(N) = (Fbar(mu N + M) - Fbar(M)) / mu
///   w_{F_{M,mu}}(N, y) = (w(mu N + M, y) - w(M, y)) / mu.
struct ScalingIdentityReport {
    bool pass = true;
    int samples = 0;
    double worst_value_gap = 0.0;      // |lhs - rhs| for the effective identity
    double worst_corrector_gap = 0.0;  // sup norm gap for the corrector identity
    double tolerance = 0.0;
};

ScalingIdentityReport check_scaling_identity(const SpecPtr& spec, const SymMatrix& M, double mu,
                                             int n_samples, const CellOptions& opts = {},
                                             unsigned seed = 2029);

/// Monotonicity of effective minima: effective of min <= min of effectives.
struct MinMonotonicityReport {
    bool pass = true;
    int samples = 0;
    double worst_violation = 0.0;  // max over samples of eff_min - min(eff1, eff2)
    double max_gap = 0.0;          // strict-gap witness: max of min(eff1,eff2) - eff_min
};

MinMonotonicityReport check_min_monotonicity(const SpecPtr& spec1, const SpecPtr& spec2,
                                             const std::vector<SymMatrix>& anchors,
                                             const CellOptions& opts = {});

/// Effective-minimum equality under the band-separation hypotheses. The
/// hypothesis audit runs first; an audit failure reports "inapplicable"
/// rather than an equality failure.
struct KeyEqualityReport {
    bool applicable = false;
    bool pass = false;
    std::string audit_note;
    double L_est = 0.0;
    double worst_gap = 0.0;
    SymMatrix worst_anchor;
};

KeyEqualityReport check_key_equality(const SpecPtr& concave, const SpecPtr& convex,
                                     const std::vector<SymMatrix>& anchor_grid,
                                     const CellOptions& opts = {});

}  // namespace osc
