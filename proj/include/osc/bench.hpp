#pragma once

#include <map>

#include "osc/blayer.hpp"
#include "osc/norms.hpp"

namespace osc {

/// Correctors tabulated over a small anchor grid; w_F(M, y) is recovered by
/// multilinear interpolation in the anchor and cubic interpolation on the
/// torus. Anchors outside the tabulated range raise ExtrapolationError.
class CorrectorField {
public:
    CorrectorField() = default;
    CorrectorField(SpecPtr spec, MatrixGrid anchors, const CellOptions& opts);

    double value(const SymMatrix& M, const Point& y) const;
    const MatrixGrid& anchors() const { return anchors_; }

private:
    SpecPtr spec_;
    MatrixGrid anchors_;
    std::vector<GridFunction> correctors_;
};

/// Effective operator frozen into a y-independent spec, built from cell
/// solves. 1-D specs are exact (two tangent rays); 2-D nonlinear specs are
/// fitted by tangent planes of the effective functional, optionally refined
/// at a focus set of anchors; the sup fit error over the audit anchors is
/// reported.
struct FrozenEffective {
    SpecPtr spec;
    double fit_error = 0.0;
    int cell_solves = 0;
};

FrozenEffective frozen_effective_spec(const SpecPtr& spec, const CellOptions& opts,
                                      const std::vector<SymMatrix>& focus = {});

/// Configuration of a homogenization sweep over a geometric epsilon list on
/// the unit box/square with f constant and g = 0.
struct SweepConfig {
    SpecPtr spec;
    std::vector<double> epsilons{0.125, 0.0625, 0.03125};
    int points_per_eps = 8;  // resolution pairing: cells = points_per_eps / eps
    double f_value = 1.0;
    double alpha = 0.5;
    double mu = 0.5;
    double p = 4.0;
    double interior_margin = 0.25;
    CellOptions cell;
    int jobs = 1;
    unsigned seed = 42;
    bool with_correction = true;  // two-scale corrected errors (1-D only)
};

struct SweepEntry {
    double eps = 0.0;
    int cells = 0;
    bool ok = false;
    double raw = 0.0;
    double corrected = 0.0;
    double log2_ratio_from_prev = 0.0;  // log2(err_prev / err)
    std::string note;
};

struct CriterionFlag {
    std::string name;
    bool pass = false;
    double value = 0.0;
};

struct ExperimentReport {
    std::string experiment;
    std::string spec_id;
    unsigned seed = 0;
    std::vector<SweepEntry> entries;
    std::vector<CriterionFlag> flags;
    std::map<std::string, double> scalars;
    std::vector<std::string> notes;
    bool pass = true;
};

/// For each epsilon solve the oscillating problem, solve the effective
/// problem once on the finest grid through the same solver, and record
/// sup-norm errors with consecutive log2 ratios.
ExperimentReport homogenization_sweep(const SweepConfig& config);

/// (raw, corrected) interior errors: raw = sup |u_eps - u_bar|, corrected
/// subtracts eps^2 w_F(D^2_h u_bar(x), x/eps).
std::pair<double, double> two_scale_error(const GridFunction& u_eps, const GridFunction& u_bar,
                                          const CorrectorField& field, double epsilon,
                                          double interior_margin);

struct DecompositionLevel {
    double radius = 0.0;
    double ax = 0.0, ay = 0.0;  // fitted gradient
    SymMatrix M;                // fitted Hessian, constrained to Fbar(M) = f(center)
    double remainder = 0.0;     // sup over the ball of the model residual
};

struct DecompositionFit {
    Point center;
    double mu = 0.5;
    std::vector<DecompositionLevel> levels;
    std::vector<double> ratios;  // E_{k+1} / E_k
    std::string truncation_note;
};

/// Alternating least-squares fit of affine + quadratic + eps^2-corrector over
/// shrinking balls, with the constraint Fbar(M) = f(center) enforced by a
/// Newton projection along the effective gradient after each fit round.
DecompositionFit campanato_fit(const GridFunction& u_eps, Index center_node, double mu, int depth,
                               const FrozenEffective& eff, const CorrectorField& field,
                               double epsilon, double f_center);

/// Uniform-regularity certificates across the epsilon sweep: best-affine
/// Holder quotients with exclusion radius eps, Hessian sups outside
/// eps-balls, and the near-boundary L^p Hessian norm; each family must vary
/// by at most 2x across the sweep.
ExperimentReport regularity_certificate(const SweepConfig& config);

/// Least-squares slope of log2(err) against log2(eps).
double fit_log2_slope(const std::vector<double>& eps, const std::vector<double>& err);

}  // namespace osc
