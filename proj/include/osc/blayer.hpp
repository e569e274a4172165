#pragma once

#include "osc/cell.hpp"

namespace osc {

/// Boundary-layer corrector problem: solve for zeta in
///   F(M + D^2 w(x/eps) + D^2 zeta, x/eps) = Fbar(M)  in the box,
///   zeta = -eps^2 w(M, x/eps)                        on the whole boundary,
/// with the flat portion Gamma = {x2 = 0} (1-D: {x = 0}) designated for the
/// distance bands.
struct BoundaryLayerProblem {
    SpecPtr spec;
    SymMatrix anchor;
    CellSolution cell;  // solved for (spec, anchor)
    double epsilon = 0.125;
    BoxGrid domain;     // defaults to the unit square / unit interval
};

BoundaryLayerProblem make_boundary_layer_problem(SpecPtr spec, const SymMatrix& M, double epsilon,
                                                 int cells, const CellOptions& cell_opts = {});

struct DecayBand {
    double d_lo = 0.0;     // band: d_lo <= d(x, Gamma) < 2 d_lo
    double d_mid = 0.0;
    double sup_hessian = 0.0;
    double reference = 0.0;  // eps^2 / d_mid^2
    double ratio = 0.0;      // sup_hessian * d_mid^2 / eps^2
};

struct BoundaryLayerSolution {
    GridFunction zeta;
    double epsilon = 0.0;
    double sup_abs = 0.0;
    double boundary_data_sup = 0.0;  // sup over boundary of |eps^2 w(x/eps)|
    std::vector<DecayBand> bands;    // dyadic distance bands from Gamma
    std::vector<std::pair<double, double>> lp_hessian;  // (p, ||D^2 zeta||_Lp)
};

BoundaryLayerSolution solve_boundary_layer(const BoundaryLayerProblem& problem, double tol = 1e-8);

struct DecayProfile {
    std::vector<DecayBand> bands;
    std::vector<std::pair<double, double>> lp_hessian;
};

/// Per-band sup |D^2_h zeta| against the reference curve eps^2/d^2, plus the
/// discrete L^p norms of the Hessian field for p in {4, 8}.
DecayProfile decay_profile(const BoundaryLayerSolution& sol);

}  // namespace osc
