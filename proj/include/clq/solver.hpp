#pragma once

#include <optional>
#include <vector>

#include "clq/objective.hpp"

namespace clq {

struct SolverConfig {
    double tol = 1e-9;            // projected-gradient norm at convergence
    int max_iter = 10000;
    double armijo = 1e-4;         // sufficient-decrease constant
    double backtrack = 0.5;       // step shrink factor
    double divergence_norm = 1e8; // |K| beyond this reports UnboundedBelow
    std::optional<Vec> start;     // feasible start; default is the projected closed form
    bool record_trace = false;    // keep objective values of all iterates
};

struct SolveResult {
    Vec K;
    double value = 0.0;
    int iterations = 0;
    double pg_residual = 0.0;   // |K - Proj(K - grad)|
    double kkt_residual = 0.0;  // stationarity with nonnegative multipliers on active rows
    std::vector<int> active_rows;
    bool converged = false;
    std::vector<double> trace;  // objective per iterate (record_trace only)
};

/// Minimizes ghat or gbar over {K : H K <= d}.
///
/// Each iteration solves the quadratic model of the piece active at the
/// current iterate over the polyhedron (dual active-set QP) and backtracks
/// along it until the Armijo condition holds. When that direction is not a
/// descent direction it searches the projected-gradient arc Proj(K - s grad)
/// instead, expanding s while the decrease continues. Objective values never
/// increase. Converged when the projected-gradient norm is below `tol` and the
/// KKT residual below 10 * tol, both scaled by max(1, largest Hessian
/// diagonal entry at the start point). Hitting `max_iter` returns the last iterate
/// with `converged == false`.
///
/// Throws Error(Infeasible) for an empty gain set and Error(UnboundedBelow)
/// when the iterates leave every bounded region.
SolveResult minimize(const ObjectiveContext& ctx, Branch branch, const ConstraintSpec& constraint,
                     const SolverConfig& cfg = {});

/// Exhaustive grid search over a box-shaped gain set (n <= 3). Test oracle.
SolveResult brute_force_oracle(const ObjectiveContext& ctx, Branch branch, const ConstraintSpec& constraint,
                               double resolution);

/// KKT residual of a candidate minimizer: max of stationarity error (with
/// multipliers fitted by NNLS on the active rows), complementarity, and
/// primal infeasibility.
double kkt_residual(const Vec& grad, const ConstraintSpec& constraint, const Vec& K, std::vector<int>* active = nullptr);

} // namespace clq
