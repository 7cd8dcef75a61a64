#pragma once

#include <optional>
#include <vector>

#include "clq/solver.hpp"

namespace clq {

/// Value coefficients and gains of the finite-horizon recursion, indexed
/// [t][j] with j the conditioning state (always 0 for i.i.d. models).
/// Ghat/Gbar have T + 1 stages, Khat/Kbar have T.
struct RiccatiSolution {
    int horizon = 0;
    std::size_t num_states = 1;
    bool markov = false;
    std::vector<std::vector<double>> Ghat;
    std::vector<std::vector<double>> Gbar;
    std::vector<std::vector<Vec>> Khat;
    std::vector<std::vector<Vec>> Kbar;
    /// Every stage solve met the solver tolerance.
    bool converged = true;
    double max_kkt_residual = 0.0;
};

/// Backward recursion from Ghat_T = Gbar_T = q_T. For Markov models the
/// continuation value of scenario k is the stage-(t+1) value conditioned on k.
/// Solver errors are rethrown with "stage t, state j: " prepended.
RiccatiSolution solve_finite(const ProblemSpec& spec, const SolverConfig& cfg = {});

/// Closed-form recursion for the unconstrained problem:
///   G_t = q_t + E[G A^2] - (S + E[G A B'])' (R + E[G B'B])^+ (S + E[G A B'])
/// with Ghat = Gbar = G, Khat = K and Kbar = -K.
/// Throws Error(SingularStageMatrix) when the stage problem has no minimizer.
RiccatiSolution solve_unconstrained(const ProblemSpec& spec);

struct FixedPointOptions {
    double eps = 1e-8;
    int max_iter = 10000;
    double ceiling = 1e10;       // min(Ghat, Gbar) above this means divergence
    double growth_tol = 1e-4;    // relative growth per iteration still counted as divergence at max_iter
};

struct FixedPoint {
    double Ghat_star = 0.0;
    double Gbar_star = 0.0;
    Vec Khat_star;
    Vec Kbar_star;
    /// (Ghat_i, Gbar_i) for i = 0, 1, ...; starts at (0, 0).
    std::vector<std::pair<double, double>> iterates;
    bool converged = false;
    bool diverged = false;
};

/// Value iteration Ghat_{i+1} = min_K ghat(K, Ghat_i, Gbar_i) (same for Gbar)
/// from zero. i.i.d. models only; uses the stage-0 cost and constraint.
FixedPoint solve_infinite(const ProblemSpec& spec, const SolverConfig& cfg = {}, const FixedPointOptions& opt = {});

struct ThresholdReport {
    /// E[A^2] - (E[A] E[B])^2 / E[B^2]; scalar controls only.
    std::optional<double> classical_threshold;
    double EA2 = 0.0;
    double eta = 0.0;               // largest eigenvalue of E[B'B]
    std::optional<double> K_max;    // empty when the gain set is unbounded
    bool kset_bounded = true;
    double sufficient_lhs = 0.0;    // E[A^2] + eta * K_max (inf if unbounded)
    /// sufficient_lhs < 1 guarantees existence; otherwise the test says nothing.
    bool sufficient_holds = false;
};

/// Throws Error(VertexEnumerationTooLarge) when K_max cannot be enumerated
/// and no bound is supplied.
ThresholdReport check_threshold(const ProblemSpec& spec, std::optional<double> k_max = std::nullopt);

} // namespace clq
