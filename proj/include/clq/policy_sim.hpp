#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "clq/riccati.hpp"

namespace clq {

/// Piecewise-linear feedback u = Khat x for x >= 0 and u = -Kbar x for x < 0,
/// per stage and conditioning state.
struct Policy {
    bool stationary = false;
    std::vector<std::vector<Vec>> Khat;  // [t][j]; one stage when stationary
    std::vector<std::vector<Vec>> Kbar;

    static Policy from(const RiccatiSolution& sol);
    static Policy from(const FixedPoint& fp);

    /// Number of stages, or kInfiniteHorizon for a stationary policy.
    int horizon() const { return stationary ? kInfiniteHorizon : static_cast<int>(Khat.size()); }
    std::size_t num_states() const { return Khat.empty() ? 0 : Khat.front().size(); }
};

/// Throws Error(OutOfRange) for a stage past the horizon or an unknown state.
Vec control(const Policy& policy, int t, std::size_t state, double x);

/// Any feedback rule u = f(t, state, x); `state` is the conditioning state.
using Controller = std::function<Vec(int t, std::size_t state, double x)>;

Controller as_controller(const Policy& policy);

struct SimulationOptions {
    std::size_t paths = 100;
    int steps = 30;
    std::uint64_t seed = 1;
    std::size_t initial_state = 0;  // Markov conditioning state before t = 0
    bool record_paths = true;       // keep x, u, scenario per path
};

struct SimulationResult {
    std::uint64_t seed = 0;
    int steps = 0;
    std::size_t paths = 0;
    // Recorded only with record_paths: x[path][t] (steps + 1 entries),
    // u[path][t] and scenario[path][t] (steps entries).
    std::vector<std::vector<double>> x;
    std::vector<std::vector<Vec>> u;
    std::vector<std::vector<std::size_t>> scenario;
    std::vector<double> terminal;   // x at the last step, per path
    std::vector<double> cost;       // realized stage costs (+ q_T x_T^2 for finite horizons)
    std::vector<double> penalty;    // sum of u' R u, per path
    std::vector<double> mean_x2;    // sample E[x_t^2], t = 0..steps
    std::vector<double> stderr_x2;
    double max_violation = 0.0;     // max over paths and steps of H u - d |x|
};

/// Seeds path `index` of a run; streams of different paths are independent
/// and do not depend on how many paths are drawn.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index);

/// Closed-loop Monte Carlo of x_{t+1} = a x_t + b u_t. The work is split
/// across threads (capped by CLQ_THREADS) and reduced in path order, so the
/// result depends only on the inputs and the seed.
SimulationResult simulate(const ProblemSpec& spec, const Controller& controller, const SimulationOptions& opt);
SimulationResult simulate(const ProblemSpec& spec, const Policy& policy, const SimulationOptions& opt);

/// One root-to-leaf path of the exhaustive scenario tree.
struct TreePath {
    double probability = 1.0;
    std::vector<double> x;              // depth + 1 states
    std::vector<Vec> u;                 // depth controls
    std::vector<std::size_t> scenario;  // depth realized scenarios
};

/// Visits every scenario sequence of length `depth` from x0. Throws
/// Error(DimensionTooLarge) past 10^7 leaves.
void for_each_path(const ProblemSpec& spec, const Controller& controller, double x0, int depth,
                   std::size_t initial_state, const std::function<void(const TreePath&)>& visit);

struct LyapunovStep {
    int t = 0;
    double mean = 0.0;    // sample mean of V(x_{t+1}) - V(x_t) + J(x_t) x_t^2
    double stderr = 0.0;
};

struct StabilityCertificate {
    double Jhat = 0.0;  // (Khat, 1)' C (Khat, 1)
    double Jbar = 0.0;  // (-Kbar, 1)' C (-Kbar, 1)
    // Exact one-step decrement E[V(x_1)] - V(x_0) from x_0 = 1 and x_0 = -1,
    // with V(x) = x^2 (Ghat 1{x >= 0} + Gbar 1{x < 0}).
    double exact_decrement_pos = 0.0;
    double exact_decrement_neg = 0.0;
    /// max |decrement + J| over both signs.
    double exact_residual = 0.0;
    std::vector<LyapunovStep> monte_carlo;
    /// Every Monte Carlo step mean is within 4 standard errors (plus 1e-9) of zero.
    bool monte_carlo_ok = false;
};

/// Throws Error(NotConverged) when the fixed point did not converge.
StabilityCertificate stability_certificate(const ProblemSpec& spec, const FixedPoint& fp,
                                           const SimulationOptions& opt = {});

/// Threads to use for `work` independent items (CLQ_THREADS caps it).
unsigned worker_count(std::size_t work);

} // namespace clq
