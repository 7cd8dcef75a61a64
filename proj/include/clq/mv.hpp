#pragma once

#include <vector>

#include "clq/policy_sim.hpp"

namespace clq {

/// Multi-period market: wealth evolves as x_{t+1} = r_t x_t + P_t' u_t with
/// u_t the amounts held in the risky assets and P_t their excess returns.
struct MarketSpec {
    std::vector<double> riskfree;   // r_0 .. r_{T-1}
    StochasticModel excess;         // scenario b vectors are P_t; a is ignored
    std::vector<Mat> R;             // control penalty, one shared or T entries
    double x0 = 1.0;
    double xd = 1.0;
    std::size_t initial_state = 0;  // Markov markets only

    int horizon() const { return static_cast<int>(riskfree.size()); }
    const Mat& R_at(int t) const;
};

/// gamma_t = r_t r_{t+1} ... r_{T-1}, gamma_T = 1.
std::vector<double> discount_factors(const MarketSpec& market);

/// The LQ problem the mean-variance problem embeds into: A_t = r_t,
/// B_t = P_t, S = 0, q_t = 0, q_T = 1, u >= 0.
ProblemSpec embedded_problem(const MarketSpec& market);

struct MvCalibration {
    double lambda_star = 0.0;
    double x0 = 0.0;
    double xd = 0.0;
    std::size_t initial_state = 0;
    std::vector<double> gamma;       // T + 1 entries
    std::vector<double> threshold;   // (x_d - lambda*) / gamma_t, T + 1 entries
    RiccatiSolution riccati;         // Ghat/Gbar/Khat/Kbar of the embedded problem

    double Ghat0() const { return riccati.Ghat[0][initial_state]; }
    double Gbar0() const { return riccati.Gbar[0][initial_state]; }
};

/// Runs the recursion on the embedded problem and sets
///   lambda* = Gbar_0 (x_d - gamma_0 x_0) / (Gbar_0 - gamma_0^2)
/// with Gbar_0 conditioned on the initial state.
/// Throws Error(TargetBelowRiskfree) unless x_d > gamma_0 x_0.
MvCalibration calibrate(const MarketSpec& market, const SolverConfig& cfg = {});

/// Same gains, new target: only lambda* and the thresholds change.
MvCalibration recalibrate(const MvCalibration& cal, double xd);

/// Same gains and target with lambda fixed by the caller (dual evaluation).
MvCalibration with_lambda(const MvCalibration& cal, double lambda);

/// w = x - threshold_t; u = w Khat_t if w >= 0 and -w Kbar_t otherwise.
Vec mv_policy(const MvCalibration& cal, int t, std::size_t state, double x);

Controller mv_controller(const MvCalibration& cal);

/// Optimal value of min E[(x_T - x_d)^2 + 2 lambda (x_T - x_d) + sum u'Ru]:
///   ((gamma_0 x_0 - x_d + lambda)^2 G_0 - gamma_0^2 lambda^2) / gamma_0^2
/// where G_0 is Ghat_0 or Gbar_0 by the sign of x_0 - (x_d - lambda)/gamma_0.
double dual_value(const MvCalibration& cal, double lambda);

/// Var[x_T] of the optimal policy from the value identity:
/// Gbar_0 (x_d - gamma_0 x_0)^2 / (gamma_0^2 - Gbar_0) - penalty.
double analytic_variance(const MvCalibration& cal, double penalty);

/// Exact moments of terminal wealth by enumerating the scenario tree.
struct TerminalMoments {
    double mean = 0.0;
    double second = 0.0;    // E[x_T^2]
    double penalty = 0.0;   // E[sum u' R u]
    double objective(double lambda, double xd) const {
        return second - 2.0 * xd * mean + xd * xd + 2.0 * lambda * (mean - xd) + penalty;
    }
};
TerminalMoments exact_terminal_moments(const MarketSpec& market, const MvCalibration& cal);

struct FrontierPoint {
    double xd = 0.0;
    double lambda_star = 0.0;
    double mean_xT = 0.0;         // simulated
    double mean_stderr = 0.0;
    double var_xT = 0.0;          // analytic term minus simulated penalty
    double penalty = 0.0;         // simulated E[sum u' R u]
    double penalty_stderr = 0.0;
};

struct FrontierOptions {
    std::size_t paths = 100000;
    std::uint64_t seed = 1;
};

/// One point per target; every target reuses the same random numbers.
std::vector<FrontierPoint> frontier(const MarketSpec& market, const MvCalibration& cal,
                                    const std::vector<double>& targets, const FrontierOptions& opt = {});

/// Simulated terminal wealth under the calibrated policy.
SimulationResult simulate_market(const MarketSpec& market, const MvCalibration& cal, std::size_t paths,
                                 std::uint64_t seed, bool record_paths = false);

} // namespace clq
