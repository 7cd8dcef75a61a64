#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace clq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One realization of the random pair (A, B) with its probability.
struct Scenario {
    double a = 0.0;
    Vec b;
    double p = 0.0;
};

/// i.i.d. distribution of (A, B): a finite scenario set reused at every stage.
struct ScenarioSet {
    std::vector<Scenario> scenarios;

    Eigen::Index dim() const { return scenarios.empty() ? 0 : scenarios.front().b.size(); }
    std::size_t size() const { return scenarios.size(); }
};

/// One state of a Markov-modulated model: the realization it stands for.
struct MarkovState {
    double a = 0.0;
    Vec b;
};

/// Scenarios that transit among themselves according to `transition`.
/// Conditioning state j is the scenario realized in the previous period, so
/// the distribution used at a stage is row j of the transition matrix.
struct MarkovModel {
    std::vector<MarkovState> states;
    Mat transition;

    Eigen::Index dim() const { return states.empty() ? 0 : states.front().b.size(); }
    std::size_t size() const { return states.size(); }
};

using StochasticModel = std::variant<ScenarioSet, MarkovModel>;

bool is_markov(const StochasticModel& model);
Eigen::Index control_dim(const StochasticModel& model);
/// Number of conditioning states: 1 for i.i.d. models.
std::size_t num_states(const StochasticModel& model);
/// Number of scenarios an expectation runs over.
std::size_t num_scenarios(const StochasticModel& model);

/// Scenario k of a conditional distribution, with its weight.
struct WeightedScenario {
    std::size_t index = 0;
    double a = 0.0;
    Vec b;
    double weight = 0.0;
};

/// The distribution of (A, B) given the conditioning state (ignored for i.i.d.
/// models). Throws Error(OutOfRange) for an unknown state of a Markov model.
std::vector<WeightedScenario> conditional(const StochasticModel& model, std::size_t state = 0);

/// Per-stage penalty block C = [[R, S], [S', q]].
struct CostSpec {
    Mat R;
    Vec S;
    double q = 0.0;

    Mat block() const;
};

/// Control constraint H u <= d |x|, equivalently the gain set {K : H K <= d}.
struct ConstraintSpec {
    Mat H;
    Vec d;

    static ConstraintSpec unconstrained(Eigen::Index n);
    static ConstraintSpec box(const Vec& lower, const Vec& upper);
    static ConstraintSpec nonnegative(Eigen::Index n);

    bool is_unconstrained() const;
    bool contains(const Vec& K, double tol = 1e-8) const;
};

inline constexpr int kInfiniteHorizon = -1;

struct ProblemSpec {
    StochasticModel model;
    /// Optional per-stage models (size T); when empty `model` is used at every stage.
    std::vector<StochasticModel> stage_models;
    /// One entry (shared by all stages) or T entries.
    std::vector<CostSpec> costs;
    double q_terminal = 0.0;
    /// One entry (shared by all stages) or T entries.
    std::vector<ConstraintSpec> constraints;
    int horizon = 1;
    double x0 = 1.0;

    bool infinite() const { return horizon == kInfiniteHorizon; }
    const StochasticModel& model_at(int t) const;
    const CostSpec& cost_at(int t) const;
    const ConstraintSpec& constraint_at(int t) const;
    Eigen::Index dim() const { return control_dim(model); }
};

struct Violation {
    std::string what;      // which invariant
    std::string detail;    // human-readable description
    double value = 0.0;    // offending quantity (eigenvalue, row sum, ...)
};

struct ValidationReport {
    std::vector<Violation> violations;
    /// Boundedness of each distinct gain set, in constraint order.
    std::vector<bool> kset_bounded;

    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Exact scenario-weighted moments of (A, B).
struct Moments {
    double EA2 = 0.0;
    double EA = 0.0;
    Vec EB;
    Mat EBB;   // E[B'B]
    Vec EAB;   // E[A B']
    Mat CovB;  // E[B'B] - E[B']E[B]
};

Moments moments(const StochasticModel& model, std::optional<std::size_t> state = std::nullopt);

/// Smallest eigenvalue of a symmetric matrix (symmetrized first).
double min_eigenvalue(const Mat& M);
double max_eigenvalue(const Mat& M);

inline constexpr double kEigenTol = 1e-10;
inline constexpr double kProbabilityTol = 1e-12;

/// Some K with H K <= d, from an LP phase-one search. Throws Error(Infeasible).
Vec feasible_gain(const ConstraintSpec& constraint);

ValidationReport validate_model(const StochasticModel& model);
ValidationReport validate(const ProblemSpec& spec);

} // namespace clq
