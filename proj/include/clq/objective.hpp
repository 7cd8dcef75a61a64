#pragma once

#include <span>
#include <vector>

#include "clq/model.hpp"

namespace clq {

/// Continuation coefficients: y applies where the next state is nonnegative,
/// z where it is negative.
struct ValuePair {
    double y = 0.0;
    double z = 0.0;
};

/// Which gain problem: `Hat` for x >= 0 (u = K x), `Bar` for x < 0 (u = -K x).
enum class Branch { Hat, Bar };

/// One scenario of a stage objective together with the continuation values
/// that apply on either side of zero for the next state.
struct ScenarioTerm {
    double a = 0.0;
    Vec b;
    double weight = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Stage objective
///   g(u, x)  = E[(u,x)'C(u,x) + (A x + B u)^2 (y 1{>=0} + z 1{<0})]
///   ghat(K)  = g(K, 1)
///   gbar(K)  = g(-K, -1)
/// evaluated exactly over a finite scenario distribution. Continuation values
/// may differ by scenario, which is how Markov models carry next-state values.
class ObjectiveContext {
public:
    ObjectiveContext(std::vector<ScenarioTerm> terms, CostSpec cost);

    /// Same continuation pair for every scenario.
    static ObjectiveContext make(const StochasticModel& model, std::size_t state, const CostSpec& cost, ValuePair values);
    /// Scenario-indexed continuation pairs (one entry per scenario of the model).
    static ObjectiveContext make(const StochasticModel& model, std::size_t state, const CostSpec& cost,
                                 std::span<const double> y, std::span<const double> z);

    Eigen::Index dim() const { return cost_.R.rows(); }
    const std::vector<ScenarioTerm>& terms() const { return terms_; }
    const CostSpec& cost() const { return cost_; }

    double eval_g(const Vec& u, double x) const;
    double eval_ghat(const Vec& K) const;
    double eval_gbar(const Vec& K) const;
    double eval(Branch branch, const Vec& K) const;

    Vec grad_ghat(const Vec& K) const;
    Vec grad_gbar(const Vec& K) const;
    Vec grad(Branch branch, const Vec& K) const;

    /// Hessian of the quadratic piece that is active at K (boundary scenarios
    /// counted on the y side).
    Mat hessian(Branch branch, const Vec& K) const;

private:
    void check_dim(const Vec& v) const;

    std::vector<ScenarioTerm> terms_;
    CostSpec cost_;
};

} // namespace clq
