#include "clq/model.hpp"

#include <cmath>
#include <sstream>

#include "clq/errors.hpp"
#include "clq/lp.hpp"
#include "clq/polytope.hpp"

namespace clq {

bool is_markov(const StochasticModel& model) {
    return std::holds_alternative<MarkovModel>(model);
}

Eigen::Index control_dim(const StochasticModel& model) {
    return std::visit([](const auto& m) { return m.dim(); }, model);
}

std::size_t num_states(const StochasticModel& model) {
    if (const auto* mk = std::get_if<MarkovModel>(&model)) return mk->size();
    return 1;
}

std::size_t num_scenarios(const StochasticModel& model) {
    return std::visit([](const auto& m) { return m.size(); }, model);
}

std::vector<WeightedScenario> conditional(const StochasticModel& model, std::size_t state) {
    std::vector<WeightedScenario> out;
    if (const auto* iid = std::get_if<ScenarioSet>(&model)) {
        out.reserve(iid->size());
        for (std::size_t k = 0; k < iid->size(); ++k) {
            const auto& s = iid->scenarios[k];
            out.push_back({k, s.a, s.b, s.p});
        }
        return out;
    }
    const auto& mk = std::get<MarkovModel>(model);
    if (state >= mk.size()) {
        throw Error(ErrorCode::OutOfRange, "Markov state " + std::to_string(state + 1) + " out of range (model has " +
                                               std::to_string(mk.size()) + " states)");
    }
    out.reserve(mk.size());
    for (std::size_t k = 0; k < mk.size(); ++k) {
        out.push_back({k, mk.states[k].a, mk.states[k].b, mk.transition(static_cast<Eigen::Index>(state), static_cast<Eigen::Index>(k))});
    }
    return out;
}

Mat CostSpec::block() const {
    const auto n = R.rows();
    Mat C(n + 1, n + 1);
    C.topLeftCorner(n, n) = R;
    C.topRightCorner(n, 1) = S;
    C.bottomLeftCorner(1, n) = S.transpose();
    C(n, n) = q;
    return C;
}

ConstraintSpec ConstraintSpec::unconstrained(Eigen::Index n) {
    return {Mat::Zero(1, n), Vec::Zero(1)};
}

ConstraintSpec ConstraintSpec::box(const Vec& lower, const Vec& upper) {
    const auto n = lower.size();
    ConstraintSpec c{Mat::Zero(2 * n, n), Vec::Zero(2 * n)};
    c.H.topRows(n) = Mat::Identity(n, n);
    c.H.bottomRows(n) = -Mat::Identity(n, n);
    c.d.head(n) = upper;
    c.d.tail(n) = -lower;
    return c;
}

ConstraintSpec ConstraintSpec::nonnegative(Eigen::Index n) {
    return {-Mat::Identity(n, n), Vec::Zero(n)};
}

bool ConstraintSpec::is_unconstrained() const {
    return H.size() == 0 || (H.cwiseAbs().maxCoeff() == 0.0 && (d.array() >= 0.0).all());
}

bool ConstraintSpec::contains(const Vec& K, double tol) const {
    if (H.rows() == 0) return true;
    return ((H * K - d).array() <= tol).all();
}

const StochasticModel& ProblemSpec::model_at(int t) const {
    if (stage_models.empty()) return model;
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(t, 0)), stage_models.size() - 1);
    return stage_models[idx];
}

const CostSpec& ProblemSpec::cost_at(int t) const {
    if (costs.size() == 1) return costs.front();
    if (t < 0 || static_cast<std::size_t>(t) >= costs.size()) {
        throw Error(ErrorCode::OutOfRange, "no cost block for stage " + std::to_string(t));
    }
    return costs[static_cast<std::size_t>(t)];
}

const ConstraintSpec& ProblemSpec::constraint_at(int t) const {
    if (constraints.size() == 1) return constraints.front();
    if (t < 0 || static_cast<std::size_t>(t) >= constraints.size()) {
        throw Error(ErrorCode::OutOfRange, "no constraint for stage " + std::to_string(t));
    }
    return constraints[static_cast<std::size_t>(t)];
}

std::string ValidationReport::summary() const {
    if (ok()) return "valid";
    std::ostringstream os;
    for (const auto& v : violations) os << v.what << ": " << v.detail << "\n";
    return os.str();
}

double min_eigenvalue(const Mat& M) {
    if (M.size() == 0) return 0.0;
    const Mat sym = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Mat& M) {
    if (M.size() == 0) return 0.0;
    const Mat sym = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

Moments moments(const StochasticModel& model, std::optional<std::size_t> state) {
    if (is_markov(model) && !state) {
        throw Error(ErrorCode::OutOfRange, "moments of a Markov model need a conditioning state");
    }
    const auto n = control_dim(model);
    Moments m;
    m.EB = Vec::Zero(n);
    m.EBB = Mat::Zero(n, n);
    m.EAB = Vec::Zero(n);
    for (const auto& s : conditional(model, state.value_or(0))) {
        m.EA2 += s.weight * s.a * s.a;
        m.EA += s.weight * s.a;
        m.EB += s.weight * s.b;
        m.EBB += s.weight * s.b * s.b.transpose();
        m.EAB += s.weight * s.a * s.b;
    }
    m.CovB = m.EBB - m.EB * m.EB.transpose();
    return m;
}

Vec feasible_gain(const ConstraintSpec& constraint) {
    const auto res = lp::find_feasible(constraint.H, constraint.d);
    if (res.status != lp::Status::Optimal) {
        throw Error(ErrorCode::Infeasible, "gain set {K : H K <= d} is empty");
    }
    return res.x;
}

namespace {

void check_distribution(std::vector<Violation>& out, const std::string& label,
                        const std::vector<WeightedScenario>& dist, Eigen::Index n) {
    double total = 0.0;
    for (const auto& s : dist) {
        if (s.weight < 0.0 || s.weight > 1.0) {
            out.push_back({"probability", label + ": weight of scenario " + std::to_string(s.index + 1) +
                                              " outside [0,1]", s.weight});
        }
        total += s.weight;
    }
    if (std::abs(total - 1.0) > kProbabilityTol) {
        std::ostringstream os;
        os.precision(17);
        os << label << ": probabilities sum to " << total;
        out.push_back({"probability", os.str(), total});
    }
    Vec EB = Vec::Zero(n);
    Mat EBB = Mat::Zero(n, n);
    for (const auto& s : dist) {
        EB += s.weight * s.b;
        EBB += s.weight * s.b * s.b.transpose();
    }
    const double lam = min_eigenvalue(EBB - EB * EB.transpose());
    if (!(lam > kEigenTol)) {
        std::ostringstream os;
        os << label << ": Cov[B] is not positive definite (min eigenvalue " << lam << ")";
        out.push_back({"covariance", os.str(), lam});
    }
}

void check_model(std::vector<Violation>& out, const StochasticModel& model, const std::string& where) {
    const auto n = control_dim(model);
    if (num_scenarios(model) == 0) {
        out.push_back({"model", where + "model has no scenarios", 0.0});
        return;
    }
    if (n < 1) {
        out.push_back({"dimension", where + "control dimension must be at least 1", static_cast<double>(n)});
        return;
    }
    bool dims_ok = true;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            std::size_t k = 0;
            if constexpr (std::is_same_v<T, ScenarioSet>) {
                for (const auto& s : m.scenarios) {
                    ++k;
                    if (s.b.size() != n) {
                        dims_ok = false;
                        out.push_back({"dimension", where + "scenario " + std::to_string(k) + " has b of length " +
                                                        std::to_string(s.b.size()) + ", expected " + std::to_string(n),
                                       static_cast<double>(s.b.size())});
                    }
                }
            } else {
                for (const auto& s : m.states) {
                    ++k;
                    if (s.b.size() != n) {
                        dims_ok = false;
                        out.push_back({"dimension", where + "state " + std::to_string(k) + " has b of length " +
                                                        std::to_string(s.b.size()) + ", expected " + std::to_string(n),
                                       static_cast<double>(s.b.size())});
                    }
                }
            }
        },
        model);
    if (!dims_ok) return;

    if (const auto* iid = std::get_if<ScenarioSet>(&model)) {
        (void)iid;
        check_distribution(out, where + "scenario set", conditional(model), n);
        return;
    }
    const auto& mk = std::get<MarkovModel>(model);
    const auto m = static_cast<Eigen::Index>(mk.size());
    if (mk.transition.rows() != m || mk.transition.cols() != m) {
        out.push_back({"transition", where + "transition matrix must be " + std::to_string(m) + "x" + std::to_string(m),
                       static_cast<double>(mk.transition.rows())});
        return;
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        check_distribution(out, where + "transition row " + std::to_string(j + 1),
                           conditional(model, static_cast<std::size_t>(j)), n);
    }
}

} // namespace

ValidationReport validate_model(const StochasticModel& model) {
    ValidationReport report;
    check_model(report.violations, model, "");
    return report;
}

ValidationReport validate(const ProblemSpec& spec) {
    ValidationReport report;
    auto& out = report.violations;
    check_model(out, spec.model, "");
    const auto n = spec.dim();
    const bool infinite = spec.infinite();
    if (!infinite && spec.horizon < 1) {
        out.push_back({"horizon", "horizon must be a positive integer or infinite", static_cast<double>(spec.horizon)});
    }
    if (!std::isfinite(spec.x0)) out.push_back({"x0", "initial state must be finite", spec.x0});

    if (!spec.stage_models.empty()) {
        if (infinite) {
            out.push_back({"horizon", "per-stage models are not allowed with an infinite horizon", 0.0});
        } else if (static_cast<int>(spec.stage_models.size()) != spec.horizon) {
            out.push_back({"stages", "expected " + std::to_string(spec.horizon) + " per-stage models, got " +
                                         std::to_string(spec.stage_models.size()),
                           static_cast<double>(spec.stage_models.size())});
        }
        for (std::size_t t = 0; t < spec.stage_models.size(); ++t) {
            const auto& sm = spec.stage_models[t];
            const std::string where = "stage " + std::to_string(t) + " model: ";
            if (control_dim(sm) != n || num_states(sm) != num_states(spec.model) || is_markov(sm) != is_markov(spec.model)) {
                out.push_back({"stages", where + "shape differs from the base model", 0.0});
                continue;
            }
            check_model(out, sm, where);
        }
    }
    if (infinite && is_markov(spec.model)) {
        out.push_back({"horizon", "infinite-horizon problems require an i.i.d. scenario model", 0.0});
    }

    // costs
    const std::size_t T = infinite ? 1 : static_cast<std::size_t>(std::max(spec.horizon, 1));
    if (spec.costs.empty() || (spec.costs.size() != 1 && spec.costs.size() != T)) {
        out.push_back({"stages", "expected 1 or " + std::to_string(T) + " cost blocks, got " + std::to_string(spec.costs.size()),
                       static_cast<double>(spec.costs.size())});
    }
    for (std::size_t t = 0; t < spec.costs.size(); ++t) {
        const auto& c = spec.costs[t];
        const std::string where = spec.costs.size() == 1 ? "cost: " : "cost at stage " + std::to_string(t) + ": ";
        if (c.R.rows() != n || c.R.cols() != n || c.S.size() != n) {
            out.push_back({"dimension", where + "R must be n x n and S of length n with n = " + std::to_string(n), 0.0});
            continue;
        }
        const double lam = min_eigenvalue(c.block());
        if (infinite) {
            if (!(lam > kEigenTol)) {
                std::ostringstream os;
                os << where << "C is not positive definite (min eigenvalue " << lam << ")";
                out.push_back({"cost", os.str(), lam});
            }
        } else if (lam < -kEigenTol) {
            std::ostringstream os;
            os << where << "C is not positive semidefinite (min eigenvalue " << lam << ")";
            out.push_back({"cost", os.str(), lam});
        }
    }
    if (!infinite && !(spec.q_terminal >= 0.0)) {
        out.push_back({"cost", "terminal weight qT must be nonnegative", spec.q_terminal});
    }

    // constraints
    if (spec.constraints.empty() || (spec.constraints.size() != 1 && spec.constraints.size() != T)) {
        out.push_back({"stages", "expected 1 or " + std::to_string(T) + " constraint blocks, got " +
                                     std::to_string(spec.constraints.size()),
                       static_cast<double>(spec.constraints.size())});
    }
    for (std::size_t t = 0; t < spec.constraints.size(); ++t) {
        const auto& c = spec.constraints[t];
        const std::string where =
            spec.constraints.size() == 1 ? "constraint: " : "constraint at stage " + std::to_string(t) + ": ";
        if (c.H.cols() != n || c.H.rows() != c.d.size()) {
            out.push_back({"dimension", where + "H must be m x n and d of length m with n = " + std::to_string(n), 0.0});
            continue;
        }
        if (lp::find_feasible(c.H, c.d).status != lp::Status::Optimal) {
            out.push_back({"constraint", where + "gain set {K : H K <= d} is empty", 0.0});
            report.kset_bounded.push_back(false);
            continue;
        }
        report.kset_bounded.push_back(polytope::is_bounded(c.H, c.d));
    }
    return report;
}

} // namespace clq
