#include "clq/riccati.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "clq/errors.hpp"
#include "clq/polytope.hpp"

namespace clq {
namespace {

void check_finite_horizon(const ProblemSpec& spec) {
    if (spec.infinite() || spec.horizon < 1) {
        throw Error(ErrorCode::InvalidModel, "finite horizon T >= 1 required");
    }
}

std::size_t common_state_count(const ProblemSpec& spec) {
    const auto m = num_states(spec.model_at(0));
    for (int t = 1; t < spec.horizon; ++t) {
        if (num_states(spec.model_at(t)) != m) {
            throw Error(ErrorCode::DimensionMismatch, "stage models disagree on the number of Markov states");
        }
    }
    return m;
}

RiccatiSolution allocate(const ProblemSpec& spec, std::size_t m) {
    RiccatiSolution sol;
    const auto T = static_cast<std::size_t>(spec.horizon);
    sol.horizon = spec.horizon;
    sol.num_states = m;
    sol.markov = is_markov(spec.model);
    sol.Ghat.assign(T + 1, std::vector<double>(m, 0.0));
    sol.Gbar.assign(T + 1, std::vector<double>(m, 0.0));
    sol.Khat.assign(T, std::vector<Vec>(m));
    sol.Kbar.assign(T, std::vector<Vec>(m));
    sol.Ghat[T].assign(m, spec.q_terminal);
    sol.Gbar[T].assign(m, spec.q_terminal);
    return sol;
}

ObjectiveContext stage_context(const StochasticModel& model, std::size_t j, const CostSpec& cost,
                               const std::vector<double>& ghat_next, const std::vector<double>& gbar_next) {
    if (is_markov(model)) return ObjectiveContext::make(model, j, cost, ghat_next, gbar_next);
    return ObjectiveContext::make(model, 0, cost, ValuePair{ghat_next[0], gbar_next[0]});
}

std::string where(int t, std::size_t j, bool markov) {
    std::string s = "stage " + std::to_string(t);
    if (markov) s += ", state " + std::to_string(j + 1);
    return s + ": ";
}

} // namespace

RiccatiSolution solve_finite(const ProblemSpec& spec, const SolverConfig& cfg) {
    check_finite_horizon(spec);
    const auto m = common_state_count(spec);
    auto sol = allocate(spec, m);
    for (int t = spec.horizon - 1; t >= 0; --t) {
        const auto ts = static_cast<std::size_t>(t);
        const auto& model = spec.model_at(t);
        const auto& cost = spec.cost_at(t);
        const auto& constraint = spec.constraint_at(t);
        for (std::size_t j = 0; j < m; ++j) {
            try {
                const auto ctx = stage_context(model, j, cost, sol.Ghat[ts + 1], sol.Gbar[ts + 1]);
                const auto hat = minimize(ctx, Branch::Hat, constraint, cfg);
                const auto bar = minimize(ctx, Branch::Bar, constraint, cfg);
                sol.Khat[ts][j] = hat.K;
                sol.Kbar[ts][j] = bar.K;
                sol.Ghat[ts][j] = hat.value;
                sol.Gbar[ts][j] = bar.value;
                sol.converged = sol.converged && hat.converged && bar.converged;
                sol.max_kkt_residual = std::max({sol.max_kkt_residual, hat.kkt_residual, bar.kkt_residual});
            } catch (const Error& e) {
                throw e.annotated(where(t, j, sol.markov));
            }
        }
    }
    return sol;
}

RiccatiSolution solve_unconstrained(const ProblemSpec& spec) {
    check_finite_horizon(spec);
    for (int t = 0; t < spec.horizon; ++t) {
        if (!spec.constraint_at(t).is_unconstrained()) {
            throw Error(ErrorCode::InvalidModel, "closed form needs the unconstrained encoding H = 0, d = 0");
        }
    }
    const auto m = common_state_count(spec);
    auto sol = allocate(spec, m);
    for (int t = spec.horizon - 1; t >= 0; --t) {
        const auto ts = static_cast<std::size_t>(t);
        const auto& cost = spec.cost_at(t);
        for (std::size_t j = 0; j < m; ++j) {
            Mat M = cost.R;
            Vec v = cost.S;
            double G = cost.q;
            for (const auto& s : conditional(spec.model_at(t), j)) {
                const double g_next = sol.Ghat[ts + 1][sol.markov ? s.index : 0];
                M += s.weight * g_next * s.b * s.b.transpose();
                v += s.weight * g_next * s.a * s.b;
                G += s.weight * g_next * s.a * s.a;
            }
            // Minimum-norm solution; a v outside range(M) leaves the stage unbounded below.
            Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
            cod.setThreshold(1e-12);
            const Vec K = -cod.solve(v);
            const double scale = 1.0 + M.cwiseAbs().maxCoeff() * (1.0 + K.norm()) + v.norm();
            if (!K.allFinite() || (M * K + v).norm() > 1e-9 * scale) {
                throw Error(ErrorCode::SingularStageMatrix,
                            where(t, j, sol.markov) + "R + E[G B'B] is singular and the stage problem is unbounded");
            }
            G += v.dot(K);  // q + E[G A^2] - v' M^+ v
            sol.Ghat[ts][j] = G;
            sol.Gbar[ts][j] = G;
            sol.Khat[ts][j] = K;
            sol.Kbar[ts][j] = -K;
        }
    }
    return sol;
}

FixedPoint solve_infinite(const ProblemSpec& spec, const SolverConfig& cfg, const FixedPointOptions& opt) {
    if (is_markov(spec.model)) {
        throw Error(ErrorCode::InvalidModel, "infinite horizon is supported for i.i.d. models only");
    }
    const auto& cost = spec.cost_at(0);
    const auto& constraint = spec.constraint_at(0);
    FixedPoint fp;
    double gh = 0.0;
    double gb = 0.0;
    fp.iterates.emplace_back(gh, gb);
    for (int i = 0; i < opt.max_iter; ++i) {
        const auto ctx = ObjectiveContext::make(spec.model, 0, cost, ValuePair{gh, gb});
        SolveResult hat;
        SolveResult bar;
        try {
            hat = minimize(ctx, Branch::Hat, constraint, cfg);
            bar = minimize(ctx, Branch::Bar, constraint, cfg);
        } catch (const Error& e) {
            throw e.annotated("iteration " + std::to_string(i + 1) + ": ");
        }
        const double dh = std::abs(hat.value - gh);
        const double db = std::abs(bar.value - gb);
        gh = hat.value;
        gb = bar.value;
        fp.iterates.emplace_back(gh, gb);
        fp.Khat_star = hat.K;
        fp.Kbar_star = bar.K;
        if (dh <= opt.eps && db <= opt.eps) {
            fp.converged = true;
            break;
        }
        if (std::min(gh, gb) > opt.ceiling || !std::isfinite(gh) || !std::isfinite(gb)) {
            fp.diverged = true;
            break;
        }
    }
    if (!fp.converged && !fp.diverged && fp.iterates.size() >= 2) {
        const auto& [h1, b1] = fp.iterates[fp.iterates.size() - 1];
        const auto& [h0, b0] = fp.iterates[fp.iterates.size() - 2];
        const double growth = std::max((h1 - h0) / std::max(std::abs(h0), 1e-300),
                                       (b1 - b0) / std::max(std::abs(b0), 1e-300));
        fp.diverged = growth >= opt.growth_tol;
    }
    fp.Ghat_star = gh;
    fp.Gbar_star = gb;
    return fp;
}

ThresholdReport check_threshold(const ProblemSpec& spec, std::optional<double> k_max) {
    if (is_markov(spec.model)) {
        throw Error(ErrorCode::InvalidModel, "threshold check is defined for i.i.d. models only");
    }
    const auto mom = moments(spec.model);
    ThresholdReport r;
    r.EA2 = mom.EA2;
    r.eta = max_eigenvalue(mom.EBB);
    if (mom.EB.size() == 1 && mom.EBB(0, 0) > 0.0) {
        const double num = mom.EA * mom.EB(0);
        r.classical_threshold = mom.EA2 - num * num / mom.EBB(0, 0);
    }
    const auto& c = spec.constraint_at(0);
    r.kset_bounded = !c.is_unconstrained() && polytope::is_bounded(c.H, c.d);
    if (k_max) {
        r.K_max = *k_max;
    } else if (r.kset_bounded) {
        r.K_max = polytope::max_norm(c.H, c.d);
    }
    r.sufficient_lhs = r.K_max ? r.EA2 + r.eta * *r.K_max : std::numeric_limits<double>::infinity();
    r.sufficient_holds = r.sufficient_lhs < 1.0;
    return r;
}

} // namespace clq
