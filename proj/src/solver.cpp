#include "clq/solver.hpp"

#include <cmath>
#include <limits>

#include "clq/errors.hpp"
#include "clq/polytope.hpp"

namespace clq {
namespace {

// Closed-form unconstrained minimizer with both continuation values set to max(y, z).
Vec unconstrained_start(const ObjectiveContext& ctx, Branch branch) {
    const auto n = ctx.dim();
    Mat M = ctx.cost().R;
    Vec v = ctx.cost().S;
    for (const auto& t : ctx.terms()) {
        const double G = std::max(t.y, t.z);
        M += t.weight * G * t.b * t.b.transpose();
        v += t.weight * G * t.a * t.b;
    }
    Eigen::LDLT<Mat> ldlt(M);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-14).all()) return Vec::Zero(n);
    Vec K = -ldlt.solve(v);
    if (!K.allFinite()) return Vec::Zero(n);
    // gbar(K) at y = z equals ghat(-K)
    return branch == Branch::Hat ? K : Vec(-K);
}

double active_tol(double d) { return 1e-8 * (1.0 + std::abs(d)); }

} // namespace

double kkt_residual(const Vec& grad, const ConstraintSpec& constraint, const Vec& K, std::vector<int>* active) {
    const auto& H = constraint.H;
    const auto& d = constraint.d;
    std::vector<int> rows;
    double infeas = 0.0;
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        if (H.row(i).cwiseAbs().maxCoeff() == 0.0) continue;
        const double slack = H.row(i).dot(K) - d(i);
        infeas = std::max(infeas, slack);
        if (slack >= -active_tol(d(i))) rows.push_back(static_cast<int>(i));
    }
    if (active) *active = rows;
    if (rows.empty()) return std::max(grad.norm(), infeas);

    // NNLS for multipliers: min |grad + H_A' lambda|^2, lambda >= 0
    const auto k = static_cast<Eigen::Index>(rows.size());
    Mat HA(k, H.cols());
    for (Eigen::Index j = 0; j < k; ++j) HA.row(j) = H.row(rows[static_cast<std::size_t>(j)]);
    const Mat Q = HA * HA.transpose() + 1e-13 * Mat::Identity(k, k);
    const Vec g = HA * grad;
    const auto sol = polytope::solve_qp(Q, g, -Mat::Identity(k, k), Vec::Zero(k));
    const Vec lambda = sol.x.cwiseMax(0.0);
    double comp = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto i = rows[static_cast<std::size_t>(j)];
        comp = std::max(comp, std::abs(lambda(j) * (H.row(i).dot(K) - d(i))));
    }
    return std::max({(grad + HA.transpose() * lambda).norm(), comp, infeas});
}

SolveResult minimize(const ObjectiveContext& ctx, Branch branch, const ConstraintSpec& constraint,
                     const SolverConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw Error(ErrorCode::InvalidModel, "solver tolerance must be positive");
    const auto n = ctx.dim();
    const auto& H = constraint.H;
    const auto& d = constraint.d;
    if (H.cols() != n || H.rows() != d.size()) {
        throw Error(ErrorCode::DimensionMismatch, "constraint dimensions do not match the control dimension");
    }

    Vec K;
    if (cfg.start) {
        K = *cfg.start;
        if (K.size() != n) throw Error(ErrorCode::DimensionMismatch, "start point has the wrong length");
        if (!constraint.contains(K)) K = polytope::project(H, d, K).x;
    } else {
        try {
            K = polytope::project(H, d, unconstrained_start(ctx, branch)).x;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Infeasible) throw;
            K = feasible_gain(constraint);  // throws Infeasible when the set is empty
        }
    }

    // Gradients scale with the curvature, so the stopping test does too.
    const double scale = std::max(1.0, ctx.hessian(branch, K).diagonal().cwiseAbs().maxCoeff());
    const double tol = cfg.tol * scale;

    SolveResult res;
    double f = ctx.eval(branch, K);
    if (cfg.record_trace) res.trace.push_back(f);
    for (int iter = 0; iter <= cfg.max_iter; ++iter) {
        const Vec g = ctx.grad(branch, K);
        const Vec pg_point = polytope::project(H, d, K - g).x;
        const double pg = (K - pg_point).norm();
        res.iterations = iter;
        if (pg <= tol) {
            const double kkt = kkt_residual(g, constraint, K, &res.active_rows);
            if (kkt <= 10.0 * tol) {
                res.converged = true;
                res.pg_residual = pg;
                res.kkt_residual = kkt;
                break;
            }
        }
        if (iter == cfg.max_iter) {
            res.pg_residual = pg;
            res.kkt_residual = kkt_residual(g, constraint, K, &res.active_rows);
            break;
        }

        // Quadratic model of the active piece, minimized over the polyhedron.
        Vec dir;
        const Mat Q = ctx.hessian(branch, K);
        const double qscale = 1.0 + Q.diagonal().cwiseAbs().maxCoeff();
        if (min_eigenvalue(Q) > 1e-12 * qscale) {
            try {
                dir = polytope::solve_qp(Q, g - Q * K, H, d).x - K;
            } catch (const Error&) {
                dir.resize(0);
            }
        }

        Vec trial;
        double f_trial = f;
        if (dir.size() == n && dir.allFinite() && g.dot(dir) < 0.0) {
            const double slope = g.dot(dir);
            double step = 1.0;
            trial = K + dir;
            f_trial = ctx.eval(branch, trial);
            while (f_trial > f + cfg.armijo * step * slope && step > 1e-20) {
                step *= cfg.backtrack;
                trial = K + step * dir;
                f_trial = ctx.eval(branch, trial);
            }
        } else {
            // Projected-gradient arc; expansion lets flat or linear pieces be
            // crossed (or found unbounded) in few iterations.
            const auto arc = [&](double s) { return Vec(polytope::project(H, d, K - s * g).x); };
            const auto accept = [&](const Vec& p, double fp) { return fp <= f + cfg.armijo * g.dot(p - K); };
            double step = 1.0;
            trial = pg_point;
            f_trial = ctx.eval(branch, trial);
            if (accept(trial, f_trial)) {
                while (step < 1e30) {
                    const Vec next = arc(2.0 * step);
                    const double f_next = ctx.eval(branch, next);
                    if (!accept(next, f_next) || f_next >= f_trial || (next - trial).norm() == 0.0) break;
                    step *= 2.0;
                    trial = next;
                    f_trial = f_next;
                    if (trial.norm() > cfg.divergence_norm) break;
                }
            } else {
                while (!accept(trial, f_trial) && step > 1e-20) {
                    step *= cfg.backtrack;
                    trial = arc(step);
                    f_trial = ctx.eval(branch, trial);
                }
            }
        }
        if (!(f_trial < f) && (trial - K).norm() <= tol) {
            // no representable progress left
            res.pg_residual = pg;
            res.kkt_residual = kkt_residual(g, constraint, K, &res.active_rows);
            res.converged = pg <= tol && res.kkt_residual <= 10.0 * tol;
            break;
        }
        if (f_trial > f) {
            res.pg_residual = pg;
            res.kkt_residual = kkt_residual(g, constraint, K, &res.active_rows);
            res.converged = pg <= tol && res.kkt_residual <= 10.0 * tol;
            break;
        }
        K = trial;
        f = f_trial;
        if (cfg.record_trace) res.trace.push_back(f);
        if (K.norm() > cfg.divergence_norm) {
            throw Error(ErrorCode::UnboundedBelow, "gain iterates diverged (|K| > " +
                                                       std::to_string(cfg.divergence_norm) + "); objective unbounded below");
        }
    }
    res.K = K;
    res.value = f;
    return res;
}

SolveResult brute_force_oracle(const ObjectiveContext& ctx, Branch branch, const ConstraintSpec& constraint,
                               double resolution) {
    const auto n = ctx.dim();
    if (n > 3) throw Error(ErrorCode::DimensionTooLarge, "grid oracle supports n <= 3");
    const auto box = polytope::as_box(constraint.H, constraint.d);
    if (!box || !box->lower.allFinite() || !box->upper.allFinite()) {
        throw Error(ErrorCode::NonBoxConstraint, "grid oracle needs a bounded box constraint");
    }
    if ((box->lower.array() > box->upper.array()).any()) {
        throw Error(ErrorCode::Infeasible, "box bounds are inconsistent");
    }
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        auto& ax = axes[static_cast<std::size_t>(j)];
        const double lo = box->lower(j);
        const double hi = box->upper(j);
        const auto count = static_cast<long>(std::floor((hi - lo) / resolution + 1e-9));
        for (long i = 0; i <= count; ++i) ax.push_back(lo + static_cast<double>(i) * resolution);
        if (hi - ax.back() > 1e-12) ax.push_back(hi);
    }

    SolveResult best;
    best.value = std::numeric_limits<double>::infinity();
    Vec K(n);
    std::size_t evaluations = 0;
    const auto visit = [&](auto&& self, Eigen::Index j) -> void {
        if (j == n) {
            ++evaluations;
            const double v = ctx.eval(branch, K);
            if (v < best.value) {
                best.value = v;
                best.K = K;
            }
            return;
        }
        for (double c : axes[static_cast<std::size_t>(j)]) {
            K(j) = c;
            self(self, j + 1);
        }
    };
    visit(visit, 0);
    best.iterations = static_cast<int>(std::min<std::size_t>(evaluations, std::numeric_limits<int>::max()));
    best.converged = true;
    best.kkt_residual = kkt_residual(ctx.grad(branch, best.K), constraint, best.K, &best.active_rows);
    return best;
}

} // namespace clq
