#include "clq/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "clq/errors.hpp"
#include "clq/lp.hpp"

namespace clq::polytope {

std::optional<Box> as_box(const Eigen::MatrixXd& H, const Eigen::VectorXd& d) {
    const auto n = H.cols();
    const double inf = std::numeric_limits<double>::infinity();
    Box box{Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        Eigen::Index col = -1;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (H(i, j) != 0.0) {
                if (col >= 0) return std::nullopt;
                col = j;
            }
        }
        if (col < 0) {
            if (d(i) < 0.0) return std::nullopt;  // infeasible row, not a box
            continue;
        }
        const double bound = d(i) / H(i, col);
        if (H(i, col) > 0.0) {
            box.upper(col) = std::min(box.upper(col), bound);
        } else {
            box.lower(col) = std::max(box.lower(col), bound);
        }
    }
    return box;
}

QpSolution solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& g,
                    const Eigen::MatrixXd& H, const Eigen::VectorXd& d) {
    const auto n = Q.rows();
    const auto m = H.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularStageMatrix, "QP Hessian is not positive definite");
    }
    const Eigen::MatrixXd Qinv = llt.solve(Eigen::MatrixXd::Identity(n, n));

    // Constraints are handled in the form n_i'x >= b_i with n_i = -h_i, b_i = -d_i.
    Eigen::VectorXd x = -Qinv * g;
    std::vector<Eigen::Index> active;
    std::vector<double> u;
    const double scale = 1.0 + (m > 0 ? d.cwiseAbs().maxCoeff() : 0.0);
    const double feas_tol = 1e-13 * scale;

    const auto direction = [&](const Eigen::VectorXd& np, Eigen::VectorXd& z, Eigen::VectorXd& r) {
        const auto k = static_cast<Eigen::Index>(active.size());
        if (k == 0) {
            z = Qinv * np;
            r.resize(0);
            return;
        }
        Eigen::MatrixXd N(n, k);
        for (Eigen::Index j = 0; j < k; ++j) N.col(j) = -H.row(active[j]).transpose();
        const Eigen::MatrixXd QiN = Qinv * N;
        const Eigen::MatrixXd M = N.transpose() * QiN;
        r = M.ldlt().solve(QiN.transpose() * np);
        z = Qinv * np - QiN * r;
    };

    const int guard_max = static_cast<int>(10 * (m + n) + 100);
    for (int outer = 0; outer < guard_max; ++outer) {
        Eigen::Index p = -1;
        double worst = -feas_tol;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (std::find(active.begin(), active.end(), i) != active.end()) continue;
            const double s = d(i) - H.row(i).dot(x);  // n_i'x - b_i
            if (s < worst) {
                worst = s;
                p = i;
            }
        }
        if (p < 0) {
            QpSolution sol;
            sol.x = x;
            sol.multipliers = Eigen::VectorXd::Zero(m);
            for (std::size_t j = 0; j < active.size(); ++j) sol.multipliers(active[j]) = u[j];
            return sol;
        }
        const Eigen::VectorXd np = -H.row(p).transpose();
        double up = 0.0;
        for (int inner = 0; inner < guard_max; ++inner) {
            Eigen::VectorXd z, r;
            direction(np, z, r);
            // dual step length
            double t1 = std::numeric_limits<double>::infinity();
            std::size_t drop = 0;
            for (std::size_t j = 0; j < active.size(); ++j) {
                if (r(static_cast<Eigen::Index>(j)) > 1e-14) {
                    const double ratio = u[j] / r(static_cast<Eigen::Index>(j));
                    if (ratio < t1) {
                        t1 = ratio;
                        drop = j;
                    }
                }
            }
            const double s_p = d(p) - H.row(p).dot(x);
            const double zn = z.dot(np);
            const bool dependent = zn <= 1e-14 * (1.0 + np.squaredNorm());
            double t2 = dependent ? std::numeric_limits<double>::infinity() : -s_p / zn;
            if (dependent && !std::isfinite(t1)) {
                throw Error(ErrorCode::Infeasible, "polyhedron {K : H K <= d} is empty");
            }
            const double t = std::min(t1, t2);
            if (!dependent) x += t * z;
            for (std::size_t j = 0; j < active.size(); ++j) u[j] -= t * r(static_cast<Eigen::Index>(j));
            up += t;
            if (t2 <= t1) {
                active.push_back(p);
                u.push_back(up);
                break;
            }
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
            u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
        }
    }
    throw Error(ErrorCode::NotConverged, "active-set QP exceeded its iteration budget");
}

QpSolution project(const Eigen::MatrixXd& H, const Eigen::VectorXd& d, const Eigen::VectorXd& v) {
    const auto n = v.size();
    if (auto box = as_box(H, d)) {
        if ((box->lower.array() > box->upper.array()).any()) {
            throw Error(ErrorCode::Infeasible, "box bounds are inconsistent");
        }
        QpSolution sol;
        sol.x = v.cwiseMax(box->lower).cwiseMin(box->upper);
        sol.multipliers = Eigen::VectorXd::Zero(H.rows());
        // KKT: x - v + H'lambda = 0, so a clipped coordinate puts (v_j - x_j) / H_ij on
        // the first row that attains its bound.
        for (Eigen::Index j = 0; j < n; ++j) {
            const double diff = v(j) - sol.x(j);
            if (diff == 0.0) continue;
            const double bound = diff > 0.0 ? box->upper(j) : box->lower(j);
            for (Eigen::Index i = 0; i < H.rows(); ++i) {
                const double h = H(i, j);
                if (h == 0.0 || (h > 0.0) != (diff > 0.0) || d(i) / h != bound) continue;
                if ((H.row(i).array() != 0.0).count() != 1) continue;
                sol.multipliers(i) = diff / h;
                break;
            }
        }
        return sol;
    }
    return solve_qp(Eigen::MatrixXd::Identity(n, n), -v, H, d);
}

bool is_bounded(const Eigen::MatrixXd& H, const Eigen::VectorXd& d) {
    const auto n = H.cols();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
            c(j) = sign;
            const auto res = lp::minimize(c, H, d);
            if (res.status == lp::Status::Unbounded) return false;
        }
    }
    return true;
}

namespace {

// Calls fn on every k-subset of {0..m-1}.
template <typename Fn>
void for_each_subset(int m, int k, Fn&& fn) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == m - k + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

} // namespace

double max_norm(const Eigen::MatrixXd& H, const Eigen::VectorXd& d, int max_dim, int max_rows) {
    const int n = static_cast<int>(H.cols());
    const int m = static_cast<int>(H.rows());
    if (n > max_dim || m > max_rows) {
        throw Error(ErrorCode::VertexEnumerationTooLarge,
                    "vertex enumeration limited to n <= " + std::to_string(max_dim) +
                        " and m <= " + std::to_string(max_rows) + "; supply a gain-norm bound");
    }
    if (m < n) {
        throw Error(ErrorCode::VertexEnumerationTooLarge, "polyhedron has no vertices (fewer rows than dimensions)");
    }
    double best = -1.0;
    const double tol = 1e-9 * (1.0 + d.cwiseAbs().maxCoeff());
    for_each_subset(m, n, [&](const std::vector<int>& rows) {
        Eigen::MatrixXd A(n, n);
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) {
            A.row(i) = H.row(rows[i]);
            b(i) = d(rows[i]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible()) return;
        const Eigen::VectorXd x = lu.solve(b);
        if (((H * x - d).array() <= tol).all()) best = std::max(best, x.norm());
    });
    if (best < 0.0) {
        throw Error(ErrorCode::Infeasible, "no feasible vertex found");
    }
    return best;
}

} // namespace clq::polytope
