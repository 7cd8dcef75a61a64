#include "clq/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace clq::lp {
namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;

// Tableau in canonical form: rows 0..m-1 constraints, row m reduced costs.
// Column `cols` holds the right-hand side (and minus the objective in row m).
struct Tableau {
    Eigen::MatrixXd t;
    std::vector<int> basis;
    int cols = 0;
    int rows = 0;

    void pivot(int r, int c) {
        t.row(r) /= t(r, c);
        for (int i = 0; i <= rows; ++i) {
            if (i != r && t(i, c) != 0.0) {
                t.row(i) -= t(i, c) * t.row(r);
            }
        }
        basis[r] = c;
    }

    // Returns false when unbounded. `allowed` masks columns eligible to enter.
    bool run(const std::vector<bool>& allowed) {
        for (int guard = 0; guard < 100000; ++guard) {
            int enter = -1;
            for (int j = 0; j < cols; ++j) {
                if (allowed[j] && t(rows, j) < -kCostTol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < rows; ++i) {
                const double a = t(i, enter);
                if (a > kPivotTol) {
                    const double ratio = t(i, cols) / a;
                    if (ratio < best - 1e-14 ||
                        (std::abs(ratio - best) <= 1e-14 && leave >= 0 && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        return true;
    }
};

struct Setup {
    Tableau tab;
    int n = 0;
    int m = 0;
    int first_art = 0;
};

Setup build_phase_one(const Eigen::MatrixXd& H, const Eigen::VectorXd& d) {
    Setup s;
    s.n = static_cast<int>(H.cols());
    s.m = static_cast<int>(H.rows());
    int n_art = 0;
    for (int i = 0; i < s.m; ++i) {
        if (d(i) < 0.0) ++n_art;
    }
    s.first_art = 2 * s.n + s.m;
    auto& tab = s.tab;
    tab.rows = s.m;
    tab.cols = s.first_art + n_art;
    tab.t = Eigen::MatrixXd::Zero(s.m + 1, tab.cols + 1);
    tab.basis.assign(s.m, -1);
    int art = s.first_art;
    for (int i = 0; i < s.m; ++i) {
        const double sign = d(i) < 0.0 ? -1.0 : 1.0;
        tab.t.block(i, 0, 1, s.n) = sign * H.row(i);
        tab.t.block(i, s.n, 1, s.n) = -sign * H.row(i);
        tab.t(i, 2 * s.n + i) = sign;
        tab.t(i, tab.cols) = sign * d(i);
        if (sign < 0.0) {
            tab.t(i, art) = 1.0;
            tab.basis[i] = art++;
            // Phase-one objective: sum of artificials, expressed in reduced form.
            tab.t.row(s.m) -= tab.t.row(i);
            tab.t(s.m, tab.basis[i]) = 0.0;
        } else {
            tab.basis[i] = 2 * s.n + i;
        }
    }
    return s;
}

// Phase one; on success artificials are driven out of the basis where possible.
bool phase_one(Setup& s) {
    auto& tab = s.tab;
    std::vector<bool> allowed(tab.cols, true);
    tab.run(allowed);
    if (-tab.t(s.m, tab.cols) > 1e-9 * (1.0 + tab.t.col(tab.cols).head(s.m).cwiseAbs().maxCoeff())) {
        return false;
    }
    for (int i = 0; i < s.m; ++i) {
        if (tab.basis[i] < s.first_art) continue;
        for (int j = 0; j < s.first_art; ++j) {
            if (std::abs(tab.t(i, j)) > 1e-9) {
                tab.pivot(i, j);
                break;
            }
        }
    }
    return true;
}

Eigen::VectorXd extract(const Setup& s) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(s.n);
    for (int i = 0; i < s.m; ++i) {
        const int b = s.tab.basis[i];
        if (b < s.n) {
            x(b) += s.tab.t(i, s.tab.cols);
        } else if (b < 2 * s.n) {
            x(b - s.n) -= s.tab.t(i, s.tab.cols);
        }
    }
    return x;
}

} // namespace

Result find_feasible(const Eigen::MatrixXd& H, const Eigen::VectorXd& d) {
    Result res;
    if (H.rows() == 0) {
        res.status = Status::Optimal;
        res.x = Eigen::VectorXd::Zero(H.cols());
        return res;
    }
    Setup s = build_phase_one(H, d);
    if (!phase_one(s)) {
        res.status = Status::Infeasible;
        return res;
    }
    res.status = Status::Optimal;
    res.x = extract(s);
    return res;
}

Result minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& H, const Eigen::VectorXd& d) {
    Result res;
    const int n = static_cast<int>(H.cols());
    if (H.rows() == 0) {
        if (c.cwiseAbs().maxCoeff() > 0.0) {
            res.status = Status::Unbounded;
        } else {
            res.status = Status::Optimal;
            res.x = Eigen::VectorXd::Zero(n);
        }
        return res;
    }
    Setup s = build_phase_one(H, d);
    if (!phase_one(s)) {
        res.status = Status::Infeasible;
        return res;
    }
    auto& tab = s.tab;
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(tab.cols);
    cost.head(n) = c;
    cost.segment(n, n) = -c;
    tab.t.row(s.m).setZero();
    tab.t.row(s.m).head(tab.cols) = cost.transpose();
    for (int i = 0; i < s.m; ++i) {
        const double cb = cost(tab.basis[i]);
        if (cb != 0.0) tab.t.row(s.m) -= cb * tab.t.row(i);
    }
    std::vector<bool> allowed(tab.cols, true);
    for (int j = s.first_art; j < tab.cols; ++j) allowed[j] = false;
    if (!tab.run(allowed)) {
        res.status = Status::Unbounded;
        return res;
    }
    res.status = Status::Optimal;
    res.x = extract(s);
    res.objective = c.dot(res.x);
    return res;
}

} // namespace clq::lp
