#pragma once

#include <optional>

#include <Eigen/Dense>

namespace clq::polytope {

struct Box {
    Eigen::VectorXd lower;  // may hold -inf
    Eigen::VectorXd upper;  // may hold +inf
};

// Recognizes H K <= d as a coordinate box when every row has a single
// nonzero entry. All-zero rows with d >= 0 are ignored.
std::optional<Box> as_box(const Eigen::MatrixXd& H, const Eigen::VectorXd& d);

struct QpSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd multipliers;  // one per row of H, zero on inactive rows
};

// Dual active-set (Goldfarb-Idnani) solver for
//   minimize 0.5 x'Qx + g'x  subject to  H x <= d
// with Q positive definite. Throws Error(Infeasible) when the rows are
// inconsistent.
QpSolution solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& g,
                    const Eigen::MatrixXd& H, const Eigen::VectorXd& d);

// Euclidean projection of v onto {x : H x <= d}; boxes are clipped directly.
QpSolution project(const Eigen::MatrixXd& H, const Eigen::VectorXd& d, const Eigen::VectorXd& v);

// True when every coordinate is bounded above and below on {H x <= d}
// (checked with one LP per direction). Assumes the set is nonempty.
bool is_bounded(const Eigen::MatrixXd& H, const Eigen::VectorXd& d);

// max ||x||_2 over a bounded polytope by enumerating basic solutions of
// n-row subsystems. Throws Error(VertexEnumerationTooLarge) past the limits.
double max_norm(const Eigen::MatrixXd& H, const Eigen::VectorXd& d,
                int max_dim = 4, int max_rows = 16);

} // namespace clq::polytope
