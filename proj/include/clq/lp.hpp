#pragma once

#include <Eigen/Dense>

namespace clq::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
    Status status = Status::Infeasible;
    Eigen::VectorXd x;  // valid when status == Optimal
    double objective = 0.0;
};

// Dense two-phase simplex for
//   minimize c'x  subject to  H x <= d,  x free.
// Meant for the small systems that show up here (a handful of variables and
// rows); Bland's rule keeps it from cycling.
Result minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& H, const Eigen::VectorXd& d);

// Phase one only: any x with H x <= d.
Result find_feasible(const Eigen::MatrixXd& H, const Eigen::VectorXd& d);

} // namespace clq::lp
