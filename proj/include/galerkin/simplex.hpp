#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace galerkin {

struct LpInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LpResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

// min c'x  s.t.  A x = b, x >= 0.  Dense two-phase simplex with Bland's rule.
LpResult solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c, double tol = 1e-10,
                  int max_iter = 100000);

}  // namespace galerkin
