#include "galerkin/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace galerkin {

namespace {

// tableau with rows 0..m-1 constraints, row m objective (reduced costs), last column rhs
struct Tableau {
    Eigen::MatrixXd T;
    std::vector<int> basis;
    int m, cols;

    void pivot(int r, int c) {
        T.row(r) /= T(r, c);
        for (int i = 0; i <= m; ++i)
            if (i != r && T(i, c) != 0.0) T.row(i) -= T(i, c) * T.row(r);
        basis[static_cast<std::size_t>(r)] = c;
    }

    // returns false when unbounded
    bool run(int allowed_cols, double tol, int max_iter, int& iters) {
        while (true) {
            if (++iters > max_iter) throw std::runtime_error("simplex iteration limit reached");
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j)
                if (T(m, j) < -tol) {
                    enter = j;
                    break;
                }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (T(i, enter) > tol) {
                    const double ratio = T(i, cols) / T(i, enter);
                    if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && leave >= 0 &&
                                                 basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace

LpResult solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c, double tol,
                  int max_iter) {
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    if (b.size() != m || c.size() != n) throw std::invalid_argument("lp dimensions do not agree");
    Tableau tb;
    tb.m = m;
    tb.cols = n + m;
    tb.T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
    tb.basis.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double s = b[i] < 0.0 ? -1.0 : 1.0;
        tb.T.block(i, 0, 1, n) = s * A.row(i);
        tb.T(i, n + i) = 1.0;
        tb.T(i, n + m) = s * b[i];
        tb.basis[static_cast<std::size_t>(i)] = n + i;
    }
    // phase one: minimise the artificial sum
    for (int i = 0; i < m; ++i) tb.T.row(m) -= tb.T.row(i);
    for (int i = 0; i < m; ++i) tb.T(m, n + i) = 0.0;
    LpResult res;
    tb.run(n + m, tol, max_iter, res.iterations);
    const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
    if (-tb.T(m, n + m) > 1e-9 * scale) throw LpInfeasible("linear program is infeasible");
    // drive remaining artificials out of the basis
    for (int i = 0; i < m; ++i) {
        if (tb.basis[static_cast<std::size_t>(i)] < n) continue;
        for (int j = 0; j < n; ++j)
            if (std::abs(tb.T(i, j)) > 1e-9) {
                tb.pivot(i, j);
                break;
            }
    }
    // phase two
    tb.T.row(m).setZero();
    tb.T.block(m, 0, 1, n) = c.transpose();
    for (int i = 0; i < m; ++i) {
        const int bi = tb.basis[static_cast<std::size_t>(i)];
        if (bi < n && c[bi] != 0.0) tb.T.row(m) -= c[bi] * tb.T.row(i);
    }
    for (int i = 0; i < m; ++i) tb.T.col(n + i).setZero();
    if (!tb.run(n, tol, max_iter, res.iterations)) throw std::runtime_error("linear program is unbounded");
    res.x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
        const int bi = tb.basis[static_cast<std::size_t>(i)];
        if (bi < n) res.x[bi] = std::max(0.0, tb.T(i, n + m));
    }
    res.objective = c.dot(res.x);
    return res;
}

}  // namespace galerkin
