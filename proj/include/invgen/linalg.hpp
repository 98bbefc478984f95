#pragma once

#include <Eigen/Dense>

namespace invgen::linalg {

/// Number of singular values above rel_tol * (largest singular value).
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol);

/// Orthonormal basis (columns) of the kernel of m.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double rel_tol);

/// Orthonormal basis (columns) of the column space of m.
Eigen::MatrixXd range_basis(const Eigen::MatrixXd& m, double rel_tol);

struct LeastSquares {
    Eigen::MatrixXd solution;
    /// Per-column Euclidean residual ||a x - b||.
    Eigen::VectorXd residual;
};

/// Minimum-norm least-squares solution of a x = b (column by column).
LeastSquares solve_least_squares(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// 2-norm condition number; +inf for singular matrices.
double condition_number(const Eigen::MatrixXd& m);

}  // namespace invgen::linalg
