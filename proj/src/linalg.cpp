#include "invgen/linalg.hpp"

#include <limits>

namespace invgen::linalg {

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > rel_tol * s[0]) ++rank;
    return rank;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double rel_tol) {
    const Eigen::Index cols = m.cols();
    if (m.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const int rank = numerical_rank(m, rel_tol);
    return svd.matrixV().rightCols(cols - rank);
}

Eigen::MatrixXd range_basis(const Eigen::MatrixXd& m, double rel_tol) {
    if (m.size() == 0) return Eigen::MatrixXd(m.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const int rank = numerical_rank(m, rel_tol);
    return svd.matrixU().leftCols(rank);
}

LeastSquares solve_least_squares(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    LeastSquares out;
    if (a.cols() == 0) {
        out.solution = Eigen::MatrixXd(0, b.cols());
        out.residual = b.colwise().norm().transpose();
        return out;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    out.solution = cod.solve(b);
    out.residual = (a * out.solution - b).colwise().norm().transpose();
    return out;
}

double condition_number(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    const double smallest = s[s.size() - 1];
    if (smallest == 0.0) return std::numeric_limits<double>::infinity();
    return s[0] / smallest;
}

}  // namespace invgen::linalg
