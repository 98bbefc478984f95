#pragma once

#include <memory>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "invgen/distribution.hpp"
#include "invgen/report.hpp"

namespace invgen {

struct FoliatedNumerics {
    double tol = kDefaultTol;
    /// Absolute RK4 step; default 1e-3 * width of the integrated coordinate.
    std::optional<double> ode_step;
    /// Absolute Simpson panel width; default equals the ODE step.
    std::optional<double> quad_step;
};

/// A spanning family of D over a foliated chart whose leaves are the first k
/// coordinate lines, plus an optional extra section to be corrected.
///
/// Every generator (and the extra section) has form components vanishing on
/// dx^1..dx^k; this is checked on a probe grid at construction.
class FoliatedProblem {
public:
    FoliatedProblem(GeneralizedDistribution d, std::optional<PontryaginSection> extra = std::nullopt,
                    FoliatedNumerics numerics = {});

    const ChartPtr& chart() const { return d_.chart(); }
    const GeneralizedDistribution& distribution() const { return d_; }
    const std::vector<PontryaginSection>& generators() const { return d_.generators(); }
    const std::optional<PontryaginSection>& extra() const { return extra_; }
    const FoliatedNumerics& numerics() const { return numerics_; }

    std::size_t dim() const { return chart()->dim(); }
    std::size_t leaf_count() const { return chart()->leaf_count(); }
    std::size_t rank() const { return d_.size(); }
    double tol() const { return numerics_.tol; }
    double ode_step(std::size_t j) const;
    double quad_step(std::size_t j) const;

private:
    GeneralizedDistribution d_;
    std::optional<PontryaginSection> extra_;
    FoliatedNumerics numerics_;
};

struct SplitSection {
    VectorField leaf_part;
    PontryaginSection tilde;
};

/// Splits s into its leaf-tangent vector part and the components j >= k.
/// Throws InvalidInput if some a_j, j < k, is nonzero at a probe point.
SplitSection split_tilde(const PontryaginSection& s, std::size_t k);

/// Throws InvalidInput naming `what` unless the form part of s vanishes on
/// dx^1..dx^k at the probe grid.
void require_leaf_annihilating(const PontryaginSection& s, std::size_t k, const std::string& what);

/// Evaluated decomposition
///   d_l g_i = sum_j A[l](j, i) (d_j, 0) + sum_s B[l](s, i) g_s,   l, j < k.
struct Coefficients {
    std::vector<Eigen::MatrixXd> A;  // k x r each
    std::vector<Eigen::MatrixXd> B;  // r x r each
    double residual = 0.0;           // worst relative misfit over l, i
};

struct BetaSigma {
    std::vector<Eigen::VectorXd> beta;   // r entries each
    std::vector<Eigen::VectorXd> sigma;  // k entries each
    double residual = 0.0;
};

/// Numeric evaluators of the frame construction. Thread-safe; fundamental
/// matrices are memoized per (coordinate, point, step count).
class FrameSolver {
public:
    explicit FrameSolver(FoliatedProblem problem);

    const FoliatedProblem& problem() const { return problem_; }

    /// Generator values, 2n x r.
    Eigen::MatrixXd generators_at(const Point& m) const;

    Coefficients solve_coefficients(const Point& m) const;
    /// B_l(m) only.
    Eigen::MatrixXd coefficient_matrix(std::size_t l, const Point& m) const;

    /// W_j(m): solution of dY/dx^j = B_j^T Y, Y = I at x^j = 0, along the x^j line.
    Eigen::MatrixXd fundamental_matrix(std::size_t j, const Point& m) const;
    Eigen::MatrixXd build_H(const Point& m) const;
    /// (H^T)^{-1}.
    Eigen::MatrixXd build_B(const Point& m) const;
    /// Generator values times B(m), 2n x r.
    Eigen::MatrixXd frame(const Point& m) const;

    /// Requires an extra section.
    BetaSigma beta_fields(const Point& m) const;
    /// Sum of the nested integrals of H^T beta_l.
    Eigen::VectorXd compute_R(const Point& m) const;
    /// -B(m) R(m).
    Eigen::VectorXd compute_Pi(const Point& m) const;
    /// Generators times Pi: the correction (Z, gamma), stacked.
    Eigen::VectorXd correction(const Point& m) const;
    /// Extra section plus correction.
    Eigen::VectorXd combined(const Point& m) const;

    std::size_t cache_size() const;

    /// Row indices of the tilde block (vector components j >= k, then form components j >= k).
    const std::vector<Eigen::Index>& tilde_rows() const { return tilde_rows_; }

private:
    using Columns = std::vector<std::vector<Expr>>;

    struct CacheKey {
        std::size_t j;
        std::size_t steps;
        std::vector<std::uint64_t> bits;
        bool operator==(const CacheKey&) const = default;
    };
    struct CacheHash {
        std::size_t operator()(const CacheKey& key) const;
    };

    Eigen::MatrixXd eval_columns(const Columns& cols, const Point& m) const;
    Eigen::MatrixXd tilde_of(const Eigen::MatrixXd& full) const;
    Eigen::MatrixXd coefficient_matrix_unchecked(std::size_t l, const Point& m, double* residual) const;
    Eigen::MatrixXd integrate_line(std::size_t j, const Point& m) const;
    void check_fundamental(const Eigen::MatrixXd& w, const Point& m, std::size_t j) const;

    FoliatedProblem problem_;
    std::vector<Eigen::Index> tilde_rows_;
    Columns g_;
    std::vector<Columns> dg_;  // per leaf coordinate
    std::vector<Expr> e_;
    std::vector<std::vector<Expr>> de_;

    mutable std::shared_mutex cache_mutex_;
    mutable std::unordered_map<CacheKey, Eigen::MatrixXd, CacheHash> cache_;
};

struct InvariantFrameResult {
    std::shared_ptr<const FrameSolver> solver;
    Report report;

    Eigen::MatrixXd frame(const Point& m) const { return solver->frame(m); }
    Eigen::MatrixXd B(const Point& m) const { return solver->build_B(m); }
    Eigen::MatrixXd H(const Point& m) const { return solver->build_H(m); }
    Eigen::VectorXd Pi(const Point& m) const { return solver->compute_Pi(m); }
    Eigen::VectorXd correction(const Point& m) const { return solver->correction(m); }
    Eigen::VectorXd combined(const Point& m) const { return solver->combined(m); }
};

/// Relative finite-difference step used by the verification checks.
inline constexpr double kVerifyRelStep = 1e-3;

/// Builds the frame and correction and verifies span equality, bracket
/// invariance of the frame and of the corrected extra section, the Step-2
/// leaf independence, ODE residuals and the R identity at every sample.
/// Stage failures abort with the stage label and point.
InvariantFrameResult run(const FoliatedProblem& problem, const std::vector<Point>& samples,
                         Execution exec = Execution::Parallel);

/// Skew bracket of (d_l, 0) with a stacked section from its Jacobian (2n x n):
/// (d_l Z, d_l g - 1/2 grad g_l). Restricted to vector components j >= k and
/// all form components, which is the part that must vanish for membership in Theta.
Eigen::VectorXd theta_bracket_tail(const Eigen::MatrixXd& jacobian, std::size_t l, std::size_t k);

}  // namespace invgen
