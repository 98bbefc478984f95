#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invgen/calculus.hpp"
#include "invgen/parallel.hpp"
#include "invgen/report.hpp"

namespace invgen {

inline constexpr double kRankTol = 1e-9;
inline constexpr double kDefaultTol = 1e-7;

/// Throws EvalError unless the point lies in the chart box.
void require_in_box(const Chart& chart, std::span<const double> point);

/// A finite spanning family of Pontryagin sections.
class GeneralizedDistribution {
public:
    GeneralizedDistribution(ChartPtr chart, std::vector<PontryaginSection> generators);

    const ChartPtr& chart() const { return chart_; }
    const std::vector<PontryaginSection>& generators() const { return generators_; }
    std::size_t size() const { return generators_.size(); }

    /// 2n x g matrix whose columns are the generator values at m.
    Eigen::MatrixXd eval(std::span<const double> m) const;

private:
    ChartPtr chart_;
    std::vector<PontryaginSection> generators_;
};

/// Generators of both, Theta's first.
GeneralizedDistribution operator+(const GeneralizedDistribution& a, const GeneralizedDistribution& b);

class TangentDistribution {
public:
    TangentDistribution(ChartPtr chart, std::vector<VectorField> generators);

    const ChartPtr& chart() const { return chart_; }
    const std::vector<VectorField>& generators() const { return generators_; }

    /// n x g matrix of generator values (g may be 0).
    Eigen::MatrixXd eval(std::span<const double> m) const;

private:
    ChartPtr chart_;
    std::vector<VectorField> generators_;
};

/// Delta(m) as evaluated data.
struct SampledSubspace {
    Point point;
    /// One row per generator, 2n columns.
    Eigen::MatrixXd basis;
    int rank = 0;
};

SampledSubspace sample_subspace(const GeneralizedDistribution& delta, const Point& m, double rank_tol = kRankTol);

int rank_at(const GeneralizedDistribution& delta, std::span<const double> m, double rank_tol = kRankTol);

/// Least-squares residual of v against the column span, divided by (1 + |v|).
double membership_residual(const Eigen::MatrixXd& span_columns, const Eigen::VectorXd& v);

bool contains(const GeneralizedDistribution& delta, std::span<const double> m, const Eigen::VectorXd& v,
              double tol = kDefaultTol);

/// Basis of {w : <w, g(m)> = 0 for every generator g}.
std::vector<Eigen::VectorXd> pointwise_orthogonal_basis(const GeneralizedDistribution& delta,
                                                        std::span<const double> m, double rank_tol = kRankTol);

/// Basis of {eta : eta(X(m)) = 0 for every generator X}. Assumes locally
/// constant rank near m.
std::vector<Eigen::VectorXd> annihilator_basis(const TangentDistribution& t, std::span<const double> m,
                                               double rank_tol = kRankTol);

struct BracketFailure {
    std::string hypothesis;  // "ass1" or "ass2"
    std::size_t generator = 0;
    std::size_t theta = 0;
    Point point;
    double residual = 0.0;
};

struct BracketHypothesisReport {
    CheckRecord leaf_bracket;                  // [Gamma(D), Gamma(Theta)] in Gamma(Theta + D)
    std::optional<CheckRecord> extra_bracket;  // [(X, a), Gamma(Theta)] in Gamma(Theta + D)
    std::vector<BracketFailure> failures;

    bool passed() const { return leaf_bracket.passed && (!extra_bracket || extra_bracket->passed); }
};

/// Checks the bracket hypotheses on the generators symbolically bracketed and
/// tested for membership in Theta + D at every sample.
BracketHypothesisReport check_bracket_hypothesis(const GeneralizedDistribution& d, const GeneralizedDistribution& theta,
                                                 const std::optional<PontryaginSection>& extra,
                                                 const std::vector<Point>& samples, double tol = kDefaultTol,
                                                 Execution exec = Execution::Parallel);

/// Theta = span{(d/dx^l, 0) : l < k} for a foliated chart.
GeneralizedDistribution leaf_theta(const ChartPtr& chart);

}  // namespace invgen
