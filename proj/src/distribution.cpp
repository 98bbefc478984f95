#include "invgen/distribution.hpp"

#include <sstream>

#include "invgen/errors.hpp"
#include "invgen/linalg.hpp"

namespace invgen {

void require_in_box(const Chart& chart, std::span<const double> point) {
    if (chart.contains(point)) return;
    std::ostringstream os;
    os << "point (";
    for (std::size_t i = 0; i < point.size(); ++i) os << (i ? ", " : "") << point[i];
    os << ") lies outside the chart box";
    throw EvalError(os.str());
}

GeneralizedDistribution::GeneralizedDistribution(ChartPtr chart, std::vector<PontryaginSection> generators)
    : chart_(std::move(chart)), generators_(std::move(generators)) {
    if (generators_.empty()) throw InvalidInput("a generalized distribution needs at least one generator");
    for (const auto& g : generators_)
        if (!same_chart(g.chart(), chart_)) throw ChartMismatch();
}

Eigen::MatrixXd GeneralizedDistribution::eval(std::span<const double> m) const {
    require_in_box(*chart_, m);
    const auto n2 = static_cast<Eigen::Index>(2 * chart_->dim());
    Eigen::MatrixXd out(n2, static_cast<Eigen::Index>(generators_.size()));
    for (std::size_t i = 0; i < generators_.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = generators_[i].eval(m);
    return out;
}

GeneralizedDistribution operator+(const GeneralizedDistribution& a, const GeneralizedDistribution& b) {
    if (!same_chart(a.chart(), b.chart())) throw ChartMismatch();
    auto gens = a.generators();
    gens.insert(gens.end(), b.generators().begin(), b.generators().end());
    return {a.chart(), std::move(gens)};
}

TangentDistribution::TangentDistribution(ChartPtr chart, std::vector<VectorField> generators)
    : chart_(std::move(chart)), generators_(std::move(generators)) {
    for (const auto& g : generators_)
        if (!same_chart(g.chart(), chart_)) throw ChartMismatch();
}

Eigen::MatrixXd TangentDistribution::eval(std::span<const double> m) const {
    require_in_box(*chart_, m);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(chart_->dim()), static_cast<Eigen::Index>(generators_.size()));
    for (std::size_t i = 0; i < generators_.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = generators_[i].eval(m);
    return out;
}

SampledSubspace sample_subspace(const GeneralizedDistribution& delta, const Point& m, double rank_tol) {
    SampledSubspace s;
    s.point = m;
    s.basis = delta.eval(m).transpose();
    s.rank = linalg::numerical_rank(s.basis, rank_tol);
    return s;
}

int rank_at(const GeneralizedDistribution& delta, std::span<const double> m, double rank_tol) {
    return linalg::numerical_rank(delta.eval(m), rank_tol);
}

double membership_residual(const Eigen::MatrixXd& span_columns, const Eigen::VectorXd& v) {
    const auto ls = linalg::solve_least_squares(span_columns, v);
    return ls.residual[0] / (1.0 + v.norm());
}

bool contains(const GeneralizedDistribution& delta, std::span<const double> m, const Eigen::VectorXd& v, double tol) {
    return membership_residual(delta.eval(m), v) <= tol;
}

std::vector<Eigen::VectorXd> pointwise_orthogonal_basis(const GeneralizedDistribution& delta,
                                                        std::span<const double> m, double rank_tol) {
    const Eigen::MatrixXd g = delta.eval(m);
    // <w, g> = w^T J g, so the conditions are rows of g^T J.
    const Eigen::MatrixXd conditions = g.transpose() * pairing_matrix(delta.chart()->dim());
    const Eigen::MatrixXd kernel = linalg::null_space(conditions, rank_tol);
    std::vector<Eigen::VectorXd> out;
    for (Eigen::Index c = 0; c < kernel.cols(); ++c) out.emplace_back(kernel.col(c));
    return out;
}

std::vector<Eigen::VectorXd> annihilator_basis(const TangentDistribution& t, std::span<const double> m,
                                               double rank_tol) {
    const Eigen::MatrixXd x = t.eval(m);
    const Eigen::MatrixXd kernel = linalg::null_space(x.transpose(), rank_tol);
    std::vector<Eigen::VectorXd> out;
    for (Eigen::Index c = 0; c < kernel.cols(); ++c) out.emplace_back(kernel.col(c));
    return out;
}

GeneralizedDistribution leaf_theta(const ChartPtr& chart) {
    std::vector<PontryaginSection> gens;
    for (std::size_t l = 0; l < chart->leaf_count(); ++l)
        gens.emplace_back(VectorField::coordinate(chart, l), OneForm(chart));
    if (gens.empty()) gens.emplace_back(chart);
    return {chart, std::move(gens)};
}

BracketHypothesisReport check_bracket_hypothesis(const GeneralizedDistribution& d, const GeneralizedDistribution& theta,
                                                 const std::optional<PontryaginSection>& extra,
                                                 const std::vector<Point>& samples, double tol, Execution exec) {
    struct Pair {
        std::string hypothesis;
        std::size_t generator;
        std::size_t theta;
        PontryaginSection bracket;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t l = 0; l < theta.size(); ++l)
            pairs.push_back({"ass1", i, l, skew_bracket(d.generators()[i], theta.generators()[l])});
    if (extra)
        for (std::size_t l = 0; l < theta.size(); ++l)
            pairs.push_back({"ass2", 0, l, skew_bracket(*extra, theta.generators()[l])});

    const GeneralizedDistribution sum = theta + d;
    auto residuals = map_indices<std::vector<double>>(
        samples.size(),
        [&](std::size_t s) {
            const Eigen::MatrixXd span = sum.eval(samples[s]);
            std::vector<double> r;
            r.reserve(pairs.size());
            for (const auto& p : pairs) r.push_back(membership_residual(span, p.bracket.eval(samples[s])));
            return r;
        },
        exec);

    ResidualScan ass1("hypothesis.leaf_bracket", "ass1", tol);
    ResidualScan ass2("hypothesis.extra_bracket", "ass2", tol);
    BracketHypothesisReport report;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto& p = pairs[k];
            const double r = residuals[s][k];
            std::string label = (p.hypothesis == "ass1" ? "D[" + std::to_string(p.generator) + "]" : std::string("extra")) +
                                " x Theta[" + std::to_string(p.theta) + "]";
            (p.hypothesis == "ass1" ? ass1 : ass2).observe(r, samples[s], label);
            if (!(r <= tol)) report.failures.push_back({p.hypothesis, p.generator, p.theta, samples[s], r});
        }
    }
    report.leaf_bracket = std::move(ass1).finish();
    if (extra) report.extra_bracket = std::move(ass2).finish();
    return report;
}

}  // namespace invgen
