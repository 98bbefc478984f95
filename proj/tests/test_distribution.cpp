#include <doctest.h>

#include "corpus.hpp"
#include "invgen/distribution.hpp"
#include "invgen/errors.hpp"
#include "invgen/linalg.hpp"

using namespace invgen;
using invgen::testing::cube_chart;
using invgen::testing::random_section;

namespace {

Expr x(std::size_t i) { return Expr::variable(i); }

PontryaginSection vec(const ChartPtr& c, std::size_t i) { return {VectorField::coordinate(c, i), OneForm(c)}; }
PontryaginSection cov(const ChartPtr& c, std::size_t i) { return {VectorField(c), OneForm::coordinate(c, i)}; }

Eigen::MatrixXd columns(const std::vector<Eigen::VectorXd>& vs, Eigen::Index rows) {
    Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(vs.size()));
    for (std::size_t i = 0; i < vs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = vs[i];
    return m;
}

}  // namespace

TEST_CASE("rank examples") {
    const auto c = cube_chart(2);
    const GeneralizedDistribution both(c, {vec(c, 0), vec(c, 1)});
    for (const auto& p : default_samples(*c, 8)) CHECK(rank_at(both, p) == 2);

    const GeneralizedDistribution singular(c, {x(0) * vec(c, 0)});
    CHECK(rank_at(singular, Point{0.0, 0.3}) == 0);
    CHECK(rank_at(singular, Point{1.0, 0.3}) == 1);
    // nearby points never have lower rank
    CHECK(rank_at(singular, Point{1e-3, 0.3}) >= rank_at(singular, Point{0.0, 0.3}));

    // graph of the symplectic bivector: (-d2, dx1), (d1, dx2)
    const GeneralizedDistribution graph(c, {PontryaginSection(VectorField(c, {0.0, -1.0}), OneForm::coordinate(c, 0)),
                                            PontryaginSection(VectorField::coordinate(c, 0), OneForm::coordinate(c, 1))});
    CHECK(rank_at(graph, Point{0.2, 0.2}) == 2);

    const auto s = sample_subspace(graph, Point{0.2, 0.2});
    CHECK(s.rank == 2);
    CHECK(s.basis.rows() == 2);
    CHECK(s.basis.cols() == 4);
}

TEST_CASE("membership examples") {
    const auto c = cube_chart(3);
    const Point m{0.1, 0.2, 0.3};
    const GeneralizedDistribution d(c, {vec(c, 1), cov(c, 2)});
    CHECK(contains(d, m, d.eval(m).col(1)));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(6);
    v[1] = 1.0;
    v[5] = 1.0;
    CHECK(contains(d, m, v));
    Eigen::VectorXd off = Eigen::VectorXd::Zero(6);
    off[0] = 1.0;
    CHECK_FALSE(contains(d, m, off));
    CHECK(membership_residual(d.eval(m), off) == doctest::Approx(0.5));
}

TEST_CASE("membership is invariant under invertible recombination") {
    UniformSource rng(4);
    const auto c = cube_chart(3);
    for (int t = 0; t < 10; ++t) {
        const auto a = random_section(rng, c, 2), b = random_section(rng, c, 2);
        const GeneralizedDistribution d(c, {a, b});
        const GeneralizedDistribution mixed(c, {Expr(2.0) * a + b, a - Expr(3.0) * b});
        for (const auto& p : random_samples(*c, 5, static_cast<std::uint64_t>(t))) {
            const Eigen::VectorXd in = 0.3 * a.eval(p) - 1.7 * b.eval(p);
            CHECK(contains(d, p, in) == contains(mixed, p, in));
            CHECK(contains(mixed, p, in));
            Eigen::VectorXd out = Eigen::VectorXd::Zero(6);
            const auto q = linalg::null_space(d.eval(p).transpose(), kRankTol);
            if (q.cols() > 0) {
                out = q.col(0);
                CHECK_FALSE(contains(d, p, out));
                CHECK_FALSE(contains(mixed, p, out));
            }
        }
    }
}

TEST_CASE("pointwise orthogonal examples") {
    const auto line = cube_chart(1);
    const GeneralizedDistribution d(line, {vec(line, 0)});
    const auto o = pointwise_orthogonal_basis(d, Point{0.5});
    REQUIRE(o.size() == 1);
    CHECK(std::abs(o[0][0]) == doctest::Approx(1.0));
    CHECK(o[0][1] == doctest::Approx(0.0));

    const auto c = cube_chart(2);
    const GeneralizedDistribution full(c, {vec(c, 0), vec(c, 1), cov(c, 0), cov(c, 1)});
    CHECK(pointwise_orthogonal_basis(full, Point{0.0, 0.0}).empty());

    // a Lagrangian subspace is its own pointwise orthogonal
    const GeneralizedDistribution graph(
        c, {PontryaginSection(VectorField(c, {0.0, -x(0)}), OneForm::coordinate(c, 0)),
            PontryaginSection(VectorField(c, {x(0), 0.0}), OneForm::coordinate(c, 1))});
    const Point m{0.7, -0.2};
    const auto lag = pointwise_orthogonal_basis(graph, m);
    REQUIRE(lag.size() == 2);
    for (const auto& w : lag) CHECK(contains(graph, m, w));
}

TEST_CASE("double pointwise orthogonal recovers the span") {
    UniformSource rng(12);
    for (std::size_t n : {2u, 3u}) {
        const auto c = cube_chart(n);
        for (int t = 0; t < 8; ++t) {
            std::vector<PontryaginSection> gens;
            for (std::size_t g = 0; g < 1 + static_cast<std::size_t>(t) % (2 * n - 1); ++g)
                gens.push_back(random_section(rng, c, 2));
            const GeneralizedDistribution d(c, gens);
            for (const auto& p : random_samples(*c, 3, static_cast<std::uint64_t>(t))) {
                const auto o = pointwise_orthogonal_basis(d, p);
                const auto rows = static_cast<Eigen::Index>(2 * n);
                CHECK(static_cast<int>(o.size()) == static_cast<int>(2 * n) - rank_at(d, p));
                const auto J = pairing_matrix(n);
                for (const auto& w : o) CHECK((d.eval(p).transpose() * J * w).norm() <= 1e-9);
                // orthogonal of the orthogonal, as a subspace, equals D(m)
                Eigen::MatrixXd back;
                if (o.empty()) {
                    back = Eigen::MatrixXd::Identity(rows, rows);
                } else {
                    back = linalg::null_space(columns(o, rows).transpose() * J, kRankTol);
                }
                for (Eigen::Index i = 0; i < back.cols(); ++i) CHECK(contains(d, p, back.col(i)));
                for (Eigen::Index i = 0; i < d.eval(p).cols(); ++i)
                    CHECK(membership_residual(back, d.eval(p).col(i)) <= kDefaultTol);
            }
        }
    }
}

TEST_CASE("annihilator examples") {
    const auto c3 = cube_chart(3);
    const TangentDistribution t(c3, {VectorField::coordinate(c3, 0)});
    const auto a = annihilator_basis(t, Point{0.1, 0.2, 0.3});
    REQUIRE(a.size() == 2);
    for (const auto& eta : a) CHECK(std::abs(eta[0]) <= 1e-15);

    const auto c2 = make_chart({"x1", "x2"}, 0, {{0.5, 1.5}, {-1, 1}});
    const TangentDistribution rot(c2, {VectorField(c2, {-x(1), x(0)})});
    const auto r = annihilator_basis(rot, Point{1.0, 0.0});
    REQUIRE(r.size() == 1);
    CHECK(std::abs(r[0][0]) == doctest::Approx(1.0));
    CHECK(std::abs(r[0][1]) <= 1e-15);

    const TangentDistribution full(c2, {VectorField::coordinate(c2, 0), VectorField::coordinate(c2, 1)});
    CHECK(annihilator_basis(full, Point{1.0, 0.0}).empty());
    CHECK(annihilator_basis(TangentDistribution(c2, {}), Point{1.0, 0.0}).size() == 2);
}

TEST_CASE("bracket hypothesis examples") {
    const auto c = cube_chart(3, 1);
    const auto theta = leaf_theta(c);
    REQUIRE(theta.size() == 1);
    const auto samples = default_samples(*c, 8);

    const GeneralizedDistribution e1(c, {exp(x(0)) * PontryaginSection(VectorField::coordinate(c, 1),
                                                                        OneForm::coordinate(c, 1))});
    const auto r1 = check_bracket_hypothesis(e1, theta, std::nullopt, samples);
    CHECK(r1.passed());
    CHECK(r1.leaf_bracket.worst_residual <= 1e-14);
    CHECK_FALSE(r1.extra_bracket.has_value());

    const GeneralizedDistribution e2(c, {vec(c, 1), cov(c, 2)});
    const PontryaginSection extra(VectorField(c, {0.0, x(0), 0.0}), OneForm(c, {0.0, 0.0, x(0)}));
    const auto r2 = check_bracket_hypothesis(e2, theta, extra, samples);
    CHECK(r2.passed());
    REQUIRE(r2.extra_bracket.has_value());
    CHECK(r2.extra_bracket->anchor == "ass2");

    const GeneralizedDistribution only_form(c, {cov(c, 1)});
    const PontryaginSection bad(VectorField(c, {0.0, 0.0, x(0)}), OneForm(c));
    const auto r3 = check_bracket_hypothesis(only_form, theta, bad, samples);
    CHECK_FALSE(r3.passed());
    CHECK(r3.leaf_bracket.passed);
    REQUIRE(r3.extra_bracket.has_value());
    CHECK_FALSE(r3.extra_bracket->passed);
    // (d3, 0) has unit norm and is orthogonal to Theta + D
    CHECK(r3.extra_bracket->worst_residual == doctest::Approx(0.5));
    REQUIRE(r3.extra_bracket->failing_point.has_value());
    CHECK(*r3.extra_bracket->failing_point == samples.front());
    REQUIRE_FALSE(r3.failures.empty());
    CHECK(r3.failures.front().hypothesis == "ass2");
}

TEST_CASE("bracket hypothesis: serial and parallel agree") {
    UniformSource rng(77);
    const auto c = cube_chart(3, 1);
    const GeneralizedDistribution d(c, {random_section(rng, c, 3), random_section(rng, c, 3)});
    const auto extra = random_section(rng, c, 2);
    const auto samples = default_samples(*c, 32);
    const auto a = check_bracket_hypothesis(d, leaf_theta(c), extra, samples, kDefaultTol, Execution::Serial);
    const auto b = check_bracket_hypothesis(d, leaf_theta(c), extra, samples, kDefaultTol, Execution::Parallel);
    CHECK(a.leaf_bracket.worst_residual == b.leaf_bracket.worst_residual);
    CHECK(a.leaf_bracket.failing_point == b.leaf_bracket.failing_point);
    CHECK(a.extra_bracket->worst_residual == b.extra_bracket->worst_residual);
    CHECK(a.failures.size() == b.failures.size());
}

TEST_CASE("evaluation outside the box is an error") {
    const auto c = cube_chart(2);
    const GeneralizedDistribution d(c, {vec(c, 0)});
    CHECK_THROWS_AS(rank_at(d, Point{2.0, 0.0}), EvalError);
    CHECK_THROWS_AS(GeneralizedDistribution(c, {}), InvalidInput);
}
