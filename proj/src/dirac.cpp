#include "invgen/dirac.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "invgen/errors.hpp"
#include "invgen/linalg.hpp"
#include "invgen/sampling.hpp"

namespace invgen {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

std::string point_text(std::span<const double> m) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < m.size(); ++i) os << (i ? ", " : "") << m[i];
    os << ")";
    return os.str();
}

// Symbolic Jacobian entries d_j f^i of a vector field.
std::vector<std::vector<Expr>> field_jacobian(const VectorField& xi) {
    const std::size_t n = xi.dim();
    std::vector<std::vector<Expr>> out(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i][j] = diff(xi[i], j);
    return out;
}

Eigen::MatrixXd eval_matrix(const std::vector<std::vector<Expr>>& e, std::span<const double> m) {
    Eigen::MatrixXd out(idx(e.size()), idx(e.empty() ? 0 : e[0].size()));
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = 0; j < e[i].size(); ++j) out(idx(i), idx(j)) = e[i][j].eval(m);
    return out;
}

}  // namespace

DiracStructure::DiracStructure(ChartPtr chart, std::vector<PontryaginSection> generators)
    : sections_(chart, std::move(generators)) {
    if (sections_.size() != chart->dim())
        throw InvalidInput("a Dirac structure on a " + std::to_string(chart->dim()) + "-dimensional chart needs exactly " +
                           std::to_string(chart->dim()) + " generators, got " + std::to_string(sections_.size()));
}

Report certify_lagrangian(const DiracStructure& d, const std::vector<Point>& samples, double tol) {
    const std::size_t n = d.chart()->dim();
    ResidualScan rank("dirac.rank", "Lagrangian", tol);
    ResidualScan iso("dirac.isotropy", "Lagrangian", tol);
    for (const auto& m : samples) {
        const Eigen::MatrixXd g = d.eval(m);
        const int r = linalg::numerical_rank(g, kRankTol);
        rank.observe(r == static_cast<int>(n) ? 0.0 : 1.0, m, "rank " + std::to_string(r));
        double worst = 0.0;
        std::string detail;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                const double v = std::abs(pairing_value(g.col(idx(i)), g.col(idx(j)))) /
                                 (1.0 + g.col(idx(i)).norm() * g.col(idx(j)).norm());
                if (v > worst) {
                    worst = v;
                    detail = "pairing of generators " + std::to_string(i) + " and " + std::to_string(j);
                }
            }
        iso.observe(worst, m, detail);
    }
    Report out;
    out.add(std::move(rank).finish());
    out.add(std::move(iso).finish());
    return out;
}

DiracStructure make_dirac_structure(ChartPtr chart, std::vector<PontryaginSection> generators,
                                    const std::vector<Point>& samples, double tol) {
    DiracStructure d(std::move(chart), std::move(generators));
    const Report r = certify_lagrangian(d, samples, tol);
    for (const auto& c : r.checks)
        if (!c.passed)
            throw InvalidInput("not a Lagrangian subbundle: " + c.id + " fails at " + point_text(*c.failing_point) +
                               (c.detail.empty() ? "" : " (" + c.detail + ")"));
    return d;
}

PoissonBivector::PoissonBivector(ChartPtr chart, std::vector<std::vector<Expr>> components)
    : chart_(std::move(chart)), components_(std::move(components)) {
    const std::size_t n = chart_->dim();
    if (components_.size() != n) throw InvalidInput("Poisson bivector needs an n x n component matrix");
    for (const auto& row : components_)
        if (row.size() != n) throw InvalidInput("Poisson bivector needs an n x n component matrix");
}

Eigen::MatrixXd PoissonBivector::eval(std::span<const double> m) const {
    require_in_box(*chart_, m);
    return eval_matrix(components_, m);
}

CheckRecord PoissonBivector::antisymmetry(const std::vector<Point>& samples, double tol) const {
    ResidualScan scan("poisson.antisymmetry", "Poisson", tol);
    for (const auto& m : samples) {
        const Eigen::MatrixXd p = eval(m);
        scan.observe((p + p.transpose()).cwiseAbs().maxCoeff() / (1.0 + p.cwiseAbs().maxCoeff()), m);
    }
    return std::move(scan).finish();
}

VectorField sharp(const PoissonBivector& pi, const OneForm& alpha) {
    if (!same_chart(pi.chart(), alpha.chart())) throw ChartMismatch();
    const std::size_t n = pi.chart()->dim();
    std::vector<Expr> c(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i] = c[i] + pi(i, j) * alpha[j];
    return {pi.chart(), std::move(c)};
}

DiracStructure graph_of_poisson(const PoissonBivector& pi) {
    const auto& chart = pi.chart();
    const auto rec = pi.antisymmetry(default_samples(*chart, 4, 0));
    if (!rec.passed) throw InvalidInput("Poisson bivector is not antisymmetric at " + point_text(*rec.failing_point));
    std::vector<PontryaginSection> gens;
    for (std::size_t j = 0; j < chart->dim(); ++j) {
        const OneForm dxj = OneForm::coordinate(chart, j);
        gens.emplace_back(sharp(pi, dxj), dxj);
    }
    return {chart, std::move(gens)};
}

CheckRecord is_closed(const DiracStructure& d, const std::vector<Point>& samples, double tol, Execution exec) {
    const auto& g = d.generators();
    struct Pair {
        std::size_t a, b;
        PontryaginSection bracket;
    };
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < g.size(); ++b) pairs.push_back({a, b, courant_bracket(g[a], g[b])});

    const auto res = map_indices<std::pair<double, std::size_t>>(
        samples.size(),
        [&](std::size_t s) {
            const Eigen::MatrixXd span = d.eval(samples[s]);
            std::pair<double, std::size_t> worst{0.0, 0};
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const double r = membership_residual(span, pairs[p].bracket.eval(samples[s]));
                if (!(r <= worst.first)) worst = {r, p};
            }
            return worst;
        },
        exec);

    ResidualScan scan("dirac.closed", "closedness", tol);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& p = pairs[res[s].second];
        scan.observe(res[s].first, samples[s],
                     "Courant bracket of generators " + std::to_string(p.a) + " and " + std::to_string(p.b));
    }
    return std::move(scan).finish();
}

CharacteristicBases characteristic_distributions(const DiracStructure& d, std::span<const double> m, double rank_tol) {
    const auto n = idx(d.chart()->dim());
    const Eigen::MatrixXd g = d.eval(m);
    const Eigen::MatrixXd x = g.topRows(n);
    const Eigen::MatrixXd a = g.bottomRows(n);
    CharacteristicBases out;
    out.G1 = linalg::range_basis(x, rank_tol);
    out.P1 = linalg::range_basis(a, rank_tol);
    const Eigen::MatrixXd ka = linalg::null_space(a, rank_tol);
    const Eigen::MatrixXd kx = linalg::null_space(x, rank_tol);
    out.G0 = ka.cols() ? linalg::range_basis(x * ka, rank_tol) : Eigen::MatrixXd(n, 0);
    out.P0 = kx.cols() ? linalg::range_basis(a * kx, rank_tol) : Eigen::MatrixXd(n, 0);
    return out;
}

InfinitesimalAction::InfinitesimalAction(ChartPtr chart, std::vector<VectorField> generators,
                                         std::vector<std::vector<std::vector<double>>> structure_constants)
    : chart_(std::move(chart)), generators_(std::move(generators)), constants_(std::move(structure_constants)) {
    for (const auto& g : generators_)
        if (!same_chart(g.chart(), chart_)) throw ChartMismatch();
    if (!constants_.empty()) {
        const std::size_t d = generators_.size();
        bool ok = constants_.size() == d;
        for (const auto& row : constants_) {
            ok = ok && row.size() == d;
            for (const auto& c : row) ok = ok && c.size() == d;
        }
        if (!ok) throw InvalidInput("structure constants must be a d x d x d array for d action generators");
    }
}

CheckRecord InfinitesimalAction::structure_check(const std::vector<Point>& samples, double tol) const {
    ResidualScan scan("action.structure_constants", "anti-homomorphism", tol);
    if (constants_.empty()) return std::move(scan).finish();
    const std::size_t d = generators_.size();
    std::vector<VectorField> residuals;
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            VectorField v = lie_bracket(generators_[a], generators_[b]);
            for (std::size_t c = 0; c < d; ++c)
                if (constants_[a][b][c] != 0.0) v = v + Expr(constants_[a][b][c]) * generators_[c];
            residuals.push_back(std::move(v));
        }
    for (const auto& m : samples) {
        double worst = 0.0;
        for (const auto& v : residuals) worst = std::max(worst, v.eval(m).norm());
        scan.observe(worst, m);
    }
    return std::move(scan).finish();
}

VerticalData vertical_and_K(const InfinitesimalAction& action) {
    const auto& chart = action.chart();
    std::vector<PontryaginSection> k;
    for (const auto& xi : action.generators()) k.emplace_back(xi, OneForm(chart));
    if (k.empty()) k.emplace_back(chart);
    return {TangentDistribution(chart, action.generators()), GeneralizedDistribution(chart, std::move(k))};
}

bool in_K_perp(const InfinitesimalAction& action, std::span<const double> m, const Eigen::VectorXd& w, double tol) {
    const auto n = idx(action.chart()->dim());
    const Eigen::MatrixXd v = TangentDistribution(action.chart(), action.generators()).eval(m);
    if (v.cols() == 0) return true;
    const Eigen::VectorXd a = w.tail(n);
    return (v.transpose() * a).norm() <= tol * (1.0 + a.norm());
}

IntersectionBasis intersect_D_Kperp(const DiracStructure& d, const InfinitesimalAction& action,
                                    std::span<const double> m, double rank_tol) {
    const auto n = idx(d.chart()->dim());
    const Eigen::MatrixXd g = d.eval(m);
    const Eigen::MatrixXd v = TangentDistribution(action.chart(), action.generators()).eval(m);
    Eigen::MatrixXd coeffs;
    if (v.cols() == 0) {
        coeffs = Eigen::MatrixXd::Identity(g.cols(), g.cols());
    } else {
        // (g c) annihilates V  <=>  V^T A c = 0
        coeffs = linalg::null_space(v.transpose() * g.bottomRows(n), rank_tol);
    }
    IntersectionBasis out;
    out.basis = coeffs.cols() ? linalg::range_basis(g * coeffs, rank_tol) : Eigen::MatrixXd(2 * n, 0);
    out.rank = static_cast<int>(out.basis.cols());
    return out;
}

CheckRecord constant_rank_scan(const DiracStructure& d, const InfinitesimalAction& action,
                               const std::vector<Point>& samples, double rank_tol) {
    ResidualScan scan("intersection.constant_rank", "constant rank", 0.0);
    if (samples.empty()) return std::move(scan).finish();
    const int reference = intersect_D_Kperp(d, action, samples[0], rank_tol).rank;
    std::optional<std::size_t> jump;
    int other = reference;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const int r = intersect_D_Kperp(d, action, samples[s], rank_tol).rank;
        scan.observe(std::abs(r - reference), samples[s]);
        if (r != reference && !jump) {
            jump = s;
            other = r;
        }
    }
    CheckRecord rec = std::move(scan).finish();
    if (jump) {
        rec.witnesses = {samples[0], samples[*jump]};
        rec.detail = "rank " + std::to_string(reference) + " at the first witness, " + std::to_string(other) +
                     " at the second";
    } else {
        rec.detail = "rank " + std::to_string(reference);
    }
    return rec;
}

void require_foliated_action(const InfinitesimalAction& action, const std::vector<Point>& probes, double tol) {
    const auto& chart = *action.chart();
    const auto k = idx(chart.leaf_count());
    const auto n = idx(chart.dim());
    const TangentDistribution v(action.chart(), action.generators());
    for (const auto& m : probes) {
        const Eigen::MatrixXd vm = v.eval(m);
        const double tail = vm.rows() > k && vm.cols() ? vm.bottomRows(n - k).norm() : 0.0;
        const int lead = vm.cols() ? linalg::numerical_rank(vm.topRows(k), kRankTol) : 0;
        if (tail > tol * (1.0 + vm.norm()) || lead != k)
            throw InvalidInput("the action fields do not span the leaf coordinate fields at " + point_text(m) +
                               "; use a chart in which V is spanned by the first " + std::to_string(k) +
                               " coordinate fields");
    }
}

namespace {

// L_xi of the form parts and the tail of [xi, Z] for every frame column at
// every sample, as two records.
void append_invariance_checks(Report& report, const InfinitesimalAction& action, const FrameSolver& solver,
                              const std::vector<Point>& samples, double tol, bool vector_part, Execution exec,
                              const std::string& prefix) {
    const auto& chart = *action.chart();
    const std::size_t n = chart.dim();
    const std::size_t k = chart.leaf_count();
    const auto nn = idx(n);
    std::vector<std::vector<std::vector<Expr>>> dxi;
    for (const auto& xi : action.generators()) dxi.push_back(field_jacobian(xi));

    struct Result {
        double form = 0.0;
        double vec = 0.0;
    };
    const auto per_sample = map_indices<Result>(
        samples.size(),
        [&](std::size_t s) {
            const Point& m = samples[s];
            const Eigen::MatrixXd f = solver.frame(m);
            const PointFunction frame_fn = [&solver](const Point& p) { return flatten(solver.frame(p)); };
            const Eigen::MatrixXd jac = box_jacobian(frame_fn, chart, m, kVerifyRelStep);
            Result out;
            for (std::size_t a = 0; a < action.size(); ++a) {
                const Eigen::VectorXd xi = action.generators()[a].eval(m);
                const Eigen::MatrixXd dx = eval_matrix(dxi[a], m);  // dx(i, j) = d_j xi^i
                for (Eigen::Index i = 0; i < f.cols(); ++i) {
                    const auto block = jac.middleRows(i * 2 * nn, 2 * nn);
                    const Eigen::VectorXd z = f.col(i).head(nn);
                    const Eigen::VectorXd gamma = f.col(i).tail(nn);
                    const Eigen::VectorXd lie = block.bottomRows(nn) * xi + dx.transpose() * gamma;
                    const double scale = 1.0 + f.col(i).norm();
                    out.form = std::max(out.form, lie.norm() / scale);
                    if (vector_part) {
                        const Eigen::VectorXd br = block.topRows(nn) * xi - dx * z;
                        out.vec = std::max(out.vec, br.tail(nn - idx(k)).norm() / scale);
                    }
                }
            }
            return out;
        },
        exec);

    ResidualScan form(prefix + ".form_invariance", "descending", tol);
    ResidualScan vec(prefix + ".vertical_bracket", "descending", tol);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        form.observe(per_sample[s].form, samples[s]);
        vec.observe(per_sample[s].vec, samples[s]);
    }
    report.add(std::move(form).finish());
    if (vector_part) report.add(std::move(vec).finish());
}

}  // namespace

InvariantFrameResult descending_generators(const DiracStructure& d, const InfinitesimalAction& action,
                                           const GeneralizedDistribution& family, const std::vector<Point>& samples,
                                           FoliatedNumerics numerics, Execution exec) {
    if (!same_chart(d.chart(), action.chart()) || !same_chart(d.chart(), family.chart())) throw ChartMismatch();
    const double tol = numerics.tol;
    require_foliated_action(action, samples, tol);

    // the family must lie in D cap K-perp and span it
    ResidualScan spans("family.spans_intersection", "descending", tol);
    for (const auto& m : samples) {
        const Eigen::MatrixXd fam = family.eval(m);
        const Eigen::MatrixXd dm = d.eval(m);
        const IntersectionBasis inter = intersect_D_Kperp(d, action, m);
        double worst = 0.0;
        std::string detail;
        for (Eigen::Index i = 0; i < fam.cols(); ++i) {
            worst = std::max(worst, membership_residual(dm, fam.col(i)));
            if (!in_K_perp(action, m, fam.col(i), tol)) {
                worst = std::max(worst, 1.0);
                detail = "family member " + std::to_string(i) + " does not annihilate V";
            }
        }
        for (Eigen::Index i = 0; i < inter.basis.cols(); ++i) worst = std::max(worst, membership_residual(fam, inter.basis.col(i)));
        const int fr = linalg::numerical_rank(fam, kRankTol);
        if (fr != inter.rank) {
            worst = std::max(worst, 1.0);
            detail = "family rank " + std::to_string(fr) + " but D cap K-perp has rank " + std::to_string(inter.rank);
        }
        spans.observe(worst, m, detail);
    }

    InvariantFrameResult result = run(FoliatedProblem(family, std::nullopt, numerics), samples, exec);
    result.report.add(std::move(spans).finish());
    append_invariance_checks(result.report, action, *result.solver, samples, tol, true, exec, "descending");
    return result;
}

InvariantFrameResult invariant_annihilator_generators(const InfinitesimalAction& action,
                                                      const std::vector<OneForm>& family,
                                                      const std::vector<Point>& samples, FoliatedNumerics numerics,
                                                      Execution exec) {
    const auto& chart = action.chart();
    const double tol = numerics.tol;
    require_foliated_action(action, samples, tol);
    std::vector<PontryaginSection> sections;
    for (const auto& a : family) {
        if (!same_chart(a.chart(), chart)) throw ChartMismatch();
        sections.emplace_back(VectorField(chart), a);
    }
    const GeneralizedDistribution d(chart, std::move(sections));

    ResidualScan ann("family.annihilates_vertical", "annihilator", tol);
    const TangentDistribution v(chart, action.generators());
    for (const auto& m : samples) {
        const Eigen::MatrixXd vm = v.eval(m);
        double worst = 0.0;
        for (const auto& a : family) {
            const Eigen::VectorXd av = a.eval(m);
            if (vm.cols()) worst = std::max(worst, (vm.transpose() * av).norm() / (1.0 + av.norm()));
        }
        ann.observe(worst, m);
    }

    InvariantFrameResult result = run(FoliatedProblem(d, std::nullopt, numerics), samples, exec);
    result.report.add(std::move(ann).finish());
    append_invariance_checks(result.report, action, *result.solver, samples, tol, false, exec, "annihilator");
    return result;
}

QuotientMap::QuotientMap(ChartPtr source, ChartPtr target, std::vector<Expr> components)
    : source_(std::move(source)), target_(std::move(target)), components_(std::move(components)) {
    if (components_.size() != target_->dim())
        throw InvalidInput("quotient map needs one component per target coordinate");
    if (target_->dim() > source_->dim()) throw InvalidInput("quotient target has larger dimension than the source");
    for (const auto& c : components_) {
        std::vector<Expr> row;
        for (std::size_t j = 0; j < source_->dim(); ++j) row.push_back(diff(c, j));
        jacobian_.push_back(std::move(row));
    }
}

Eigen::VectorXd QuotientMap::eval(std::span<const double> m) const {
    require_in_box(*source_, m);
    Eigen::VectorXd out(idx(components_.size()));
    for (std::size_t i = 0; i < components_.size(); ++i) out[idx(i)] = components_[i].eval(m);
    return out;
}

Eigen::MatrixXd QuotientMap::jacobian(std::span<const double> m) const {
    require_in_box(*source_, m);
    return eval_matrix(jacobian_, m);
}

Report QuotientMap::validate(const InfinitesimalAction& action, const std::vector<Point>& samples, double tol) const {
    ResidualScan sub("quotient.submersion", "quotient", 0.0);
    ResidualScan inv("quotient.invariance", "quotient", tol);
    const TangentDistribution v(action.chart(), action.generators());
    for (const auto& m : samples) {
        const Eigen::MatrixXd j = jacobian(m);
        const int r = linalg::numerical_rank(j, kRankTol);
        sub.observe(std::abs(r - static_cast<int>(target_->dim())), m, "Jacobian rank " + std::to_string(r));
        const Eigen::MatrixXd vm = v.eval(m);
        inv.observe(vm.cols() ? (j * vm).norm() / (1.0 + j.norm()) : 0.0, m);
        const Eigen::VectorXd y = eval(m);
        if (!target_->contains(std::span<const double>(y.data(), static_cast<std::size_t>(y.size()))))
            inv.fail(m, "image lies outside the target box");
    }
    Report out;
    out.add(std::move(sub).finish());
    out.add(std::move(inv).finish());
    return out;
}

std::optional<Point> QuotientMap::lift(const Eigen::VectorXd& ybar, const Point& start) const {
    Point x = start;
    for (int it = 0; it < 50; ++it) {
        const Eigen::VectorXd miss = ybar - eval(x);
        if (miss.norm() <= 1e-13 * (1.0 + ybar.norm())) return x;
        const Eigen::VectorXd dx = jacobian(x).completeOrthogonalDecomposition().solve(miss);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = std::clamp(x[i] + dx[idx(i)], source_->interval(i).lo, source_->interval(i).hi);
    }
    const Eigen::VectorXd miss = ybar - eval(x);
    if (miss.norm() <= 1e-11 * (1.0 + ybar.norm())) return x;
    return std::nullopt;
}

PushedFrame push_frame(const QuotientMap& q, const Eigen::MatrixXd& frame_values, std::span<const double> m) {
    const auto n = idx(q.source()->dim());
    const auto nb = idx(q.target()->dim());
    const Eigen::MatrixXd j = q.jacobian(m);
    PushedFrame out;
    out.target_point = q.eval(m);
    out.values.resize(2 * nb, frame_values.cols());
    out.values.topRows(nb) = j * frame_values.topRows(n);
    const Eigen::MatrixXd gamma = frame_values.bottomRows(n);
    const auto ls = linalg::solve_least_squares(j.transpose(), gamma);
    out.values.bottomRows(nb) = ls.solution;
    for (Eigen::Index i = 0; i < gamma.cols(); ++i)
        out.basic_residual = std::max(out.basic_residual, ls.residual[i] / (1.0 + gamma.col(i).norm()));
    return out;
}

std::vector<std::pair<Point, Point>> same_fiber_pairs(const InfinitesimalAction& action, const QuotientMap& q,
                                                      const std::vector<Point>& samples, std::size_t count) {
    (void)q;
    const auto& chart = *action.chart();
    double width = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < chart.dim(); ++i) width = std::min(width, chart.interval(i).width());
    const double base = 0.25 * width;
    constexpr int kSteps = 200;

    auto flow = [&](const VectorField& xi, Point p, double t) -> std::optional<Point> {
        const double h = t / kSteps;
        auto f = [&](const Point& x) -> std::optional<Eigen::VectorXd> {
            if (!chart.contains(x)) return std::nullopt;
            return xi.eval(x);
        };
        auto shifted = [&](const Point& x, const Eigen::VectorXd& v, double s) {
            Point y = x;
            for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * v[idx(i)];
            return y;
        };
        for (int s = 0; s < kSteps; ++s) {
            const auto k1 = f(p);
            if (!k1) return std::nullopt;
            const auto k2 = f(shifted(p, *k1, 0.5 * h));
            if (!k2) return std::nullopt;
            const auto k3 = f(shifted(p, *k2, 0.5 * h));
            if (!k3) return std::nullopt;
            const auto k4 = f(shifted(p, *k3, h));
            if (!k4) return std::nullopt;
            p = shifted(p, (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4) / 6.0, h);
        }
        if (!chart.contains(p)) return std::nullopt;
        return p;
    };

    std::vector<std::pair<Point, Point>> pairs;
    for (const auto& m : samples) {
        for (const auto& xi : action.generators()) {
            if (pairs.size() >= count) return pairs;
            std::optional<Point> other;
            for (double t = base; !other && t > base * 1e-3; t *= 0.5) {
                other = flow(xi, m, t);
                if (!other) other = flow(xi, m, -t);
            }
            if (other) pairs.emplace_back(m, *other);
        }
    }
    return pairs;
}

Report pushforward_check(const DiracStructure& d, const InfinitesimalAction& action, const QuotientMap& q,
                         const InvariantFrameResult& frame, const std::vector<Point>& samples,
                         const PushforwardOptions& options, Execution exec) {
    const double tol = options.tol;
    const auto& target = *q.target();
    const std::size_t nb = target.dim();
    const auto nbb = idx(nb);

    struct Result {
        double in_d = 0.0;
        double basic = 0.0;
        int rank = 0;
        double isotropy = 0.0;
        double pairing = 0.0;
        double closed = 0.0;
        std::string closed_detail;
    };
    const auto per_sample = map_indices<Result>(
        samples.size(),
        [&](std::size_t s) {
            const Point& m = samples[s];
            Result out;
            const Eigen::MatrixXd f = frame.frame(m);
            const Eigen::MatrixXd dm = d.eval(m);
            for (Eigen::Index i = 0; i < f.cols(); ++i) out.in_d = std::max(out.in_d, membership_residual(dm, f.col(i)));

            const PushedFrame pf = push_frame(q, f, m);
            out.basic = pf.basic_residual;
            out.rank = linalg::numerical_rank(pf.values, kRankTol);
            const Eigen::MatrixXd jq = q.jacobian(m);
            const auto n = idx(q.source()->dim());
            for (Eigen::Index a = 0; a < f.cols(); ++a)
                for (Eigen::Index b = a; b < f.cols(); ++b) {
                    const Eigen::VectorXd va = pf.values.col(a);
                    const Eigen::VectorXd vb = pf.values.col(b);
                    const double pb = pairing_value(va, vb);
                    out.isotropy = std::max(out.isotropy, std::abs(pb) / (1.0 + va.norm() * vb.norm()));
                    Eigen::VectorXd la(2 * n), lb(2 * n);
                    la << f.col(a).head(n), jq.transpose() * va.tail(nbb);
                    lb << f.col(b).head(n), jq.transpose() * vb.tail(nbb);
                    out.pairing =
                        std::max(out.pairing, std::abs(pb - pairing_value(la, lb)) / (1.0 + la.norm() * lb.norm()));
                }

            if (options.check_closed) {
                const Point ybar(pf.target_point.data(), pf.target_point.data() + nb);
                if (!target.contains(ybar)) {
                    out.closed = 1.0;
                    out.closed_detail = "image lies outside the target box";
                    return out;
                }
                const PointFunction pushed = [&](const Point& y) {
                    const auto lifted = q.lift(Eigen::Map<const Eigen::VectorXd>(y.data(), idx(y.size())), m);
                    if (!lifted) throw EvalError("no point of the source box lies over " + point_text(y));
                    return flatten(push_frame(q, frame.frame(*lifted), *lifted).values);
                };
                Eigen::MatrixXd jac;
                try {
                    jac = box_jacobian(pushed, target, ybar, kVerifyRelStep);
                } catch (const EvalError& e) {
                    out.closed = 1.0;
                    out.closed_detail = e.what();
                    return out;
                }
                const Eigen::MatrixXd& v = pf.values;
                const auto rows = 2 * nbb;
                for (Eigen::Index a = 0; a < v.cols(); ++a)
                    for (Eigen::Index b = 0; b < v.cols(); ++b) {
                        const auto ja = jac.middleRows(a * rows, rows);
                        const auto jb = jac.middleRows(b * rows, rows);
                        const Eigen::VectorXd xa = v.col(a).head(nbb), xb = v.col(b).head(nbb);
                        const Eigen::VectorXd aa = v.col(a).tail(nbb), bb = v.col(b).tail(nbb);
                        Eigen::VectorXd br(rows);
                        br.head(nbb) = jb.topRows(nbb) * xa - ja.topRows(nbb) * xb;
                        // L_Xa b - i_Xb d a
                        br.tail(nbb) = jb.bottomRows(nbb) * xa + ja.topRows(nbb).transpose() * bb -
                                       (ja.bottomRows(nbb) * xb - ja.bottomRows(nbb).transpose() * xb);
                        const double r = membership_residual(v, br);
                        if (!(r <= out.closed)) {
                            out.closed = r;
                            out.closed_detail = "Courant bracket of pushed sections " + std::to_string(a) + " and " +
                                                std::to_string(b);
                        }
                    }
            }
            return out;
        },
        exec);

    ResidualScan in_d("frame.in_D", "descending", tol);
    ResidualScan basic("pushforward.basic", "reduction", tol);
    ResidualScan rank("reduced.rank", "reduction", 0.0);
    ResidualScan iso("reduced.isotropy", "reduction", tol);
    ResidualScan pairing("reduced.pairing_identity", "reduction", tol);
    ResidualScan closed("reduced.closed", "reduction", tol);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& v = per_sample[s];
        in_d.observe(v.in_d, samples[s]);
        basic.observe(v.basic, samples[s]);
        rank.observe(std::abs(v.rank - static_cast<int>(nb)), samples[s], "rank " + std::to_string(v.rank));
        iso.observe(v.isotropy, samples[s]);
        pairing.observe(v.pairing, samples[s]);
        closed.observe(v.closed, samples[s], v.closed_detail);
    }
    CheckRecord rank_rec = std::move(rank).finish();
    if (rank_rec.passed) rank_rec.detail = "rank " + std::to_string(nb);

    // well-definedness along fibers
    ResidualScan fiber("reduced.fiber_consistency", "reduction", tol);
    const auto pairs = same_fiber_pairs(action, q, samples, options.fiber_pairs);
    const auto fiber_res = map_indices<std::pair<double, std::string>>(
        pairs.size(),
        [&](std::size_t p) -> std::pair<double, std::string> {
            const auto& [a, b] = pairs[p];
            const double qdiff = (q.eval(a) - q.eval(b)).norm();
            if (qdiff > 1e-9) return {1.0, "flowed point leaves the fiber (|q difference| = " + std::to_string(qdiff) + ")"};
            const Eigen::MatrixXd va = push_frame(q, frame.frame(a), a).values;
            const Eigen::MatrixXd vb = push_frame(q, frame.frame(b), b).values;
            return {(va - vb).norm() / (1.0 + va.norm()), "paired with " + point_text(b)};
        },
        exec);
    for (std::size_t p = 0; p < pairs.size(); ++p) fiber.observe(fiber_res[p].first, pairs[p].first, fiber_res[p].second);
    if (pairs.size() < options.fiber_pairs)
        fiber.fail(samples.empty() ? Point{} : samples[0],
                   "only " + std::to_string(pairs.size()) + " same-fiber pairs could be formed inside the box");
    CheckRecord fiber_rec = std::move(fiber).finish();
    if (fiber_rec.passed) fiber_rec.detail = std::to_string(pairs.size()) + " pairs";

    Report out;
    out.add(std::move(in_d).finish());
    out.add(std::move(basic).finish());
    out.add(std::move(rank_rec));
    out.add(std::move(iso).finish());
    out.add(std::move(pairing).finish());
    out.add(std::move(fiber_rec));
    if (options.check_closed) out.add(std::move(closed).finish());
    return out;
}

}  // namespace invgen
