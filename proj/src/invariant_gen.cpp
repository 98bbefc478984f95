#include "invgen/invariant_gen.hpp"

#include <bit>
#include <cmath>
#include <mutex>
#include <sstream>

#include "invgen/errors.hpp"
#include "invgen/linalg.hpp"
#include "invgen/sampling.hpp"

namespace invgen {

namespace {

std::size_t step_count(double length, double step) {
    if (length == 0.0) return 0;
    // the 1e-9 slack keeps exact multiples of the step from gaining a sliver step
    return static_cast<std::size_t>(std::ceil(std::abs(length) / step - 1e-9));
}

Eigen::MatrixXd identity(std::size_t r) {
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
}

// Least squares against the tilde block; NonUniqueCoefficients if it is rank deficient.
Eigen::MatrixXd tilde_solve(const Eigen::MatrixXd& t, const Eigen::MatrixXd& rhs, const Point& m,
                            const std::string& stage) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankTol);
    cod.compute(t);
    if (cod.rank() < t.cols()) {
        std::ostringstream os;
        os << "tilde block of the generators has rank " << cod.rank() << " < " << t.cols()
           << "; present D with a pointwise independent frame";
        throw NonUniqueCoefficients(stage, m, os.str());
    }
    return cod.solve(rhs);
}

std::string point_text(const Point& m) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < m.size(); ++i) os << (i ? ", " : "") << m[i];
    os << ")";
    return os.str();
}

}  // namespace

void require_leaf_annihilating(const PontryaginSection& s, std::size_t k, const std::string& what) {
    const auto& chart = *s.chart();
    const auto probes = default_samples(chart, 4, 0);
    for (std::size_t j = 0; j < k; ++j) {
        const Expr& a = s.form()[j];
        if (a.is_zero()) continue;
        for (const auto& p : probes) {
            const double v = a.eval(p);
            if (v != 0.0)
                throw InvalidInput(what + ": form component along d" + chart.names()[j] + " is " + std::to_string(v) +
                                   " at " + point_text(p) + " but must vanish on the leaf directions");
        }
    }
}

SplitSection split_tilde(const PontryaginSection& s, std::size_t k) {
    require_leaf_annihilating(s, k, "section");
    const auto& chart = s.chart();
    std::vector<Expr> leaf(chart->dim()), vec(chart->dim()), form(chart->dim());
    for (std::size_t j = 0; j < chart->dim(); ++j) {
        (j < k ? leaf[j] : vec[j]) = s.vf()[j];
        if (j >= k) form[j] = s.form()[j];
    }
    return {VectorField(chart, std::move(leaf)), PontryaginSection(VectorField(chart, std::move(vec)),
                                                                   OneForm(chart, std::move(form)))};
}

FoliatedProblem::FoliatedProblem(GeneralizedDistribution d, std::optional<PontryaginSection> extra,
                                 FoliatedNumerics numerics)
    : d_(std::move(d)), extra_(std::move(extra)), numerics_(numerics) {
    if (!(numerics_.tol > 0.0)) throw InvalidInput("tolerance must be positive");
    if (numerics_.ode_step && !(*numerics_.ode_step > 0.0)) throw InvalidInput("ODE step must be positive");
    if (numerics_.quad_step && !(*numerics_.quad_step > 0.0)) throw InvalidInput("quadrature step must be positive");
    if (extra_ && !same_chart(extra_->chart(), d_.chart())) throw ChartMismatch();
    const std::size_t k = leaf_count();
    for (std::size_t i = 0; i < d_.size(); ++i) require_leaf_annihilating(d_.generators()[i], k, "generator " + std::to_string(i));
    if (extra_) require_leaf_annihilating(*extra_, k, "extra section");
}

double FoliatedProblem::ode_step(std::size_t j) const {
    return numerics_.ode_step ? *numerics_.ode_step : fd_step(*chart(), j, 1e-3);
}

double FoliatedProblem::quad_step(std::size_t j) const {
    return numerics_.quad_step ? *numerics_.quad_step : ode_step(j);
}

std::size_t FrameSolver::CacheHash::operator()(const CacheKey& key) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(key.j);
    mix(key.steps);
    for (auto b : key.bits) mix(b);
    return static_cast<std::size_t>(h);
}

FrameSolver::FrameSolver(FoliatedProblem problem) : problem_(std::move(problem)) {
    const std::size_t n = problem_.dim();
    const std::size_t k = problem_.leaf_count();
    for (std::size_t j = k; j < n; ++j) tilde_rows_.push_back(static_cast<Eigen::Index>(j));
    for (std::size_t j = k; j < n; ++j) tilde_rows_.push_back(static_cast<Eigen::Index>(n + j));

    auto stacked = [n](const PontryaginSection& s) {
        std::vector<Expr> c(2 * n);
        for (std::size_t j = 0; j < n; ++j) {
            c[j] = s.vf()[j];
            c[n + j] = s.form()[j];
        }
        return c;
    };
    auto derived = [](const std::vector<Expr>& c, std::size_t l) {
        std::vector<Expr> d;
        d.reserve(c.size());
        for (const auto& e : c) d.push_back(diff(e, l));
        return d;
    };
    for (const auto& g : problem_.generators()) g_.push_back(stacked(g));
    dg_.resize(k);
    for (std::size_t l = 0; l < k; ++l)
        for (const auto& c : g_) dg_[l].push_back(derived(c, l));
    if (problem_.extra()) {
        e_ = stacked(*problem_.extra());
        for (std::size_t l = 0; l < k; ++l) de_.push_back(derived(e_, l));
    }
}

Eigen::MatrixXd FrameSolver::eval_columns(const Columns& cols, const Point& m) const {
    const auto rows = static_cast<Eigen::Index>(2 * problem_.dim());
    Eigen::MatrixXd out(rows, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
        for (Eigen::Index j = 0; j < rows; ++j) out(j, static_cast<Eigen::Index>(i)) = cols[i][static_cast<std::size_t>(j)].eval(m);
    return out;
}

Eigen::MatrixXd FrameSolver::tilde_of(const Eigen::MatrixXd& full) const { return full(tilde_rows_, Eigen::all); }

Eigen::MatrixXd FrameSolver::generators_at(const Point& m) const {
    require_in_box(*problem_.chart(), m);
    return eval_columns(g_, m);
}

Eigen::MatrixXd FrameSolver::coefficient_matrix_unchecked(std::size_t l, const Point& m, double* residual) const {
    const std::size_t n = problem_.dim();
    const std::size_t k = problem_.leaf_count();
    const Eigen::MatrixXd g = eval_columns(g_, m);
    const Eigen::MatrixXd dg = eval_columns(dg_[l], m);
    const Eigen::MatrixXd t = tilde_of(g);
    const Eigen::MatrixXd dt = tilde_of(dg);
    Eigen::MatrixXd b = tilde_solve(t, dt, m, "Step 1");

    double worst = 0.0;
    const Eigen::MatrixXd misfit = t * b - dt;
    for (Eigen::Index i = 0; i < dg.cols(); ++i) {
        // leaf form components of d_l g_i cannot be absorbed by Theta or D
        const double leaf_form = dg.col(i).segment(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)).squaredNorm();
        const double r = std::sqrt(misfit.col(i).squaredNorm() + leaf_form) / (1.0 + dg.col(i).norm());
        if (!(r <= worst)) worst = r;
    }
    if (!(worst <= problem_.tol())) {
        std::ostringstream os;
        os << "derivative of the generators along " << problem_.chart()->names()[l]
           << " is not in Theta + D (relative residual " << worst << ")";
        throw HypothesisViolated("Step 1", m, worst, os.str());
    }
    if (residual) *residual = worst;
    return b;
}

Eigen::MatrixXd FrameSolver::coefficient_matrix(std::size_t l, const Point& m) const {
    require_in_box(*problem_.chart(), m);
    return coefficient_matrix_unchecked(l, m, nullptr);
}

Coefficients FrameSolver::solve_coefficients(const Point& m) const {
    require_in_box(*problem_.chart(), m);
    const std::size_t k = problem_.leaf_count();
    const auto kk = static_cast<Eigen::Index>(k);
    Coefficients c;
    const Eigen::MatrixXd g = eval_columns(g_, m);
    for (std::size_t l = 0; l < k; ++l) {
        double res = 0.0;
        Eigen::MatrixXd b = coefficient_matrix_unchecked(l, m, &res);
        const Eigen::MatrixXd dg = eval_columns(dg_[l], m);
        c.A.push_back(dg.topRows(kk) - g.topRows(kk) * b);
        c.B.push_back(std::move(b));
        c.residual = std::max(c.residual, res);
    }
    return c;
}

void FrameSolver::check_fundamental(const Eigen::MatrixXd& w, const Point& m, std::size_t j) const {
    const std::string name = problem_.chart()->names()[j];
    if (!w.allFinite()) throw NumericalBreakdown("Step 2", m, "non-finite values integrating W along " + name);
    const double cond = linalg::condition_number(w);
    if (!(cond <= 1.0 / problem_.tol())) {
        std::ostringstream os;
        os << "fundamental matrix along " << name << " is singular (condition number " << cond << ")";
        throw NumericalBreakdown("Step 2", m, os.str());
    }
}

Eigen::MatrixXd FrameSolver::integrate_line(std::size_t j, const Point& m) const {
    const double x = m[j];
    const std::size_t steps = step_count(x, problem_.ode_step(j));
    const std::size_t r = problem_.rank();
    if (steps == 0) return identity(r);

    CacheKey key{j, steps, {}};
    key.bits.reserve(m.size());
    for (double v : m) key.bits.push_back(std::bit_cast<std::uint64_t>(v));
    {
        std::shared_lock lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }

    Point p = m;
    auto rhs_matrix = [&](double t) {
        p[j] = t;
        return Eigen::MatrixXd(coefficient_matrix_unchecked(j, p, nullptr).transpose());
    };
    const double dt = x / static_cast<double>(steps);
    Eigen::MatrixXd y = identity(r);
    Eigen::MatrixXd b0 = rhs_matrix(0.0);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t0 = x * static_cast<double>(s) / static_cast<double>(steps);
        const double t1 = (s + 1 == steps) ? x : x * static_cast<double>(s + 1) / static_cast<double>(steps);
        const Eigen::MatrixXd bm = rhs_matrix(0.5 * (t0 + t1));
        const Eigen::MatrixXd b1 = rhs_matrix(t1);
        const Eigen::MatrixXd k1 = b0 * y;
        const Eigen::MatrixXd k2 = bm * (y + 0.5 * dt * k1);
        const Eigen::MatrixXd k3 = bm * (y + 0.5 * dt * k2);
        const Eigen::MatrixXd k4 = b1 * (y + dt * k3);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        b0 = b1;
    }
    check_fundamental(y, m, j);

    std::unique_lock lock(cache_mutex_);
    cache_.emplace(std::move(key), y);
    return y;
}

Eigen::MatrixXd FrameSolver::fundamental_matrix(std::size_t j, const Point& m) const {
    require_in_box(*problem_.chart(), m);
    if (j >= problem_.leaf_count()) throw InvalidInput("fundamental matrices exist only along leaf coordinates");
    return integrate_line(j, m);
}

std::size_t FrameSolver::cache_size() const {
    std::shared_lock lock(cache_mutex_);
    return cache_.size();
}

Eigen::MatrixXd FrameSolver::build_H(const Point& m) const {
    require_in_box(*problem_.chart(), m);
    const std::size_t k = problem_.leaf_count();
    const std::size_t r = problem_.rank();
    if (k == 0) return identity(r);

    // H = W_k(m) * prod_{j = k..2} (W_j^{-1} W_{j-1})(m with x^j..x^k zeroed), 1-based.
    Eigen::MatrixXd h = integrate_line(k - 1, m);
    Point p = m;
    for (std::size_t j = k - 1; j >= 1; --j) {
        p[j] = 0.0;
        const Eigen::MatrixXd wj = integrate_line(j, p);
        const Eigen::MatrixXd wprev = integrate_line(j - 1, p);
        h = h * wj.partialPivLu().solve(wprev);
    }
    if (!h.allFinite() || !(linalg::condition_number(h) <= 1.0 / problem_.tol()))
        throw NumericalBreakdown("Step 2", m, "H is singular");
    return h;
}

Eigen::MatrixXd FrameSolver::build_B(const Point& m) const {
    const Eigen::MatrixXd h = build_H(m);
    return h.transpose().partialPivLu().solve(identity(problem_.rank()));
}

Eigen::MatrixXd FrameSolver::frame(const Point& m) const { return generators_at(m) * build_B(m); }

BetaSigma FrameSolver::beta_fields(const Point& m) const {
    require_in_box(*problem_.chart(), m);
    if (!problem_.extra()) throw InvalidInput("beta fields need an extra section");
    const std::size_t n = problem_.dim();
    const std::size_t k = problem_.leaf_count();
    const auto kk = static_cast<Eigen::Index>(k);
    const Eigen::MatrixXd g = eval_columns(g_, m);
    const Eigen::MatrixXd t = tilde_of(g);
    BetaSigma out;
    for (std::size_t l = 0; l < k; ++l) {
        Eigen::VectorXd de(static_cast<Eigen::Index>(2 * n));
        for (std::size_t j = 0; j < 2 * n; ++j) de[static_cast<Eigen::Index>(j)] = de_[l][j].eval(m);
        const Eigen::VectorXd dt = tilde_of(de);
        Eigen::VectorXd beta = tilde_solve(t, dt, m, "Step 4");
        const double leaf_form = de.segment(static_cast<Eigen::Index>(n), kk).squaredNorm();
        const double res = std::sqrt((t * beta - dt).squaredNorm() + leaf_form) / (1.0 + de.norm());
        if (!(res <= problem_.tol())) {
            std::ostringstream os;
            os << "derivative of the extra section along " << problem_.chart()->names()[l]
               << " is not in Theta + D (relative residual " << res << ")";
            throw HypothesisViolated("Step 4", m, res, os.str());
        }
        out.residual = std::max(out.residual, res);
        out.sigma.push_back(de.head(kk) - g.topRows(kk) * beta);
        out.beta.push_back(std::move(beta));
    }
    return out;
}

Eigen::VectorXd FrameSolver::compute_R(const Point& m) const {
    require_in_box(*problem_.chart(), m);
    if (!problem_.extra()) throw InvalidInput("R needs an extra section");
    const std::size_t k = problem_.leaf_count();
    const std::size_t r = problem_.rank();
    Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r));

    for (std::size_t l = 0; l < k; ++l) {
        // path_l(tau) = (x^1..x^{l-1}, tau, 0..0, x^{k+1}..); along it
        // H(path_l(tau)) = W_l(path_l(tau)) H(path_l(0)).
        Point p = m;
        for (std::size_t j = l + 1; j < k; ++j) p[j] = 0.0;
        const double x = m[l];
        if (x == 0.0) continue;
        p[l] = 0.0;
        const Eigen::MatrixXd h0 = build_H(p);

        const std::size_t panels = 2 * step_count(x, 2.0 * problem_.quad_step(l));
        const double dtau = x / static_cast<double>(panels);
        const std::size_t sub = std::max<std::size_t>(1, step_count(dtau, problem_.ode_step(l)));

        auto b_transpose = [&](double t) {
            p[l] = t;
            return Eigen::MatrixXd(coefficient_matrix_unchecked(l, p, nullptr).transpose());
        };
        auto beta_at = [&](double t) {
            p[l] = t;
            return beta_fields(p).beta[l];
        };
        auto node = [&](std::size_t i) {
            return (i == panels) ? x : x * static_cast<double>(i) / static_cast<double>(panels);
        };

        Eigen::MatrixXd w = identity(r);
        Eigen::VectorXd sum = beta_at(0.0);
        for (std::size_t i = 0; i < panels; ++i) {
            const double a = node(i);
            const double b = node(i + 1);
            Eigen::MatrixXd b0 = b_transpose(a);
            for (std::size_t s = 0; s < sub; ++s) {
                const double t0 = a + (b - a) * static_cast<double>(s) / static_cast<double>(sub);
                const double t1 = (s + 1 == sub) ? b : a + (b - a) * static_cast<double>(s + 1) / static_cast<double>(sub);
                const double dt = t1 - t0;
                const Eigen::MatrixXd bm = b_transpose(0.5 * (t0 + t1));
                const Eigen::MatrixXd b1 = b_transpose(t1);
                const Eigen::MatrixXd k1 = b0 * w;
                const Eigen::MatrixXd k2 = bm * (w + 0.5 * dt * k1);
                const Eigen::MatrixXd k3 = bm * (w + 0.5 * dt * k2);
                const Eigen::MatrixXd k4 = b1 * (w + dt * k3);
                w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                b0 = b1;
            }
            if (!w.allFinite()) throw NumericalBreakdown("Step 4", m, "non-finite values integrating along the R path");
            const double weight = (i + 1 == panels) ? 1.0 : ((i % 2 == 0) ? 4.0 : 2.0);
            sum += weight * (w.transpose() * beta_at(b));
        }
        total += h0.transpose() * (dtau / 3.0 * sum);
    }
    return total;
}

Eigen::VectorXd FrameSolver::compute_Pi(const Point& m) const { return -(build_B(m) * compute_R(m)); }

Eigen::VectorXd FrameSolver::correction(const Point& m) const { return generators_at(m) * compute_Pi(m); }

Eigen::VectorXd FrameSolver::combined(const Point& m) const {
    if (!problem_.extra()) throw InvalidInput("no extra section to correct");
    const Eigen::VectorXd corr = correction(m);
    return problem_.extra()->eval(m) + corr;
}

Eigen::VectorXd theta_bracket_tail(const Eigen::MatrixXd& jacobian, std::size_t l, std::size_t k) {
    const auto n = jacobian.cols();
    const auto kk = static_cast<Eigen::Index>(k);
    const auto ll = static_cast<Eigen::Index>(l);
    Eigen::VectorXd out(n - kk + n);
    out.head(n - kk) = jacobian.col(ll).segment(kk, n - kk);
    for (Eigen::Index j = 0; j < n; ++j) out[n - kk + j] = jacobian(n + j, ll) - 0.5 * jacobian(n + ll, j);
    return out;
}

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

struct SampleResiduals {
    double step1 = 0.0;
    double span = 0.0;
    std::string span_detail;
    double leaf_independence = 0.0;
    double ode = 0.0;
    double frame_bracket = 0.0;
    std::string frame_bracket_detail;
    double step4 = 0.0;
    double extra_bracket = 0.0;
    double r_identity = 0.0;
};

SampleResiduals verify_sample(const FrameSolver& solver, const Point& m) {
    const auto& pb = solver.problem();
    const auto& chart = *pb.chart();
    const std::size_t n = pb.dim();
    const std::size_t k = pb.leaf_count();
    const std::size_t r = pb.rank();
    const auto n2 = static_cast<Eigen::Index>(2 * n);
    SampleResiduals out;

    out.step1 = solver.solve_coefficients(m).residual;

    // (i) span equality by mutual containment and rank
    const Eigen::MatrixXd g = solver.generators_at(m);
    const Eigen::MatrixXd f = solver.frame(m);
    for (Eigen::Index i = 0; i < f.cols(); ++i) {
        out.span = std::max(out.span, membership_residual(g, f.col(i)));
        out.span = std::max(out.span, membership_residual(f, g.col(i)));
    }
    Eigen::MatrixXd both(n2, g.cols() + f.cols());
    both << g, f;
    const int rank_g = linalg::numerical_rank(g, kRankTol);
    const int rank_both = linalg::numerical_rank(both, kRankTol);
    if (rank_g != rank_both || rank_g != static_cast<int>(r)) {
        out.span = std::max(out.span, 1.0);
        out.span_detail = "rank of generators " + std::to_string(rank_g) + ", with frame " + std::to_string(rank_both);
    }

    // Jacobian of the flattened frame, reused for Step 2 and (ii)
    const PointFunction frame_fn = [&solver](const Point& p) { return flatten(solver.frame(p)); };
    const Eigen::MatrixXd jac = box_jacobian(frame_fn, chart, m, kVerifyRelStep);
    const auto& tr = solver.tilde_rows();
    for (std::size_t i = 0; i < r; ++i) {
        const auto block = jac.middleRows(static_cast<Eigen::Index>(i) * n2, n2);
        const Eigen::VectorXd fi = f.col(static_cast<Eigen::Index>(i));
        const Eigen::VectorXd tail_value = fi(tr);
        for (std::size_t l = 0; l < k; ++l) {
            const Eigen::VectorXd d_tilde = block.col(static_cast<Eigen::Index>(l))(tr);
            out.leaf_independence = std::max(out.leaf_independence, d_tilde.norm() / (1.0 + tail_value.norm()));
            const Eigen::VectorXd tail = theta_bracket_tail(block, l, k);
            const double res = tail.norm() / (1.0 + fi.norm());
            if (!(res <= out.frame_bracket)) {
                out.frame_bracket = res;
                out.frame_bracket_detail = "frame[" + std::to_string(i) + "] with d/d" + chart.names()[l];
            }
        }
    }

    // ODE residual of each W_j along its own coordinate
    for (std::size_t j = 0; j < k; ++j) {
        const PointFunction w_fn = [&solver, j](const Point& p) { return flatten(solver.fundamental_matrix(j, p)); };
        const Eigen::MatrixXd w = solver.fundamental_matrix(j, m);
        const Eigen::MatrixXd dw_expected = solver.coefficient_matrix(j, m).transpose() * w;
        const Eigen::VectorXd dw = box_derivative(w_fn, chart, m, j, fd_step(chart, j, kVerifyRelStep));
        const double h = pb.ode_step(j);
        const double res = (dw - flatten(dw_expected)).norm() / (1.0 + dw_expected.norm());
        // allowance C h^2 with C = 1 on top of tol
        out.ode = std::max(out.ode, res - h * h);
    }

    if (pb.extra()) {
        const BetaSigma bs = solver.beta_fields(m);
        out.step4 = bs.residual;

        const PointFunction combined_fn = [&solver](const Point& p) { return solver.combined(p); };
        const Eigen::MatrixXd cj = box_jacobian(combined_fn, chart, m, kVerifyRelStep);
        const Eigen::VectorXd c = solver.combined(m);
        for (std::size_t l = 0; l < k; ++l)
            out.extra_bracket = std::max(out.extra_bracket, theta_bracket_tail(cj, l, k).norm() / (1.0 + c.norm()));

        const PointFunction r_fn = [&solver](const Point& p) { return solver.compute_R(p); };
        const Eigen::MatrixXd t = g(tr, Eigen::all);
        const Eigen::MatrixXd tb = t * solver.build_B(m);
        for (std::size_t l = 0; l < k; ++l) {
            const Eigen::VectorXd dr = box_derivative(r_fn, chart, m, l, fd_step(chart, l, kVerifyRelStep));
            const Eigen::VectorXd rhs = t * bs.beta[l];
            out.r_identity = std::max(out.r_identity, (tb * dr - rhs).norm() / (1.0 + rhs.norm()));
        }
    }
    return out;
}

}  // namespace

InvariantFrameResult run(const FoliatedProblem& problem, const std::vector<Point>& samples, Execution exec) {
    auto solver = std::make_shared<const FrameSolver>(problem);
    const double tol = problem.tol();
    const std::size_t k = problem.leaf_count();
    InvariantFrameResult result{solver, {}};

    if (k == 0) {
        ResidualScan span("frame.span", "(i)", tol);
        for (const auto& m : samples) span.observe(0.0, m);
        result.report.add(std::move(span).finish());
        return result;
    }

    for (const auto& m : samples) require_in_box(*problem.chart(), m);

    // Step 1 everywhere first so hypothesis failures abort before any integration.
    map_indices<int>(samples.size(), [&](std::size_t s) { return (solver->solve_coefficients(samples[s]), 0); }, exec);

    const auto per_sample =
        map_indices<SampleResiduals>(samples.size(), [&](std::size_t s) { return verify_sample(*solver, samples[s]); }, exec);

    ResidualScan step1("step1.decomposition", "Step 1", tol);
    ResidualScan span("frame.span", "(i)", tol);
    ResidualScan leaf("step2.leaf_independence", "Step 2", tol);
    ResidualScan ode("step2.ode_residual", "Step 2", tol);
    ResidualScan bracket("frame.theta_bracket", "(ii)", tol);
    ResidualScan step4("step4.decomposition", "Step 4", tol);
    ResidualScan r_id("step4.R_identity", "Step 4", tol);
    ResidualScan extra("extra.theta_bracket", "(iii)", tol);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& v = per_sample[s];
        const auto& m = samples[s];
        step1.observe(v.step1, m);
        span.observe(v.span, m, v.span_detail);
        leaf.observe(v.leaf_independence, m);
        ode.observe(v.ode, m);
        bracket.observe(v.frame_bracket, m, v.frame_bracket_detail);
        if (problem.extra()) {
            step4.observe(v.step4, m);
            r_id.observe(v.r_identity, m);
            extra.observe(v.extra_bracket, m);
        }
    }
    result.report.add(std::move(step1).finish());
    result.report.add(std::move(span).finish());
    result.report.add(std::move(leaf).finish());
    result.report.add(std::move(ode).finish());
    result.report.add(std::move(bracket).finish());
    if (problem.extra()) {
        result.report.add(std::move(step4).finish());
        result.report.add(std::move(r_id).finish());
        result.report.add(std::move(extra).finish());
    }
    return result;
}

}  // namespace invgen
