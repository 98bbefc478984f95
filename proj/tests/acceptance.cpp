// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "corpus.hpp"
#include "invgen/cli.hpp"
#include "invgen/dirac.hpp"
#include "invgen/errors.hpp"
#include "invgen/invariant_gen.hpp"

using namespace invgen;
using invgen::testing::cube_chart;
using invgen::testing::random_expr;
using invgen::testing::random_field;
using invgen::testing::random_section;

namespace {

Expr x(std::size_t i) { return Expr::variable(i); }

PontryaginSection section(const ChartPtr& c, std::vector<Expr> v, std::vector<Expr> a) {
    return {VectorField(c, std::move(v)), OneForm(c, std::move(a))};
}

struct Outcome {
    bool passed = false;
    std::string detail;
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

std::string problem(const std::string& name) { return std::string(INVGEN_PROBLEMS_DIR) + "/" + name + ".json"; }

int cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    return run_cli(args, out, err);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// 1. Bracket identities over a random corpus, absolute max-norm residuals.
Outcome bracket_algebra() {
    const Timer t;
    UniformSource rng(2024);
    double worst = 0.0;
    std::size_t sections = 0;
    for (std::size_t n : {2u, 3u, 4u}) {
        const std::size_t k = n / 2;
        const auto c = cube_chart(n, k);
        const auto pts = random_samples(*c, 100, 100 + n);
        for (int rep = 0; rep < 35; ++rep) {
            const auto a = random_section(rng, c, 3);
            const auto b = random_section(rng, c, 3);
            sections += 2;

            // Y tangent to the leaves, alpha annihilating them
            std::vector<Expr> yc(n, Expr(0.0)), ac(n, Expr(0.0));
            for (std::size_t j = 0; j < k; ++j) yc[j] = random_expr(rng, n, 3);
            for (std::size_t j = k; j < n; ++j) ac[j] = random_expr(rng, n, 3);
            const VectorField Y(c, yc);
            const PontryaginSection xa(random_field(rng, c, 3), OneForm(c, ac));
            const PontryaginSection y0(Y, OneForm(c));
            const Expr f = random_expr(rng, n, 3);
            sections += 2;

            const auto ab = skew_bracket(a, b), ba = skew_bracket(b, a);
            const auto gap = courant_bracket(a, b) - ab;
            const PontryaginSection half_d(VectorField(c), OneForm::differential(c, Expr(0.5) * pairing(a, b)));
            const auto lhs = skew_bracket(y0, xa);
            const PontryaginSection rhs(lie_bracket(Y, xa.vf()), lie_derivative_form(Y, xa.form()));
            const auto lhs_f = skew_bracket(y0, f * xa);
            const auto rhs_f = apply(Y, f) * xa + f * lhs;
            for (const auto& p : pts) {
                const Eigen::VectorXd abv = ab.eval(p);
                worst = std::max(worst, (abv + ba.eval(p)).cwiseAbs().maxCoeff());
                worst = std::max(worst, abs_diff(gap.eval(p), half_d.eval(p)));
                worst = std::max(worst, abs_diff(lhs.eval(p), rhs.eval(p)));
                worst = std::max(worst, abs_diff(lhs_f.eval(p), rhs_f.eval(p)));
            }
        }
    }
    const double secs = t.seconds();
    return {worst <= 1e-9 && secs < 10.0 && sections >= 100,
            std::to_string(sections) + " sections x 100 points, max residual " + fmt("%.2e", worst) +
                " (<= 1e-9), " + fmt("%.2f", secs) + " s (< 10 s)"};
}

// 2. E1 frame against the hand oracle {(d2, dx2)}.
Outcome e1_end_to_end() {
    const Timer t;
    const auto c = cube_chart(3, 1);
    const FoliatedProblem pb(
        GeneralizedDistribution(c, {exp(x(0)) * section(c, {0.0, 1.0, 0.0}, {0.0, 1.0, 0.0})}));
    const auto samples = default_samples(*c);
    const auto res = run(pb, samples);
    Eigen::VectorXd want = Eigen::VectorXd::Zero(6);
    want[1] = want[4] = 1.0;
    double err = 0.0;
    for (const auto& m : samples) err = std::max(err, abs_diff(res.frame(m).col(0), want));
    const double span = res.report.find("frame.span")->worst_residual;
    const double bracket = res.report.find("frame.theta_bracket")->worst_residual;
    const double secs = t.seconds();
    return {err <= 1e-6 && span <= 1e-6 && bracket <= 1e-6 && secs < 5.0,
            "frame error " + fmt("%.2e", err) + ", (i) " + fmt("%.2e", span) + ", (ii) " + fmt("%.2e", bracket) +
                " (<= 1e-6), " + fmt("%.2f", secs) + " s (< 5 s)"};
}

// 3. E2 correction against Pi = (-x1, -x1).
Outcome e2_correction() {
    const auto c = cube_chart(3, 1);
    const FoliatedProblem pb(GeneralizedDistribution(c, {section(c, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}),
                                                         section(c, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0})}),
                             section(c, {0.0, x(0), 0.0}, {0.0, 0.0, x(0)}));
    const auto samples = default_samples(*c);
    const auto res = run(pb, samples);
    double pi_err = 0.0, combined = 0.0;
    for (const auto& m : samples) {
        pi_err = std::max(pi_err, abs_diff(res.Pi(m), Eigen::Vector2d(-m[0], -m[0])));
        combined = std::max(combined, res.combined(m).norm());
    }
    const double iii = res.report.find("extra.theta_bracket")->worst_residual;
    return {pi_err <= 1e-6 && combined <= 1e-6 && iii <= 1e-6,
            "Pi error " + fmt("%.2e", pi_err) + ", |combined| " + fmt("%.2e", combined) + ", (iii) " +
                fmt("%.2e", iii) + " (<= 1e-6)"};
}

// 4. Fourth-order convergence of the W defect and the Pi error under step halving.
Outcome convergence() {
    // W: D = {(0, (1 + x1)^2 dx2)} gives B_1 = 2 / (1 + x1) and W_1 = (1 + x1)^2. The exact W is
    // quadratic, so the five-point stencil sees only the RK4 error; x1 = 0.53 keeps the step
    // count constant across the stencil for every h below.
    const auto cw = make_chart({"x1", "x2"}, 1, {{-0.5, 1.0}, {-1.0, 1.0}});
    const GeneralizedDistribution dw(cw, {section(cw, {0.0, 0.0}, {0.0, pow(Expr(1.0) + x(0), 2)})});
    const Point probe{0.53, 0.0};
    std::vector<double> defects;
    for (double h : {0.1, 0.05, 0.025, 0.0125}) {
        FoliatedNumerics num;
        num.ode_step = h;
        const FrameSolver s(FoliatedProblem(dw, std::nullopt, num));
        const PointFunction w_fn = [&s](const Point& p) { return Eigen::VectorXd(s.fundamental_matrix(0, p).reshaped()); };
        const Eigen::VectorXd dwdx = box_derivative(w_fn, *cw, probe, 0, 1e-3);
        const Eigen::MatrixXd expected = s.coefficient_matrix(0, probe).transpose() * s.fundamental_matrix(0, probe);
        defects.push_back((dwdx - Eigen::VectorXd(expected.reshaped())).norm());
    }

    // Pi: E2 with extra (sin x1 d2, e^{x1} dx3) has beta = (cos x1, e^{x1}) and Pi = (-sin x1, 1 - e^{x1}).
    const auto c = cube_chart(3, 1);
    const GeneralizedDistribution d2(c, {section(c, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}),
                                         section(c, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0})});
    const auto extra = section(c, {0.0, sin(x(0)), 0.0}, {0.0, 0.0, exp(x(0))});
    const Point m{0.8, 0.3, -0.2};
    const Eigen::Vector2d exact(-std::sin(0.8), 1.0 - std::exp(0.8));
    std::vector<double> pi_err;
    for (double q : {0.2, 0.1, 0.05, 0.025}) {
        FoliatedNumerics num;
        num.quad_step = q;
        const FrameSolver s(FoliatedProblem(d2, extra, num));
        pi_err.push_back((s.compute_Pi(m) - exact).norm());
    }

    double worst_ratio = 1e300;
    std::string w_text = "W defect", p_text = "Pi error";
    for (std::size_t i = 0; i + 1 < defects.size(); ++i) {
        const double rw = defects[i] / defects[i + 1];
        const double rp = pi_err[i] / pi_err[i + 1];
        worst_ratio = std::min({worst_ratio, rw, rp});
        w_text += " " + fmt("%.1f", rw);
        p_text += " " + fmt("%.1f", rp);
    }
    return {worst_ratio >= 8.0, w_text + "; " + p_text + " (ratios per halving, >= 8; finest W defect " +
                                    fmt("%.1e", defects.back()) + ", Pi error " + fmt("%.1e", pi_err.back()) + ")"};
}

// Worst |d/dx^l of the tilde block of the frame| / (1 + |tilde block|), l < k.
double leaf_dependence(const FrameSolver& s, const std::vector<Point>& samples) {
    const auto& chart = *s.problem().chart();
    const auto& tr = s.tilde_rows();
    double worst = 0.0;
    for (const auto& m : samples) {
        const PointFunction tilde = [&s, &tr](const Point& p) {
            const Eigen::MatrixXd t = s.frame(p)(tr, Eigen::all);
            return Eigen::VectorXd(t.reshaped());
        };
        const Eigen::VectorXd value = tilde(m);
        for (std::size_t l = 0; l < chart.leaf_count(); ++l) {
            const Eigen::VectorXd d = box_derivative(tilde, chart, m, l, 1e-3 * chart.interval(l).width());
            worst = std::max(worst, d.norm() / (1.0 + value.norm()));
        }
    }
    return worst;
}

// 5. Leaf independence of the transformed tilde block.
Outcome step2_conclusion() {
    const auto c1 = cube_chart(3, 1);
    const FrameSolver e1(FoliatedProblem(
        GeneralizedDistribution(c1, {exp(x(0)) * section(c1, {0.0, 1.0, 0.0}, {0.0, 1.0, 0.0})})));
    const double r1 = leaf_dependence(e1, default_samples(*c1));

    // g1 = e^{x1 + 0.5 x2} (d3, 0), g2 = e^{-0.7 x1 + 0.3 x2} (0, dx3), H = diag(e^{b1.x}, e^{b2.x})
    const auto c2 = cube_chart(3, 2);
    const FrameSolver k2(FoliatedProblem(GeneralizedDistribution(
        c2, {exp(x(0) + Expr(0.5) * x(1)) * section(c2, {0.0, 0.0, 1.0}, {0.0, 0.0, 0.0}),
             exp(Expr(-0.7) * x(0) + Expr(0.3) * x(1)) * section(c2, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0})})));
    const auto samples2 = default_samples(*c2);
    const double r2 = leaf_dependence(k2, samples2);
    double h_err = 0.0;
    for (const auto& m : samples2) {
        Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
        h(0, 0) = std::exp(m[0] + 0.5 * m[1]);
        h(1, 1) = std::exp(-0.7 * m[0] + 0.3 * m[1]);
        h_err = std::max(h_err, (k2.build_H(m) - h).norm() / h.norm());
    }
    return {r1 <= 1e-5 && r2 <= 1e-5 && h_err <= 1e-6,
            "E1 " + fmt("%.2e", r1) + ", k=2 diagonal " + fmt("%.2e", r2) + " (<= 1e-5 scale), H oracle rel. error " +
                fmt("%.2e", h_err)};
}

// Worst |L_{d1} gamma| for the form part of every frame column, by finite differences.
double lie_of_forms(const InvariantFrameResult& res, const Chart& chart, const std::vector<Point>& samples) {
    const auto n = static_cast<Eigen::Index>(chart.dim());
    double worst = 0.0;
    for (const auto& m : samples) {
        const PointFunction forms = [&res, n](const Point& p) {
            const Eigen::MatrixXd f = res.frame(p);
            return Eigen::VectorXd(f.bottomRows(n).reshaped());
        };
        worst = std::max(worst, box_derivative(forms, chart, m, 0, 1e-3 * chart.interval(0).width()).norm());
    }
    return worst;
}

// 6. Invariant spanning forms of the annihilator of V.
Outcome annihilator_pipeline() {
    const auto c = make_chart({"x1", "x2"}, 1, {{-1, 1}, {-1, 1}});
    const InfinitesimalAction shift(c, {VectorField::coordinate(c, 0)});
    const auto s1 = default_samples(*c);
    const auto t = invariant_annihilator_generators(shift, {OneForm(c, {0.0, exp(x(0))})}, s1);
    const double lt = lie_of_forms(t, *c, s1);

    const auto p = make_chart({"theta", "r"}, 1, {{-1.5, 1.5}, {0.5, 2.0}});
    const InfinitesimalAction rot(p, {VectorField::coordinate(p, 0)});
    const auto s2 = default_samples(*p);
    const auto r = invariant_annihilator_generators(rot, {OneForm(p, {0.0, (Expr(2.0) + sin(x(0))) * x(1)})}, s2);
    const double lr = lie_of_forms(r, *p, s2);
    return {lt <= 1e-6 && lr <= 1e-6 && t.report.passed() && r.report.passed(),
            "translation |L gamma| " + fmt("%.2e", lt) + ", polar rotation " + fmt("%.2e", lr) + " (<= 1e-6)"};
}

// 7. Lagrangian certification of random Poisson graphs, closedness, rejection.
Outcome dirac_suite() {
    UniformSource rng(7);
    double worst = 0.0;
    bool all = true;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial) % 3;
        const auto c = cube_chart(n);
        std::vector<std::vector<Expr>> pi(n, std::vector<Expr>(n, Expr(0.0)));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                pi[i][j] = random_expr(rng, n, 3);
                pi[j][i] = Expr(0.0) - pi[i][j];
            }
        const auto rep = certify_lagrangian(graph_of_poisson(PoissonBivector(c, pi)),
                                            default_samples(*c, 16, static_cast<std::uint64_t>(trial)), 1e-9);
        all = all && rep.passed();
        worst = std::max(worst, rep.find("dirac.isotropy")->worst_residual);
    }

    const auto c4 = cube_chart(4);
    std::vector<std::vector<Expr>> omega(4, std::vector<Expr>(4, Expr(0.0)));
    omega[0][2] = 1.0;
    omega[2][0] = -1.0;
    omega[1][3] = 2.0;
    omega[3][1] = -2.0;
    const bool closed = is_closed(graph_of_poisson(PoissonBivector(c4, omega)), default_samples(*c4)).passed;

    const auto c2 = cube_chart(2);
    bool rejected = false;
    try {
        make_dirac_structure(c2, {section(c2, {1.0, 0.0}, {1.0, 0.0}), section(c2, {0.0, 1.0}, {0.0, x(0)})},
                             default_samples(*c2));
    } catch (const InvalidInput&) {
        rejected = true;
    }
    return {all && worst <= 1e-9 && closed && rejected,
            "50 random pi certified (max isotropy " + fmt("%.2e", worst) + " <= 1e-9), constant pi closed: " +
                (closed ? "yes" : "no") + ", non-isotropic set rejected: " + (rejected ? "yes" : "no")};
}

// 8. Translation reduction on R2 with pi^{12} = 1 and q = x2.
Outcome reduction() {
    const auto c = make_chart({"x1", "x2"}, 1, {{-1, 1}, {-1, 1}});
    const auto d = graph_of_poisson(PoissonBivector(c, {{Expr(0.0), Expr(1.0)}, {Expr(-1.0), Expr(0.0)}}));
    const InfinitesimalAction shift(c, {VectorField::coordinate(c, 0)}, {{{0.0}}});
    const QuotientMap q(c, make_chart({"y"}, 0, {{-1, 1}}), {x(1)});
    const auto samples = default_samples(*c);
    const auto frame = descending_generators(d, shift, GeneralizedDistribution(c, {exp(x(0)) * section(c, {1.0, 0.0}, {0.0, 1.0})}),
                                             samples);
    PushforwardOptions opt;
    opt.fiber_pairs = 10;
    const auto red = pushforward_check(d, shift, q, frame, samples, opt);
    const auto* rank = red.find("reduced.rank");
    const double iso = red.find("reduced.isotropy")->worst_residual;
    const auto* fiber = red.find("reduced.fiber_consistency");
    const bool closed = red.find("reduced.closed")->passed;
    const bool rank1 = rank->passed && rank->detail == "rank 1";
    return {frame.report.passed() && red.passed() && rank1 && iso <= 1e-6 && fiber->worst_residual <= 1e-6 && closed,
            "reduced " + rank->detail + ", isotropy " + fmt("%.2e", iso) + ", fiber consistency " +
                fmt("%.2e", fiber->worst_residual) + " over 10 pairs (<= 1e-6), closed: " + (closed ? "yes" : "no")};
}

// 9. Step 1 abort and the rank-jump witnesses, through the library and the CLI.
Outcome negative_controls() {
    const auto c = cube_chart(3, 1);
    const FoliatedProblem bad(GeneralizedDistribution(c, {section(c, {0.0, 0.0, x(0)}, {0.0, 1.0, 0.0})}));
    std::string stage = "none";
    try {
        run(bad, default_samples(*c));
    } catch (const HypothesisViolated& e) {
        stage = e.stage();
    }

    const auto cj = make_chart({"x1", "x2"}, 1, {{-1, 1}, {-1, 1}});
    const DiracStructure jump(cj, {section(cj, {1.0, 0.0}, {0.0, x(1)}), section(cj, {0.0, 1.0}, {Expr(0.0) - x(1), 0.0})});
    const auto scan = constant_rank_scan(jump, InfinitesimalAction(cj, {VectorField::coordinate(cj, 0)}),
                                         default_samples(*cj));
    const bool witnesses = !scan.passed && scan.witnesses.size() == 2;

    const int code_ass1 = cli({"invariant-generators", problem("ass1_violation")});
    const int code_jump = cli({"dirac-reduce", problem("rank_jump")});
    return {stage == "Step 1" && witnesses && code_ass1 == kExitVerificationFailure &&
                code_jump == kExitVerificationFailure,
            "HypothesisViolated in " + stage + " (exit " + std::to_string(code_ass1) + "), constant-rank scan " +
                (witnesses ? "failed with 2 witnesses" : "did not produce 2 witnesses") + " (exit " +
                std::to_string(code_jump) + ")"};
}

// 10. Byte-identical dirac-reduce reports.
Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "invgen_acceptance";
    std::filesystem::create_directories(dir);
    bool same = true;
    std::size_t bytes = 0;
    for (const char* name : {"translation", "rotation"}) {
        std::string first;
        for (int rep = 0; rep < 3; ++rep) {
            const auto path = (dir / (std::string(name) + std::to_string(rep) + ".jsonl")).string();
            std::filesystem::remove(path);
            const int code = cli({"dirac-reduce", problem(name), "--seed", "42", "--output", path});
            const std::string text = slurp(path);
            same = same && code == kExitPass && !text.empty();
            if (rep == 0) first = text;
            else same = same && text == first;
        }
        bytes += first.size();
    }
    return {same, "3 runs each of translation and rotation with seed 42: " +
                      std::string(same ? "byte-identical" : "differ") + " (" + std::to_string(bytes) + " bytes)"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {"bracket algebra", bracket_algebra},
        {"E1 end to end", e1_end_to_end},
        {"E2 correction", e2_correction},
        {"ODE/quadrature convergence", convergence},
        {"leaf independence", step2_conclusion},
        {"invariant annihilator forms", annihilator_pipeline},
        {"Dirac suite", dirac_suite},
        {"reduction end to end", reduction},
        {"negative controls", negative_controls},
        {"determinism", determinism},
    };
    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("unexpected exception: ") + e.what()};
        }
        if (!o.passed) ++failed;
        std::printf("%s  %2d  %-28s %s\n", o.passed ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
