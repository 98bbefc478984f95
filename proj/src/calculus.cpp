#include "invgen/calculus.hpp"

#include "invgen/errors.hpp"

namespace invgen {

namespace {

void require_same(const ChartPtr& a, const ChartPtr& b) {
    if (!same_chart(a, b)) throw ChartMismatch();
}

void require_dim(const ChartPtr& chart, std::size_t size, const char* what) {
    if (!chart) throw InvalidInput(std::string(what) + " needs a chart");
    if (chart->dim() != size)
        throw InvalidInput(std::string(what) + " has " + std::to_string(size) + " coefficients on a " +
                           std::to_string(chart->dim()) + "-dimensional chart");
}

Eigen::VectorXd eval_all(const std::vector<Expr>& coeffs, std::span<const double> p) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(coeffs.size()));
    for (std::size_t j = 0; j < coeffs.size(); ++j) v[static_cast<Eigen::Index>(j)] = coeffs[j].eval(p);
    return v;
}

}  // namespace

VectorField::VectorField(ChartPtr chart, std::vector<Expr> coeffs) : chart_(std::move(chart)), coeffs_(std::move(coeffs)) {
    require_dim(chart_, coeffs_.size(), "vector field");
}

VectorField::VectorField(ChartPtr chart) : chart_(std::move(chart)) {
    require_dim(chart_, chart_ ? chart_->dim() : 0, "vector field");
    coeffs_.assign(chart_->dim(), Expr());
}

VectorField VectorField::coordinate(ChartPtr chart, std::size_t index) {
    VectorField v(chart);
    v.coeffs_.at(index) = Expr::constant(1.0);
    return v;
}

Eigen::VectorXd VectorField::eval(std::span<const double> p) const { return eval_all(coeffs_, p); }

OneForm::OneForm(ChartPtr chart, std::vector<Expr> coeffs) : chart_(std::move(chart)), coeffs_(std::move(coeffs)) {
    require_dim(chart_, coeffs_.size(), "one-form");
}

OneForm::OneForm(ChartPtr chart) : chart_(std::move(chart)) {
    require_dim(chart_, chart_ ? chart_->dim() : 0, "one-form");
    coeffs_.assign(chart_->dim(), Expr());
}

OneForm OneForm::coordinate(ChartPtr chart, std::size_t index) {
    OneForm a(chart);
    a.coeffs_.at(index) = Expr::constant(1.0);
    return a;
}

OneForm OneForm::differential(ChartPtr chart, const Expr& f) {
    std::vector<Expr> c;
    c.reserve(chart->dim());
    for (std::size_t j = 0; j < chart->dim(); ++j) c.push_back(diff(f, j));
    return OneForm(std::move(chart), std::move(c));
}

Eigen::VectorXd OneForm::eval(std::span<const double> p) const { return eval_all(coeffs_, p); }

PontryaginSection::PontryaginSection(VectorField vf, OneForm form) : vf_(std::move(vf)), form_(std::move(form)) {
    require_same(vf_.chart(), form_.chart());
}

PontryaginSection::PontryaginSection(ChartPtr chart) : vf_(chart), form_(chart) {}

Eigen::VectorXd PontryaginSection::eval(std::span<const double> p) const {
    const auto n = static_cast<Eigen::Index>(dim());
    Eigen::VectorXd v(2 * n);
    v.head(n) = vf_.eval(p);
    v.tail(n) = form_.eval(p);
    return v;
}

// ---------------------------------------------------------------------------
// Linear structure

namespace {

template <class F>
std::vector<Expr> zip(const std::vector<Expr>& a, const std::vector<Expr>& b, F f) {
    std::vector<Expr> out;
    out.reserve(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out.push_back(f(a[j], b[j]));
    return out;
}

std::vector<Expr> scale(const Expr& s, const std::vector<Expr>& a) {
    std::vector<Expr> out;
    out.reserve(a.size());
    for (const auto& e : a) out.push_back(s * e);
    return out;
}

}  // namespace

VectorField operator+(const VectorField& a, const VectorField& b) {
    require_same(a.chart(), b.chart());
    return {a.chart(), zip(a.coeffs(), b.coeffs(), [](const Expr& u, const Expr& v) { return u + v; })};
}

VectorField operator-(const VectorField& a, const VectorField& b) {
    require_same(a.chart(), b.chart());
    return {a.chart(), zip(a.coeffs(), b.coeffs(), [](const Expr& u, const Expr& v) { return u - v; })};
}

VectorField operator*(const Expr& f, const VectorField& a) { return {a.chart(), scale(f, a.coeffs())}; }

OneForm operator+(const OneForm& a, const OneForm& b) {
    require_same(a.chart(), b.chart());
    return {a.chart(), zip(a.coeffs(), b.coeffs(), [](const Expr& u, const Expr& v) { return u + v; })};
}

OneForm operator-(const OneForm& a, const OneForm& b) {
    require_same(a.chart(), b.chart());
    return {a.chart(), zip(a.coeffs(), b.coeffs(), [](const Expr& u, const Expr& v) { return u - v; })};
}

OneForm operator*(const Expr& f, const OneForm& a) { return {a.chart(), scale(f, a.coeffs())}; }

PontryaginSection operator+(const PontryaginSection& a, const PontryaginSection& b) {
    return {a.vf() + b.vf(), a.form() + b.form()};
}

PontryaginSection operator-(const PontryaginSection& a, const PontryaginSection& b) {
    return {a.vf() - b.vf(), a.form() - b.form()};
}

PontryaginSection operator*(const Expr& f, const PontryaginSection& a) { return {f * a.vf(), f * a.form()}; }

// ---------------------------------------------------------------------------
// Brackets

Expr contract(const OneForm& alpha, const VectorField& x) {
    require_same(alpha.chart(), x.chart());
    Expr sum;
    for (std::size_t j = 0; j < x.dim(); ++j) sum = sum + alpha[j] * x[j];
    return sum;
}

Expr apply(const VectorField& x, const Expr& f) {
    Expr sum;
    for (std::size_t i = 0; i < x.dim(); ++i) sum = sum + x[i] * diff(f, i);
    return sum;
}

Expr pairing(const PontryaginSection& a, const PontryaginSection& b) {
    require_same(a.chart(), b.chart());
    return contract(b.form(), a.vf()) + contract(a.form(), b.vf());
}

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
    require_same(x.chart(), y.chart());
    std::vector<Expr> c;
    c.reserve(x.dim());
    for (std::size_t j = 0; j < x.dim(); ++j) c.push_back(apply(x, y[j]) - apply(y, x[j]));
    return {x.chart(), std::move(c)};
}

OneForm lie_derivative_form(const VectorField& x, const OneForm& alpha) {
    require_same(x.chart(), alpha.chart());
    const std::size_t n = x.dim();
    std::vector<Expr> c;
    c.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        Expr s = apply(x, alpha[j]);
        for (std::size_t i = 0; i < n; ++i) s = s + alpha[i] * diff(x[i], j);
        c.push_back(s);
    }
    return {x.chart(), std::move(c)};
}

OneForm exterior_interior(const VectorField& y, const OneForm& alpha) {
    require_same(y.chart(), alpha.chart());
    const std::size_t n = y.dim();
    std::vector<Expr> c;
    c.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        Expr s;
        for (std::size_t i = 0; i < n; ++i) s = s + y[i] * (diff(alpha[j], i) - diff(alpha[i], j));
        c.push_back(s);
    }
    return {y.chart(), std::move(c)};
}

PontryaginSection skew_bracket(const PontryaginSection& a, const PontryaginSection& b) {
    require_same(a.chart(), b.chart());
    const auto& chart = a.chart();
    const Expr half_gap = Expr::constant(0.5) * (contract(a.form(), b.vf()) - contract(b.form(), a.vf()));
    OneForm form = lie_derivative_form(a.vf(), b.form()) - lie_derivative_form(b.vf(), a.form()) +
                   OneForm::differential(chart, half_gap);
    return {lie_bracket(a.vf(), b.vf()), std::move(form)};
}

PontryaginSection courant_bracket(const PontryaginSection& a, const PontryaginSection& b) {
    require_same(a.chart(), b.chart());
    return {lie_bracket(a.vf(), b.vf()), lie_derivative_form(a.vf(), b.form()) - exterior_interior(b.vf(), a.form())};
}

double pairing_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index n = a.size() / 2;
    return b.tail(n).dot(a.head(n)) + a.tail(n).dot(b.head(n));
}

Eigen::MatrixXd pairing_matrix(std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    j.topRightCorner(m, m).setIdentity();
    j.bottomLeftCorner(m, m).setIdentity();
    return j;
}

}  // namespace invgen
