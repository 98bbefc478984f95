#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "invgen/symexpr.hpp"

namespace invgen {

/// Vector field sum_j X^j d/dx^j on a chart.
class VectorField {
public:
    VectorField(ChartPtr chart, std::vector<Expr> coeffs);
    /// The zero field.
    explicit VectorField(ChartPtr chart);
    /// Coordinate field d/dx^index.
    static VectorField coordinate(ChartPtr chart, std::size_t index);

    const ChartPtr& chart() const { return chart_; }
    std::size_t dim() const { return coeffs_.size(); }
    const std::vector<Expr>& coeffs() const { return coeffs_; }
    const Expr& operator[](std::size_t j) const { return coeffs_.at(j); }

    Eigen::VectorXd eval(std::span<const double> point) const;

private:
    ChartPtr chart_;
    std::vector<Expr> coeffs_;
};

/// One-form sum_j a_j dx^j on a chart.
class OneForm {
public:
    OneForm(ChartPtr chart, std::vector<Expr> coeffs);
    explicit OneForm(ChartPtr chart);
    static OneForm coordinate(ChartPtr chart, std::size_t index);
    /// Exterior derivative of a function.
    static OneForm differential(ChartPtr chart, const Expr& f);

    const ChartPtr& chart() const { return chart_; }
    std::size_t dim() const { return coeffs_.size(); }
    const std::vector<Expr>& coeffs() const { return coeffs_; }
    const Expr& operator[](std::size_t j) const { return coeffs_.at(j); }

    Eigen::VectorXd eval(std::span<const double> point) const;

private:
    ChartPtr chart_;
    std::vector<Expr> coeffs_;
};

/// A section (X, alpha) of TM + T*M.
class PontryaginSection {
public:
    PontryaginSection(VectorField vf, OneForm form);
    explicit PontryaginSection(ChartPtr chart);

    const ChartPtr& chart() const { return vf_.chart(); }
    std::size_t dim() const { return vf_.dim(); }
    const VectorField& vf() const { return vf_; }
    const OneForm& form() const { return form_; }

    /// Stacked value [X^1..X^n, a_1..a_n] at a point.
    Eigen::VectorXd eval(std::span<const double> point) const;

private:
    VectorField vf_;
    OneForm form_;
};

// Linear structure (literal-real and function coefficients).
VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator*(const Expr& f, const VectorField& a);
OneForm operator+(const OneForm& a, const OneForm& b);
OneForm operator-(const OneForm& a, const OneForm& b);
OneForm operator*(const Expr& f, const OneForm& a);
PontryaginSection operator+(const PontryaginSection& a, const PontryaginSection& b);
PontryaginSection operator-(const PontryaginSection& a, const PontryaginSection& b);
PontryaginSection operator*(const Expr& f, const PontryaginSection& a);

/// alpha(X).
Expr contract(const OneForm& alpha, const VectorField& x);

/// X(f) = sum_i X^i d_i f.
Expr apply(const VectorField& x, const Expr& f);

/// <(X, a), (Y, b)> = b(X) + a(Y).
Expr pairing(const PontryaginSection& a, const PontryaginSection& b);

/// [X, Y]^j = sum_i (X^i d_i Y^j - Y^i d_i X^j).
VectorField lie_bracket(const VectorField& x, const VectorField& y);

/// (L_X a)_j = sum_i (X^i d_i a_j + a_i d_j X^i).
OneForm lie_derivative_form(const VectorField& x, const OneForm& alpha);

/// (i_Y d a)_j = sum_i Y^i (d_i a_j - d_j a_i); the two-form is never built.
OneForm exterior_interior(const VectorField& y, const OneForm& alpha);

/// Skew-symmetric bracket
///   ([X,Y], L_X b - L_Y a + 1/2 d(a(Y) - b(X))).
PontryaginSection skew_bracket(const PontryaginSection& a, const PontryaginSection& b);

/// Courant bracket ([X,Y], L_X b - i_Y d a).
PontryaginSection courant_bracket(const PontryaginSection& a, const PontryaginSection& b);

/// Numeric pairing of stacked 2n-vectors.
double pairing_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Pairing Gram operator J = [[0, I], [I, 0]] on stacked 2n-vectors.
Eigen::MatrixXd pairing_matrix(std::size_t n);

}  // namespace invgen
