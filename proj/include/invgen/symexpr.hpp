#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace invgen {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Named coordinates on a closed box. The first `leaf_count` coordinates
/// span the leaves of the foliation and their intervals contain 0.
class Chart {
public:
    Chart(std::vector<std::string> names, std::size_t leaf_count, std::vector<Interval> box);

    std::size_t dim() const { return names_.size(); }
    std::size_t leaf_count() const { return leaf_count_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Interval>& box() const { return box_; }
    const Interval& interval(std::size_t i) const { return box_.at(i); }

    std::optional<std::size_t> index_of(std::string_view name) const;
    bool contains(std::span<const double> point) const;

    bool operator==(const Chart& other) const;

private:
    std::vector<std::string> names_;
    std::size_t leaf_count_;
    std::vector<Interval> box_;
};

using ChartPtr = std::shared_ptr<const Chart>;

ChartPtr make_chart(std::vector<std::string> names, std::size_t leaf_count, std::vector<Interval> box);

/// Charts are compared by identity first, then by value.
bool same_chart(const ChartPtr& a, const ChartPtr& b);

/// Immutable expression tree over chart coordinates (referenced by index).
///
/// Builders fold constants and apply the 0/1 identities (x+0, x*1, x*0, x^1,
/// ...); no other simplification is attempted. Trees are shared, so copies
/// are cheap and safe to evaluate from several threads.
class Expr {
public:
    enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp };

    Expr();  // the zero literal
    Expr(double value);  // NOLINT: implicit literal promotion keeps formulas readable

    static Expr constant(double value);
    static Expr variable(std::size_t index);

    Op op() const;
    /// Literal value (Const only).
    double value() const;
    /// Coordinate index (Var only).
    std::size_t index() const;
    /// Integer exponent (Pow only).
    int exponent() const;
    const Expr& lhs() const;
    const Expr& rhs() const;

    bool is_constant() const { return op() == Op::Const; }
    bool is_zero() const { return is_constant() && value() == 0.0; }
    bool is_one() const { return is_constant() && value() == 1.0; }

    /// Throws EvalError on division by zero (including 0 raised to a negative power).
    double eval(std::span<const double> point) const;

    /// Number of nodes, counting shared subtrees once per reference.
    std::size_t size() const;

    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<const Node> node_;
};

Expr operator-(const Expr& a);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& base, int exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);

/// Exact symbolic partial derivative along coordinate `index` (0-based).
Expr diff(const Expr& e, std::size_t index);

/// Parses infix text against the chart's coordinate names.
///
///   expr    := term { ('+' | '-') term }
///   term    := unary { ('*' | '/') unary }
///   unary   := ('-' | '+') unary | power
///   power   := primary [ '^' integer | '^' '(' ['-'|'+'] integer ')' | '^' ['-'|'+'] integer ]
///   primary := number | name | func '(' expr ')' | '(' expr ')'
///   func    := 'sin' | 'cos' | 'exp'
///
/// Throws ParseError with the character offset of the offending token.
Expr parse(std::string_view text, const Chart& chart);

/// Prints a fully parenthesized form that parses back to an identical tree.
std::string to_string(const Expr& e, const std::vector<std::string>& names);
std::string to_string(const Expr& e, const Chart& chart);

}  // namespace invgen
