#include "invgen/symexpr.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "invgen/errors.hpp"

namespace invgen {

// ---------------------------------------------------------------------------
// Chart

namespace {

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

bool is_function_name(std::string_view s) { return s == "sin" || s == "cos" || s == "exp"; }

}  // namespace

Chart::Chart(std::vector<std::string> names, std::size_t leaf_count, std::vector<Interval> box)
    : names_(std::move(names)), leaf_count_(leaf_count), box_(std::move(box)) {
    if (names_.empty()) throw InvalidInput("chart needs at least one coordinate");
    if (box_.size() != names_.size())
        throw InvalidInput("chart box has " + std::to_string(box_.size()) + " intervals for " +
                           std::to_string(names_.size()) + " coordinates");
    if (leaf_count_ > names_.size()) throw InvalidInput("leaf count exceeds chart dimension");
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (!is_identifier(n)) throw InvalidInput("invalid coordinate name '" + n + "'");
        if (is_function_name(n)) throw InvalidInput("coordinate name '" + n + "' is reserved");
        if (!seen.insert(n).second) throw InvalidInput("duplicate coordinate name '" + n + "'");
    }
    for (std::size_t i = 0; i < box_.size(); ++i) {
        const auto& iv = box_[i];
        if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            throw InvalidInput("empty, degenerate or non-finite interval for coordinate '" + names_[i] + "'");
        if (i < leaf_count_ && !iv.contains(0.0))
            throw InvalidInput("leaf coordinate '" + names_[i] + "' interval must contain 0");
    }
}

std::optional<std::size_t> Chart::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    return std::nullopt;
}

bool Chart::contains(std::span<const double> point) const {
    if (point.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (!box_[i].contains(point[i])) return false;
    return true;
}

bool Chart::operator==(const Chart& other) const {
    if (names_ != other.names_ || leaf_count_ != other.leaf_count_) return false;
    for (std::size_t i = 0; i < box_.size(); ++i)
        if (box_[i].lo != other.box_[i].lo || box_[i].hi != other.box_[i].hi) return false;
    return true;
}

ChartPtr make_chart(std::vector<std::string> names, std::size_t leaf_count, std::vector<Interval> box) {
    return std::make_shared<const Chart>(std::move(names), leaf_count, std::move(box));
}

bool same_chart(const ChartPtr& a, const ChartPtr& b) {
    if (a == b) return true;
    return a && b && *a == *b;
}

// ---------------------------------------------------------------------------
// Expression nodes

struct Expr::Node {
    Op op;
    double value = 0.0;
    std::size_t index = 0;
    int exponent = 0;
    Expr a;
    Expr b;
};

namespace {

Expr make(Expr::Op op, double value, std::size_t index, int exponent, Expr a = Expr(std::shared_ptr<const Expr::Node>()),
          Expr b = Expr(std::shared_ptr<const Expr::Node>())) {
    // Aggregate init so the child members are never default-constructed
    // (the default Expr refers back to the shared zero literal).
    return Expr(std::make_shared<const Expr::Node>(Expr::Node{op, value, index, exponent, std::move(a), std::move(b)}));
}

const Expr& zero_literal() {
    static const Expr z = make(Expr::Op::Const, 0.0, 0, 0);
    return z;
}

double checked_div(double num, double den) {
    if (den == 0.0) throw EvalError("division by zero");
    return num / den;
}

double int_pow(double base, int n) {
    if (n < 0) {
        if (base == 0.0) throw EvalError("division by zero (zero to a negative power)");
        return 1.0 / int_pow(base, -n);
    }
    double result = 1.0;
    double b = base;
    unsigned k = static_cast<unsigned>(n);
    while (k) {
        if (k & 1u) result *= b;
        b *= b;
        k >>= 1u;
    }
    return result;
}

}  // namespace

Expr::Expr() : node_(zero_literal().node_) {}
Expr::Expr(double value) : Expr(constant(value)) {}

Expr Expr::constant(double value) {
    if (value == 0.0 && !std::signbit(value)) return Expr();
    return make(Op::Const, value, 0, 0);
}

Expr Expr::variable(std::size_t index) { return make(Op::Var, 0.0, index, 0); }

Expr::Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
std::size_t Expr::index() const { return node_->index; }
int Expr::exponent() const { return node_->exponent; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

double Expr::eval(std::span<const double> p) const {
    const Node& n = *node_;
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var:
            if (n.index >= p.size()) throw EvalError("coordinate index out of range");
            return p[n.index];
        case Op::Neg: return -n.a.eval(p);
        case Op::Add: return n.a.eval(p) + n.b.eval(p);
        case Op::Sub: return n.a.eval(p) - n.b.eval(p);
        case Op::Mul: return n.a.eval(p) * n.b.eval(p);
        case Op::Div: {
            const double num = n.a.eval(p);
            return checked_div(num, n.b.eval(p));
        }
        case Op::Pow: return int_pow(n.a.eval(p), n.exponent);
        case Op::Sin: return std::sin(n.a.eval(p));
        case Op::Cos: return std::cos(n.a.eval(p));
        case Op::Exp: return std::exp(n.a.eval(p));
    }
    return 0.0;
}

std::size_t Expr::size() const {
    const Node& n = *node_;
    switch (n.op) {
        case Op::Const:
        case Op::Var: return 1;
        case Op::Neg:
        case Op::Pow:
        case Op::Sin:
        case Op::Cos:
        case Op::Exp: return 1 + n.a.size();
        default: return 1 + n.a.size() + n.b.size();
    }
}

// ---------------------------------------------------------------------------
// Builders

Expr operator-(const Expr& a) {
    if (a.is_constant()) return Expr::constant(-a.value());
    if (a.op() == Expr::Op::Neg) return a.lhs();
    return make(Expr::Op::Neg, 0.0, 0, 0, a);
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return make(Expr::Op::Add, 0.0, 0, 0, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() - b.value());
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    return make(Expr::Op::Sub, 0.0, 0, 0, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
    if (a.is_zero() || b.is_zero()) return Expr();
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    return make(Expr::Op::Mul, 0.0, 0, 0, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_one()) return a;
    if (a.is_constant() && b.is_constant() && b.value() != 0.0) return Expr::constant(a.value() / b.value());
    if (a.is_zero() && !b.is_zero()) return Expr();
    return make(Expr::Op::Div, 0.0, 0, 0, a, b);
}

Expr pow(const Expr& base, int exponent) {
    if (exponent == 0) return Expr::constant(1.0);
    if (exponent == 1) return base;
    if (base.is_constant() && (base.value() != 0.0 || exponent > 0))
        return Expr::constant(int_pow(base.value(), exponent));
    return make(Expr::Op::Pow, 0.0, 0, exponent, base);
}

Expr sin(const Expr& a) {
    if (a.is_constant()) return Expr::constant(std::sin(a.value()));
    return make(Expr::Op::Sin, 0.0, 0, 0, a);
}

Expr cos(const Expr& a) {
    if (a.is_constant()) return Expr::constant(std::cos(a.value()));
    return make(Expr::Op::Cos, 0.0, 0, 0, a);
}

Expr exp(const Expr& a) {
    if (a.is_constant()) return Expr::constant(std::exp(a.value()));
    return make(Expr::Op::Exp, 0.0, 0, 0, a);
}

// ---------------------------------------------------------------------------
// Differentiation

Expr diff(const Expr& e, std::size_t i) {
    using Op = Expr::Op;
    switch (e.op()) {
        case Op::Const: return Expr();
        case Op::Var: return e.index() == i ? Expr::constant(1.0) : Expr();
        case Op::Neg: return -diff(e.lhs(), i);
        case Op::Add: return diff(e.lhs(), i) + diff(e.rhs(), i);
        case Op::Sub: return diff(e.lhs(), i) - diff(e.rhs(), i);
        case Op::Mul: return diff(e.lhs(), i) * e.rhs() + e.lhs() * diff(e.rhs(), i);
        case Op::Div: {
            const Expr& u = e.lhs();
            const Expr& v = e.rhs();
            return (diff(u, i) * v - u * diff(v, i)) / pow(v, 2);
        }
        case Op::Pow: {
            const int n = e.exponent();
            return Expr::constant(n) * pow(e.lhs(), n - 1) * diff(e.lhs(), i);
        }
        case Op::Sin: return cos(e.lhs()) * diff(e.lhs(), i);
        case Op::Cos: return -sin(e.lhs()) * diff(e.lhs(), i);
        case Op::Exp: return e * diff(e.lhs(), i);
    }
    return Expr();
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(std::string_view text, const Chart& chart) : s_(text), chart_(chart) {}

    Expr parse_all() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != s_.size()) throw ParseError(std::string("unexpected character '") + s_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
        if (s_[pos_] != c) throw ParseError(std::string("expected '") + c + "'", pos_);
        ++pos_;
    }

    Expr parse_expr() {
        Expr e = parse_term();
        for (;;) {
            if (accept('+'))
                e = e + parse_term();
            else if (accept('-'))
                e = e - parse_term();
            else
                return e;
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        for (;;) {
            if (accept('*'))
                e = e * parse_unary();
            else if (accept('/'))
                e = e / parse_unary();
            else
                return e;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (!accept('^')) return base;
        skip_ws();
        const bool paren = accept('(');
        int sign = 1;
        if (accept('-'))
            sign = -1;
        else
            accept('+');
        skip_ws();
        const std::size_t at = pos_;
        const double v = parse_number_literal();
        if (v != std::floor(v) || std::fabs(v) > 1e6) throw ParseError("exponent must be an integer", at);
        if (paren) expect(')');
        return pow(base, sign * static_cast<int>(v));
    }

    double parse_number_literal() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < s_.size() && (s_[look] == '+' || s_[look] == '-')) ++look;
            if (look < s_.size() && std::isdigit(static_cast<unsigned char>(s_[look]))) {
                pos_ = look;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            }
        }
        if (start == pos_) {
            if (pos_ >= s_.size()) throw ParseError("expected a number before end of input", pos_);
            throw ParseError("expected a number", pos_);
        }
        double value = 0.0;
        const auto* first = s_.data() + start;
        const auto* last = s_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
        return value;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Expr::constant(parse_number_literal());
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string_view name = s_.substr(start, pos_ - start);
            if (is_function_name(name)) {
                expect('(');
                Expr arg = parse_expr();
                expect(')');
                if (name == "sin") return sin(arg);
                if (name == "cos") return cos(arg);
                return exp(arg);
            }
            if (auto idx = chart_.index_of(name)) return Expr::variable(*idx);
            throw ParseError("unknown identifier '" + std::string(name) + "'", start);
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string_view s_;
    const Chart& chart_;
    std::size_t pos_ = 0;
};

std::string literal(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (v < 0 || std::signbit(v)) return "(" + s + ")";
    return s;
}

void print(const Expr& e, const std::vector<std::string>& names, std::string& out) {
    using Op = Expr::Op;
    auto binary = [&](const char* sym) {
        out += '(';
        print(e.lhs(), names, out);
        out += sym;
        print(e.rhs(), names, out);
        out += ')';
    };
    auto call = [&](const char* fn) {
        out += fn;
        out += '(';
        print(e.lhs(), names, out);
        out += ')';
    };
    switch (e.op()) {
        case Op::Const: out += literal(e.value()); break;
        case Op::Var: out += names.at(e.index()); break;
        case Op::Neg:
            out += "(-";
            print(e.lhs(), names, out);
            out += ')';
            break;
        case Op::Add: binary(" + "); break;
        case Op::Sub: binary(" - "); break;
        case Op::Mul: binary("*"); break;
        case Op::Div: binary("/"); break;
        case Op::Pow: {
            const bool atomic = e.lhs().op() == Op::Var;
            if (!atomic) out += '(';
            print(e.lhs(), names, out);
            if (!atomic) out += ')';
            out += '^';
            if (e.exponent() < 0)
                out += "(" + std::to_string(e.exponent()) + ")";
            else
                out += std::to_string(e.exponent());
            break;
        }
        case Op::Sin: call("sin"); break;
        case Op::Cos: call("cos"); break;
        case Op::Exp: call("exp"); break;
    }
}

}  // namespace

Expr parse(std::string_view text, const Chart& chart) { return Parser(text, chart).parse_all(); }

std::string to_string(const Expr& e, const std::vector<std::string>& names) {
    std::string out;
    print(e, names, out);
    return out;
}

std::string to_string(const Expr& e, const Chart& chart) { return to_string(e, chart.names()); }

}  // namespace invgen
