#include "freeconv/expression.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

#include "freeconv/branch.hpp"

namespace freeconv {

ExprPtr Expr::constant(cplx c) {
    auto e = std::make_shared<Expr>();
    e->kind_ = Kind::Constant;
    e->value_ = c;
    return e;
}

ExprPtr Expr::variable() {
    auto e = std::make_shared<Expr>();
    e->kind_ = Kind::Variable;
    return e;
}

ExprPtr Expr::unary(Kind k, ExprPtr a) {
    if (k == Kind::Neg && a->kind_ == Kind::Constant) return constant(-a->value_);
    auto e = std::make_shared<Expr>();
    e->kind_ = k;
    e->a_ = std::move(a);
    return e;
}

ExprPtr Expr::binary(Kind k, ExprPtr a, ExprPtr b) {
    // fold constant operands so that printed constants parse back to a single node
    if (a->kind_ == Kind::Constant && b->kind_ == Kind::Constant) {
        const cplx x = a->value_, y = b->value_;
        switch (k) {
            case Kind::Add: return constant(x + y);
            case Kind::Sub: return constant(x - y);
            case Kind::Mul: return constant(x * y);
            case Kind::Div:
                if (y != 0.0) return constant(x / y);
                break;
            default: break;
        }
    }
    auto e = std::make_shared<Expr>();
    e->kind_ = k;
    e->a_ = std::move(a);
    e->b_ = std::move(b);
    return e;
}

ExprPtr Expr::power(ExprPtr base, int exponent) {
    auto e = std::make_shared<Expr>();
    e->kind_ = Kind::Pow;
    e->a_ = std::move(base);
    e->exponent_ = exponent;
    return e;
}

namespace {

cplx int_pow(cplx b, int n) {
    if (n < 0) {
        if (b == cplx(0.0)) throw PoleError("zero raised to a negative power");
        return 1.0 / int_pow(b, -n);
    }
    cplx r = 1.0;
    while (n > 0) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
    }
    return r;
}

}  // namespace

cplx Expr::evaluate(cplx z) const {
    switch (kind_) {
        case Kind::Constant: return value_;
        case Kind::Variable: return z;
        case Kind::Add: return a_->evaluate(z) + b_->evaluate(z);
        case Kind::Sub: return a_->evaluate(z) - b_->evaluate(z);
        case Kind::Mul: return a_->evaluate(z) * b_->evaluate(z);
        case Kind::Div: {
            const cplx d = b_->evaluate(z);
            if (d == cplx(0.0)) throw PoleError("division by zero in expression");
            return a_->evaluate(z) / d;
        }
        case Kind::Neg: return -a_->evaluate(z);
        case Kind::Pow: return int_pow(a_->evaluate(z), exponent_);
        case Kind::SqrtPrincipal: return sqrt_principal_closure(a_->evaluate(z));
        case Kind::SqrtUpper: return sqrt_upper_closure(a_->evaluate(z));
    }
    return {};
}

namespace {

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_constant(cplx c) {
    if (c.imag() == 0.0) return format_real(c.real());
    if (c.real() == 0.0) return "(" + format_real(c.imag()) + "*i)";
    return "(" + format_real(c.real()) + "+" + format_real(c.imag()) + "*i)";
}

}  // namespace

std::string Expr::to_string() const {
    switch (kind_) {
        case Kind::Constant: {
            std::string s = format_constant(value_);
            return s[0] == '-' ? "(" + s + ")" : s;
        }
        case Kind::Variable: return "z";
        case Kind::Add: return "(" + a_->to_string() + "+" + b_->to_string() + ")";
        case Kind::Sub: return "(" + a_->to_string() + "-" + b_->to_string() + ")";
        case Kind::Mul: return "(" + a_->to_string() + "*" + b_->to_string() + ")";
        case Kind::Div: return "(" + a_->to_string() + "/" + b_->to_string() + ")";
        case Kind::Neg: return "(-" + a_->to_string() + ")";
        case Kind::Pow: return "(" + a_->to_string() + "^" + std::to_string(exponent_) + ")";
        case Kind::SqrtPrincipal: return "sqrt_principal(" + a_->to_string() + ")";
        case Kind::SqrtUpper: return "sqrt_upper(" + a_->to_string() + ")";
    }
    return {};
}

namespace {

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : s_(text) {}

    ExprPtr parse() {
        ExprPtr e = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k < pos_ && k < s_.size(); ++k) {
            if (s_[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(msg, line, col);
    }

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

    ExprPtr expr() {
        ExprPtr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = Expr::binary(Expr::Kind::Add, lhs, term());
            } else if (accept('-')) {
                lhs = Expr::binary(Expr::Kind::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr term() {
        ExprPtr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = Expr::binary(Expr::Kind::Mul, lhs, unary());
            } else if (accept('/')) {
                lhs = Expr::binary(Expr::Kind::Div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr unary() {
        if (accept('-')) return Expr::unary(Expr::Kind::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    ExprPtr power() {
        ExprPtr base = primary();
        if (!accept('^')) return base;
        const std::size_t at = pos_;
        ExprPtr ex = unary();
        cplx v;
        try {
            v = ex->evaluate(0.0);
            // a constant exponent evaluates identically everywhere
            if (ex->evaluate(cplx(0.37, 1.3)) != v) throw DomainError("");
        } catch (const Error&) {
            pos_ = at;
            fail("exponent must be an integer constant");
        }
        if (v.imag() != 0.0 || v.real() != std::round(v.real()) || std::abs(v.real()) > 64) {
            pos_ = at;
            fail("exponent must be an integer constant");
        }
        return Expr::power(base, static_cast<int>(v.real()));
    }

    ExprPtr primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string_view id = s_.substr(start, pos_ - start);
            if (id == "z") return Expr::variable();
            if (id == "i") return Expr::constant(kI);
            if (id == "sqrt_principal" || id == "sqrt_upper") {
                if (!accept('(')) fail("expected '(' after " + std::string(id));
                ExprPtr arg = expr();
                if (!accept(')')) fail("expected ')'");
                return Expr::unary(
                    id == "sqrt_upper" ? Expr::Kind::SqrtUpper : Expr::Kind::SqrtPrincipal, arg);
            }
            pos_ = start;
            fail("unknown identifier '" + std::string(id) + "'");
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    ExprPtr number() {
        const char* begin = s_.data() + pos_;
        std::string buf(begin, s_.size() - pos_);
        char* end = nullptr;
        const double v = std::strtod(buf.c_str(), &end);
        if (end == buf.c_str()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - buf.c_str());
        // "3i" is an imaginary literal, but "3in" would be an identifier clash
        if (pos_ < s_.size() && s_[pos_] == 'i' &&
            (pos_ + 1 >= s_.size() ||
             !(std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])) || s_[pos_ + 1] == '_'))) {
            ++pos_;
            return Expr::constant(cplx(0.0, v));
        }
        return Expr::constant(v);
    }
};

}  // namespace

ExprPtr parse_expression(std::string_view text) { return ExprParser(text).parse(); }

}  // namespace freeconv
