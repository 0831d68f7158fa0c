#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "freeconv/common.hpp"

namespace freeconv {

/**
 * Tiny complex expression language in one variable `z`.
 *
 *   expr    := term (('+'|'-') term)*
 *   term    := unary (('*'|'/') unary)*
 *   unary   := ('+'|'-') unary | power
 *   power   := primary ('^' unary)?          exponent must be an integer constant
 *   primary := number ['i'] | 'i' | 'z' | func '(' expr ')' | '(' expr ')'
 *   func    := sqrt_principal | sqrt_upper
 *
 * On their own cuts the two square roots return the boundary value seen from
 * the upper half-plane, so expressions can be evaluated on the real axis.
 */
class Expr {
public:
    enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow, SqrtPrincipal, SqrtUpper };

    static std::shared_ptr<const Expr> constant(cplx c);
    static std::shared_ptr<const Expr> variable();
    static std::shared_ptr<const Expr> unary(Kind k, std::shared_ptr<const Expr> a);
    static std::shared_ptr<const Expr> binary(Kind k, std::shared_ptr<const Expr> a,
                                              std::shared_ptr<const Expr> b);
    static std::shared_ptr<const Expr> power(std::shared_ptr<const Expr> base, int exponent);

    Kind kind() const { return kind_; }

    /// Throws PoleError on division by zero.
    cplx evaluate(cplx z) const;

    /// Canonical text; parse(to_string()) evaluates identically.
    std::string to_string() const;

private:
    Kind kind_ = Kind::Constant;
    cplx value_{};
    int exponent_ = 0;
    std::shared_ptr<const Expr> a_, b_;
};

using ExprPtr = std::shared_ptr<const Expr>;

/// Throws ParseError with the (1-based) line and column of the offending token.
ExprPtr parse_expression(std::string_view text);

}  // namespace freeconv
