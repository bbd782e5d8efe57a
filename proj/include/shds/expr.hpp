#pragma once

// Minimal arithmetic expressions compiled to a stack program.
//
//   expr    := compare
//   compare := sum (('<' | '<=' | '>' | '>=' | '==' | '!=') sum)?
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Variables: x_i, r_i (1-based), tau, eps, v (alias of v_1) and v_i; the
// constant pi and any caller-supplied constants. Functions: sin, cos, tan,
// exp, log, sqrt, abs, sign, min, max, pow, if(c, a, b). Comparisons yield
// 1 or 0.

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shds/core.hpp"

namespace shds {

class ExprError : public std::runtime_error {
public:
    ExprError(const std::string& message, std::size_t line, std::size_t column);

    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Which variables an expression may reference, and their dimensions.
struct ExprScope {
    std::size_t n = 0;  // x_1..x_n
    std::size_t p = 0;  // r_1..r_p
    std::size_t m = 0;  // v_1..v_m
    bool allow_tau = false;
    bool allow_eps = false;
    std::map<std::string, double, std::less<>> constants;
};

struct ExprArgs {
    ConstVecRef x;
    ConstVecRef r;
    ConstVecRef v;
    double tau = 0.0;
    double eps = 0.0;
};

class Expression {
public:
    // `line` and `column_offset` locate the source text for error messages.
    [[nodiscard]] static Expression compile(std::string_view source, const ExprScope& scope, std::size_t line = 1,
                                            std::size_t column_offset = 0);

    [[nodiscard]] double eval(const ExprArgs& args) const;
    [[nodiscard]] const std::string& source() const { return source_; }
    [[nodiscard]] bool uses_tau() const;

    enum class Op : unsigned char {
        Const,
        LoadX,
        LoadR,
        LoadV,
        LoadTau,
        LoadEps,
        Neg,
        Add,
        Sub,
        Mul,
        Div,
        Pow,
        Lt,
        Le,
        Gt,
        Ge,
        Eq,
        Ne,
        Sin,
        Cos,
        Tan,
        Exp,
        Log,
        Sqrt,
        Abs,
        Sign,
        Min,
        Max,
        If,
    };

    struct Instr {
        Op op = Op::Const;
        std::size_t index = 0;
        double value = 0.0;
    };

private:
    std::string source_;
    std::vector<Instr> code_;
    std::size_t max_stack_ = 0;
};

// Evaluates a closed expression (constants only).
[[nodiscard]] double eval_constant(std::string_view source, const std::map<std::string, double, std::less<>>& constants,
                                   std::size_t line = 1, std::size_t column_offset = 0);

}  // namespace shds
