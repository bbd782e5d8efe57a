#include "shds/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace shds {

ExprError::ExprError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "line " << line << ", column " << column << ": " << message;
          return os.str();
      }()),
      line_(line),
      column_(column) {}

namespace {

using Op = Expression::Op;
using Instr = Expression::Instr;

struct FunctionInfo {
    std::string_view name;
    Op op;
    std::size_t arity;
};

constexpr std::array<FunctionInfo, 12> kFunctions{{
    {"sin", Op::Sin, 1},
    {"cos", Op::Cos, 1},
    {"tan", Op::Tan, 1},
    {"exp", Op::Exp, 1},
    {"log", Op::Log, 1},
    {"sqrt", Op::Sqrt, 1},
    {"abs", Op::Abs, 1},
    {"sign", Op::Sign, 1},
    {"min", Op::Min, 2},
    {"max", Op::Max, 2},
    {"pow", Op::Pow, 2},
    {"if", Op::If, 3},
}};

int stack_effect(Op op) {
    switch (op) {
        case Op::Const:
        case Op::LoadX:
        case Op::LoadR:
        case Op::LoadV:
        case Op::LoadTau:
        case Op::LoadEps:
            return 1;
        case Op::Neg:
        case Op::Sin:
        case Op::Cos:
        case Op::Tan:
        case Op::Exp:
        case Op::Log:
        case Op::Sqrt:
        case Op::Abs:
        case Op::Sign:
            return 0;
        case Op::If:
            return -2;
        default:
            return -1;
    }
}

class Parser {
public:
    Parser(std::string_view src, const ExprScope& scope, std::size_t line, std::size_t col0)
        : src_(src), scope_(scope), line_(line), col0_(col0) {}

    std::vector<Instr> parse() {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail("empty expression");
        }
        compare();
        skip_ws();
        if (pos_ < src_.size()) {
            fail(std::string("unexpected '") + src_[pos_] + "'");
        }
        return std::move(code_);
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
        throw ExprError(msg, line_, col0_ + at + 1);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])) != 0) {
            ++pos_;
        }
    }
    bool accept(std::string_view tok) {
        skip_ws();
        if (src_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }
    void expect(char c) {
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }
    void emit(Op op, std::size_t index = 0, double value = 0.0) { code_.push_back({op, index, value}); }

    void compare() {
        sum();
        struct Cmp {
            std::string_view tok;
            Op op;
        };
        static constexpr std::array<Cmp, 6> kCmps{{
            {"<=", Op::Le}, {">=", Op::Ge}, {"==", Op::Eq}, {"!=", Op::Ne}, {"<", Op::Lt}, {">", Op::Gt},
        }};
        for (const auto& c : kCmps) {
            if (accept(c.tok)) {
                sum();
                emit(c.op);
                return;
            }
        }
    }

    void sum() {
        product();
        for (;;) {
            if (accept("+")) {
                product();
                emit(Op::Add);
            } else if (accept("-")) {
                product();
                emit(Op::Sub);
            } else {
                return;
            }
        }
    }

    void product() {
        unary();
        for (;;) {
            if (accept("*")) {
                unary();
                emit(Op::Mul);
            } else if (accept("/")) {
                unary();
                emit(Op::Div);
            } else {
                return;
            }
        }
    }

    void unary() {
        if (accept("-")) {
            unary();
            emit(Op::Neg);
        } else if (accept("+")) {
            unary();
        } else {
            power();
        }
    }

    void power() {
        primary();
        if (accept("^")) {
            unary();
            emit(Op::Pow);
        }
    }

    void primary() {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail("unexpected end of expression");
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            compare();
            expect(')');
            return;
        }
        if ((std::isdigit(static_cast<unsigned char>(c)) != 0) || c == '.') {
            number();
            return;
        }
        if ((std::isalpha(static_cast<unsigned char>(c)) != 0) || c == '_') {
            name();
            return;
        }
        fail(std::string("unexpected '") + c + "'");
    }

    void number() {
        const std::size_t start = pos_;
        double value = 0.0;
        const char* first = src_.data() + pos_;
        const char* last = src_.data() + src_.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first) {
            fail_at("malformed number", start);
        }
        pos_ += static_cast<std::size_t>(ptr - first);
        emit(Op::Const, 0, value);
    }

    void name() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               ((std::isalnum(static_cast<unsigned char>(src_[pos_])) != 0) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view id = src_.substr(start, pos_ - start);
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            call(id, start);
            return;
        }
        variable(id, start);
    }

    void call(std::string_view id, std::size_t start) {
        const FunctionInfo* info = nullptr;
        for (const auto& f : kFunctions) {
            if (f.name == id) {
                info = &f;
            }
        }
        if (info == nullptr) {
            fail_at("unknown function \"" + std::string(id) + "\"", start);
        }
        expect('(');
        std::size_t argc = 0;
        skip_ws();
        if (!accept(")")) {
            do {
                compare();
                ++argc;
            } while (accept(","));
            expect(')');
        }
        if (argc != info->arity) {
            std::ostringstream os;
            os << id << " takes " << info->arity << " argument(s), got " << argc;
            fail_at(os.str(), start);
        }
        emit(info->op);
    }

    void indexed(std::string_view id, std::size_t start, Op op, std::size_t dim, char letter) {
        std::size_t idx = 0;
        const auto digits = id.substr(2);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
        if (ec != std::errc() || ptr != digits.data() + digits.size()) {
            fail_at("unknown symbol \"" + std::string(id) + "\"", start);
        }
        if (idx < 1 || idx > dim) {
            std::ostringstream os;
            os << "index of \"" << id << "\" out of range: " << letter << " has dimension " << dim;
            fail_at(os.str(), start);
        }
        emit(op, idx - 1);
    }

    void variable(std::string_view id, std::size_t start) {
        if (id.size() > 2 && id[1] == '_') {
            switch (id[0]) {
                case 'x':
                    indexed(id, start, Op::LoadX, scope_.n, 'x');
                    return;
                case 'r':
                    indexed(id, start, Op::LoadR, scope_.p, 'r');
                    return;
                case 'v':
                    indexed(id, start, Op::LoadV, scope_.m, 'v');
                    return;
                default:
                    break;
            }
        }
        if (id == "v" && scope_.m >= 1) {
            emit(Op::LoadV, 0);
            return;
        }
        if (id == "tau" && scope_.allow_tau) {
            emit(Op::LoadTau);
            return;
        }
        if (id == "eps" && scope_.allow_eps) {
            emit(Op::LoadEps);
            return;
        }
        if (auto it = scope_.constants.find(id); it != scope_.constants.end()) {
            emit(Op::Const, 0, it->second);
            return;
        }
        if (id == "pi") {
            emit(Op::Const, 0, std::numbers::pi);
            return;
        }
        fail_at("unknown symbol \"" + std::string(id) + "\"", start);
    }

    std::string_view src_;
    const ExprScope& scope_;
    std::size_t line_;
    std::size_t col0_;
    std::size_t pos_ = 0;
    std::vector<Instr> code_;
};

}  // namespace

Expression Expression::compile(std::string_view source, const ExprScope& scope, std::size_t line,
                               std::size_t column_offset) {
    Expression e;
    e.source_ = std::string(source);
    e.code_ = Parser(source, scope, line, column_offset).parse();
    int depth = 0;
    int peak = 0;
    for (const auto& in : e.code_) {
        depth += stack_effect(in.op);
        peak = std::max(peak, depth);
    }
    e.max_stack_ = static_cast<std::size_t>(peak);
    return e;
}

bool Expression::uses_tau() const {
    return std::any_of(code_.begin(), code_.end(), [](const Instr& in) { return in.op == Op::LoadTau; });
}

double Expression::eval(const ExprArgs& a) const {
    constexpr std::size_t kInline = 32;
    std::array<double, kInline> small{};
    std::vector<double> big;
    double* st = small.data();
    if (max_stack_ > kInline) {
        big.resize(max_stack_);
        st = big.data();
    }
    std::size_t sp = 0;
    for (const auto& in : code_) {
        switch (in.op) {
            case Op::Const:
                st[sp++] = in.value;
                break;
            case Op::LoadX:
                st[sp++] = a.x[in.index];
                break;
            case Op::LoadR:
                st[sp++] = a.r[in.index];
                break;
            case Op::LoadV:
                st[sp++] = a.v[in.index];
                break;
            case Op::LoadTau:
                st[sp++] = a.tau;
                break;
            case Op::LoadEps:
                st[sp++] = a.eps;
                break;
            case Op::Neg:
                st[sp - 1] = -st[sp - 1];
                break;
            case Op::Sin:
                st[sp - 1] = std::sin(st[sp - 1]);
                break;
            case Op::Cos:
                st[sp - 1] = std::cos(st[sp - 1]);
                break;
            case Op::Tan:
                st[sp - 1] = std::tan(st[sp - 1]);
                break;
            case Op::Exp:
                st[sp - 1] = std::exp(st[sp - 1]);
                break;
            case Op::Log:
                st[sp - 1] = std::log(st[sp - 1]);
                break;
            case Op::Sqrt:
                st[sp - 1] = std::sqrt(st[sp - 1]);
                break;
            case Op::Abs:
                st[sp - 1] = std::abs(st[sp - 1]);
                break;
            case Op::Sign: {
                const double s = st[sp - 1];
                st[sp - 1] = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
                break;
            }
            case Op::If:
                sp -= 2;
                st[sp - 1] = st[sp - 1] != 0.0 ? st[sp] : st[sp + 1];
                break;
            default: {
                const double rhs = st[--sp];
                double& lhs = st[sp - 1];
                switch (in.op) {
                    case Op::Add:
                        lhs = lhs + rhs;
                        break;
                    case Op::Sub:
                        lhs = lhs - rhs;
                        break;
                    case Op::Mul:
                        lhs = lhs * rhs;
                        break;
                    case Op::Div:
                        lhs = lhs / rhs;
                        break;
                    case Op::Pow:
                        lhs = std::pow(lhs, rhs);
                        break;
                    case Op::Lt:
                        lhs = lhs < rhs ? 1.0 : 0.0;
                        break;
                    case Op::Le:
                        lhs = lhs <= rhs ? 1.0 : 0.0;
                        break;
                    case Op::Gt:
                        lhs = lhs > rhs ? 1.0 : 0.0;
                        break;
                    case Op::Ge:
                        lhs = lhs >= rhs ? 1.0 : 0.0;
                        break;
                    case Op::Eq:
                        lhs = lhs == rhs ? 1.0 : 0.0;
                        break;
                    case Op::Ne:
                        lhs = lhs != rhs ? 1.0 : 0.0;
                        break;
                    case Op::Min:
                        lhs = std::min(lhs, rhs);
                        break;
                    case Op::Max:
                        lhs = std::max(lhs, rhs);
                        break;
                    default:
                        break;
                }
            }
        }
    }
    return st[0];
}

double eval_constant(std::string_view source, const std::map<std::string, double, std::less<>>& constants,
                     std::size_t line, std::size_t column_offset) {
    ExprScope scope;
    scope.constants = constants;
    return Expression::compile(source, scope, line, column_offset).eval({});
}

}  // namespace shds
