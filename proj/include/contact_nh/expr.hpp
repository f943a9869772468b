#pragma once

// Scalar expression language: parser, printer and an evaluator that is
// generic over the scalar type, so the same tree serves plain doubles and
// the second-order jets in autodiff.hpp.
//
// Grammar (lowest to highest precedence):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | ident | func '(' expr ')' | '(' expr ')'
// `pi` is a built-in constant. There is no implicit multiplication.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "contact_nh/errors.hpp"

namespace contact_nh::expr {

enum class UnaryOp { Neg, Sin, Cos, Tan, Exp, Log, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Constant {
    double value;
};
struct Variable {
    std::string name;
    std::size_t slot;  // index into Expression::free_vars()
};
struct Unary {
    UnaryOp op;
    NodePtr arg;
};
struct Binary {
    BinaryOp op;
    NodePtr lhs;
    NodePtr rhs;
};

struct Node {
    std::variant<Constant, Variable, Unary, Binary> v;
};

inline constexpr std::string_view function_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "-";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Tan: return "tan";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Log: return "log";
        case UnaryOp::Sqrt: return "sqrt";
    }
    return "?";
}

inline std::optional<UnaryOp> lookup_function(std::string_view name) {
    for (auto op : {UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Tan, UnaryOp::Exp, UnaryOp::Log,
                    UnaryOp::Sqrt}) {
        if (function_name(op) == name) return op;
    }
    return std::nullopt;
}

inline bool is_reserved_name(std::string_view name) {
    return name == "pi" || lookup_function(name).has_value();
}

/// Immutable parsed expression. Copies share the tree.
class Expression {
public:
    Expression() = default;
    Expression(NodePtr root, std::vector<std::string> free_vars, std::string source)
        : root_(std::move(root)), free_vars_(std::move(free_vars)), source_(std::move(source)) {}

    const Node& root() const { return *root_; }
    const NodePtr& root_ptr() const { return root_; }
    /// Sorted, duplicate-free variable names.
    const std::vector<std::string>& free_vars() const { return free_vars_; }
    const std::string& source() const { return source_; }

    std::optional<std::size_t> slot_of(std::string_view name) const {
        auto it = std::lower_bound(free_vars_.begin(), free_vars_.end(), name);
        if (it == free_vars_.end() || *it != name) return std::nullopt;
        return static_cast<std::size_t>(it - free_vars_.begin());
    }

private:
    NodePtr root_;
    std::vector<std::string> free_vars_;
    std::string source_;
};

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline int precedence(const Node& n) {
    if (auto* b = std::get_if<Binary>(&n.v)) {
        switch (b->op) {
            case BinaryOp::Add:
            case BinaryOp::Sub: return 1;
            case BinaryOp::Mul:
            case BinaryOp::Div: return 2;
            case BinaryOp::Pow: return 4;
        }
    }
    if (auto* u = std::get_if<Unary>(&n.v); u && u->op == UnaryOp::Neg) return 3;
    return 5;
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void print_node(const Node& n, std::string& out);

inline void print_child(const Node& n, bool parens, std::string& out) {
    if (parens) out += '(';
    print_node(n, out);
    if (parens) out += ')';
}

inline void print_node(const Node& n, std::string& out) {
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Constant>) {
                out += format_number(x.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                out += x.name;
            } else if constexpr (std::is_same_v<T, Unary>) {
                if (x.op == UnaryOp::Neg) {
                    out += '-';
                    print_child(*x.arg, precedence(*x.arg) < 3, out);
                } else {
                    out += function_name(x.op);
                    print_child(*x.arg, true, out);
                }
            } else {
                const int p = precedence(n);
                if (x.op == BinaryOp::Pow) {
                    print_child(*x.lhs, precedence(*x.lhs) <= 4, out);
                    out += '^';
                    print_child(*x.rhs, precedence(*x.rhs) < 3, out);
                    return;
                }
                print_child(*x.lhs, precedence(*x.lhs) < p, out);
                switch (x.op) {
                    case BinaryOp::Add: out += " + "; break;
                    case BinaryOp::Sub: out += " - "; break;
                    case BinaryOp::Mul: out += '*'; break;
                    case BinaryOp::Div: out += '/'; break;
                    case BinaryOp::Pow: break;
                }
                print_child(*x.rhs, precedence(*x.rhs) <= p, out);
            }
        },
        n.v);
}

}  // namespace detail

inline std::string print(const Node& n) {
    std::string out;
    detail::print_node(n, out);
    return out;
}

inline std::string print(const Expression& e) { return print(e.root()); }

inline bool structurally_equal(const Node& a, const Node& b) {
    if (a.v.index() != b.v.index()) return false;
    if (auto* c = std::get_if<Constant>(&a.v)) return c->value == std::get<Constant>(b.v).value;
    if (auto* v = std::get_if<Variable>(&a.v)) return v->name == std::get<Variable>(b.v).name;
    if (auto* u = std::get_if<Unary>(&a.v)) {
        const auto& ub = std::get<Unary>(b.v);
        return u->op == ub.op && structurally_equal(*u->arg, *ub.arg);
    }
    const auto& ba = std::get<Binary>(a.v);
    const auto& bb = std::get<Binary>(b.v);
    return ba.op == bb.op && structurally_equal(*ba.lhs, *bb.lhs) &&
           structurally_equal(*ba.rhs, *bb.rhs);
}

inline bool structurally_equal(const Expression& a, const Expression& b) {
    return structurally_equal(a.root(), b.root());
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind;
    std::size_t offset;
    std::string_view text;
    double number = 0.0;
};

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> toks;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
            while (i < src.size() && is_digit(src[i])) ++i;
            if (i < src.size() && src[i] == '.') {
                ++i;
                while (i < src.size() && is_digit(src[i])) ++i;
            }
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
                if (j < src.size() && is_digit(src[j])) {
                    while (j < src.size() && is_digit(src[j])) ++j;
                    i = j;
                }
            }
            double value = 0.0;
            auto res = std::from_chars(src.data() + start, src.data() + i, value);
            if (res.ec != std::errc() || res.ptr != src.data() + i || !std::isfinite(value))
                throw ParseError("invalid number literal '" + std::string(src.substr(start, i - start)) + "'",
                                 start);
            toks.push_back({Tok::Number, start, src.substr(start, i - start), value});
            continue;
        }
        if (is_ident_start(c)) {
            while (i < src.size() && (is_ident_start(src[i]) || is_digit(src[i]))) ++i;
            toks.push_back({Tok::Ident, start, src.substr(start, i - start)});
            continue;
        }
        Tok kind;
        switch (c) {
            case '+': kind = Tok::Plus; break;
            case '-': kind = Tok::Minus; break;
            case '*': kind = Tok::Star; break;
            case '/': kind = Tok::Slash; break;
            case '^': kind = Tok::Caret; break;
            case '(': kind = Tok::LParen; break;
            case ')': kind = Tok::RParen; break;
            default:
                throw ParseError("unexpected character '" + std::string(1, c) + "'", start);
        }
        toks.push_back({kind, start, src.substr(start, 1)});
        ++i;
    }
    toks.push_back({Tok::End, src.size(), {}});
    return toks;
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

    NodePtr parse_all() {
        if (peek().kind == Tok::End) throw ParseError("empty expression", peek().offset);
        NodePtr n = parse_expr();
        if (peek().kind != Tok::End) unexpected(peek());
        return n;
    }

    std::vector<std::string> take_names() {
        std::sort(names_.begin(), names_.end());
        names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
        return std::move(names_);
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }

    [[noreturn]] static void unexpected(const Token& t) {
        if (t.kind == Tok::End) throw ParseError("unexpected end of input", t.offset);
        throw ParseError("unexpected token '" + std::string(t.text) + "'", t.offset);
    }

    static NodePtr make(auto&& payload) {
        return std::make_shared<const Node>(Node{std::forward<decltype(payload)>(payload)});
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            const auto op = next().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
            lhs = make(Binary{op, lhs, parse_term()});
        }
        return lhs;
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            const auto op = next().kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
            lhs = make(Binary{op, lhs, parse_unary()});
        }
        return lhs;
    }

    NodePtr parse_unary() {
        if (peek().kind == Tok::Minus) {
            next();
            return make(Unary{UnaryOp::Neg, parse_unary()});
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (peek().kind == Tok::Caret) {
            next();
            return make(Binary{BinaryOp::Pow, base, parse_unary()});
        }
        return base;
    }

    NodePtr parse_primary() {
        const Token& t = next();
        switch (t.kind) {
            case Tok::Number: return make(Constant{t.number});
            case Tok::LParen: {
                NodePtr inner = parse_expr();
                if (peek().kind != Tok::RParen) {
                    if (peek().kind == Tok::End)
                        throw ParseError("missing ')'", peek().offset);
                    unexpected(peek());
                }
                next();
                return inner;
            }
            case Tok::Ident: {
                const bool call = peek().kind == Tok::LParen;
                if (call) {
                    auto op = lookup_function(t.text);
                    if (!op) throw UnknownFunctionError(std::string(t.text), t.offset);
                    next();
                    NodePtr arg = parse_expr();
                    if (peek().kind != Tok::RParen) {
                        if (peek().kind == Tok::End)
                            throw ParseError("missing ')'", peek().offset);
                        unexpected(peek());
                    }
                    next();
                    return make(Unary{*op, arg});
                }
                if (t.text == "pi") return make(Constant{std::numbers::pi});
                if (lookup_function(t.text))
                    throw ParseError("function '" + std::string(t.text) + "' requires parentheses",
                                     t.offset);
                names_.emplace_back(t.text);
                return make(Variable{std::string(t.text), 0});
            }
            default: unexpected(t);
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<std::string> names_;
};

// Rebuilds the tree with variable slots resolved against the sorted name list.
inline NodePtr assign_slots(const NodePtr& n, const std::vector<std::string>& names) {
    return std::visit(
        [&](const auto& x) -> NodePtr {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return n;
            } else if constexpr (std::is_same_v<T, Variable>) {
                auto it = std::lower_bound(names.begin(), names.end(), x.name);
                auto slot = static_cast<std::size_t>(it - names.begin());
                return std::make_shared<const Node>(Node{Variable{x.name, slot}});
            } else if constexpr (std::is_same_v<T, Unary>) {
                return std::make_shared<const Node>(Node{Unary{x.op, assign_slots(x.arg, names)}});
            } else {
                return std::make_shared<const Node>(
                    Node{Binary{x.op, assign_slots(x.lhs, names), assign_slots(x.rhs, names)}});
            }
        },
        n->v);
}

}  // namespace detail

/// Parses `source`. Throws ParseError (with byte offset) or UnknownFunctionError.
inline Expression parse(std::string_view source) {
    detail::Parser p(source);
    NodePtr root = p.parse_all();
    auto names = p.take_names();
    root = detail::assign_slots(root, names);
    return Expression(std::move(root), std::move(names), std::string(source));
}

// ---------------------------------------------------------------------------
// Evaluation

/// Value part of a scalar, used for domain checks. Scalar types other than
/// double provide their own overload found by ADL.
inline double scalar_value(double x) { return x; }
/// True when the scalar carries no derivative information.
inline bool scalar_is_constant(double) { return true; }

namespace detail {

template <class S>
S eval_node(const Node& n, std::span<const S> values) {
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    using std::sqrt;
    using std::tan;
    return std::visit(
        [&](const auto& x) -> S {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return S(x.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                return values[x.slot];
            } else if constexpr (std::is_same_v<T, Unary>) {
                S a = eval_node<S>(*x.arg, values);
                switch (x.op) {
                    case UnaryOp::Neg: return -a;
                    case UnaryOp::Sin: return sin(a);
                    case UnaryOp::Cos: return cos(a);
                    case UnaryOp::Tan: return tan(a);
                    case UnaryOp::Exp: return exp(a);
                    case UnaryOp::Log:
                        if (!(scalar_value(a) > 0.0))
                            throw DomainError("log of non-positive argument", print(n));
                        return log(a);
                    case UnaryOp::Sqrt:
                        if (scalar_value(a) < 0.0)
                            throw DomainError("sqrt of negative argument", print(n));
                        return sqrt(a);
                }
                return a;
            } else {
                S a = eval_node<S>(*x.lhs, values);
                S b = eval_node<S>(*x.rhs, values);
                switch (x.op) {
                    case BinaryOp::Add: return a + b;
                    case BinaryOp::Sub: return a - b;
                    case BinaryOp::Mul: return a * b;
                    case BinaryOp::Div:
                        if (scalar_value(b) == 0.0) throw DomainError("division by zero", print(n));
                        return a / b;
                    case BinaryOp::Pow: {
                        const double base = scalar_value(a);
                        const double e = scalar_value(b);
                        const bool integral = std::trunc(e) == e;
                        if (base == 0.0 && e < 0.0) throw DomainError("division by zero", print(n));
                        if (base < 0.0 && (!integral || !scalar_is_constant(b)))
                            throw DomainError("real power of negative base", print(n));
                        return pow(a, b);
                    }
                }
                return a;
            }
        },
        n.v);
}

}  // namespace detail

/// Evaluates with `values[i]` bound to `e.free_vars()[i]`.
template <class S>
S evaluate(const Expression& e, std::span<const S> values) {
    if (values.size() != e.free_vars().size())
        throw Error("evaluate: expected " + std::to_string(e.free_vars().size()) + " values, got " +
                    std::to_string(values.size()));
    return detail::eval_node<S>(e.root(), values);
}

template <class S, class Compare>
S evaluate(const Expression& e, const std::map<std::string, S, Compare>& bindings) {
    std::vector<S> values;
    values.reserve(e.free_vars().size());
    for (const auto& name : e.free_vars()) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw UnboundVariableError(name);
        values.push_back(it->second);
    }
    return evaluate<S>(e, std::span<const S>(values));
}

}  // namespace contact_nh::expr
