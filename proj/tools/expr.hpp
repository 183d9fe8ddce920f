#pragma once

// Tiny arithmetic expression compiler for custom activations read from a file.
// Grammar: + - * / ^, unary minus, parentheses, numbers, the variable u (or x),
// constants pi and e, and the functions exp log sqrt abs tanh sin cos erf erfc
// (one argument) and max min (two arguments).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfrisk::cli {

using Expr = std::function<double(double)>;

class ExprParser {
public:
    explicit ExprParser(std::string text) : s_(std::move(text)) {}

    Expr parse() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    std::string s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression: " + what + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_sum() {
        Expr lhs = parse_product();
        for (;;) {
            if (eat('+')) {
                lhs = [a = lhs, b = parse_product()](double u) { return a(u) + b(u); };
            } else if (eat('-')) {
                lhs = [a = lhs, b = parse_product()](double u) { return a(u) - b(u); };
            } else {
                return lhs;
            }
        }
    }

    Expr parse_product() {
        Expr lhs = parse_unary();
        for (;;) {
            if (eat('*')) {
                lhs = [a = lhs, b = parse_unary()](double u) { return a(u) * b(u); };
            } else if (eat('/')) {
                lhs = [a = lhs, b = parse_unary()](double u) { return a(u) / b(u); };
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary() {
        if (eat('-')) return [a = parse_unary()](double u) { return -a(u); };
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    // Right associative; binds tighter than unary minus on its left operand.
    Expr parse_power() {
        Expr base = parse_atom();
        if (eat('^')) return [a = base, b = parse_unary()](double u) { return std::pow(a(u), b(u)); };
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end");
        if (eat('(')) {
            Expr e = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            const double v = std::stod(s_.substr(pos_), &used);
            pos_ += used;
            return [v](double) { return v; };
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "u" || name == "x") return [](double u) { return u; };
            if (name == "pi") return [](double) { return std::numbers::pi; };
            if (name == "e") return [](double) { return std::numbers::e; };
            return parse_call(name);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expr parse_call(const std::string& name) {
        if (!eat('(')) fail("expected '(' after " + name);
        std::vector<Expr> args{parse_sum()};
        while (eat(',')) args.push_back(parse_sum());
        if (!eat(')')) fail("expected ')'");
        auto unary = [&](double (*f)(double)) -> Expr {
            if (args.size() != 1) fail(name + " takes one argument");
            return [f, a = args[0]](double u) { return f(a(u)); };
        };
        auto binary = [&](auto f) -> Expr {
            if (args.size() != 2) fail(name + " takes two arguments");
            return [f, a = args[0], b = args[1]](double u) { return f(a(u), b(u)); };
        };
        if (name == "exp") return unary([](double v) { return std::exp(v); });
        if (name == "log") return unary([](double v) { return std::log(v); });
        if (name == "sqrt") return unary([](double v) { return std::sqrt(v); });
        if (name == "abs") return unary([](double v) { return std::abs(v); });
        if (name == "tanh") return unary([](double v) { return std::tanh(v); });
        if (name == "sin") return unary([](double v) { return std::sin(v); });
        if (name == "cos") return unary([](double v) { return std::cos(v); });
        if (name == "erf") return unary([](double v) { return std::erf(v); });
        if (name == "erfc") return unary([](double v) { return std::erfc(v); });
        if (name == "max") return binary([](double a, double b) { return std::max(a, b); });
        if (name == "min") return binary([](double a, double b) { return std::min(a, b); });
        fail("unknown function '" + name + "'");
    }
};

/// Compiles the expression; '#' starts a comment running to end of line.
inline Expr compile_expression(const std::string& source) {
    std::string text;
    bool comment = false;
    for (char c : source) {
        if (c == '#') comment = true;
        if (c == '\n') comment = false;
        if (!comment) text += (c == '\n' ? ' ' : c);
    }
    return ExprParser(text).parse();
}

}  // namespace rfrisk::cli
