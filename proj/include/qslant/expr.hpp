#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "qslant/dual.hpp"
#include "qslant/errors.hpp"

namespace qslant {

// Expression tree for smooth scalar formulas over variables x1..xN and named
// parameters. Immutable after construction; evaluation is reentrant and works
// for any scalar type with arithmetic plus sin/cos/sqrt/abs (double, duals).
class Expr {
public:
    enum class Kind { constant, variable, parameter, add, sub, mul, div, neg, pow, sin, cos, sqrt, abs };

    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    struct Node {
        Kind kind;
        double number = 0.0;     // constant
        int var_index = 0;       // variable, 1-based
        std::string param;       // parameter
        int exponent = 0;        // pow
        NodePtr a, b;
    };

    Expr() = default;

    static Expr constant(double v) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::constant;
        n->number = v;
        return Expr(std::move(n));
    }
    static Expr variable(int index) {
        if (index < 1) throw InputError("expr: variable index must be >= 1");
        auto n = std::make_shared<Node>();
        n->kind = Kind::variable;
        n->var_index = index;
        return Expr(std::move(n));
    }
    static Expr parameter(std::string name) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::parameter;
        n->param = std::move(name);
        return Expr(std::move(n));
    }
    static Expr unary(Kind k, Expr a) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = a.node_;
        return Expr(std::move(n));
    }
    static Expr binary(Kind k, Expr a, Expr b) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = a.node_;
        n->b = b.node_;
        return Expr(std::move(n));
    }
    static Expr power(Expr a, int exponent) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::pow;
        n->a = a.node_;
        n->exponent = exponent;
        return Expr(std::move(n));
    }

    friend Expr operator+(const Expr& a, const Expr& b) { return binary(Kind::add, a, b); }
    friend Expr operator-(const Expr& a, const Expr& b) { return binary(Kind::sub, a, b); }
    friend Expr operator*(const Expr& a, const Expr& b) { return binary(Kind::mul, a, b); }

    bool valid() const { return node_ != nullptr; }
    const Node& root() const { return *node_; }

    template <typename S>
    S evaluate(const std::vector<S>& vars, const std::map<std::string, double>& params) const {
        if (!node_) throw EvalError("expr: empty expression");
        return eval_node<S>(*node_, vars, params);
    }

    void collect_free(std::set<std::string>& params, int& max_var) const {
        if (node_) collect_node(*node_, params, max_var);
    }

    std::string to_string() const { return node_ ? print_node(*node_, 0) : std::string(); }

    static bool structurally_equal(const Expr& x, const Expr& y) {
        return equal_nodes(x.node_.get(), y.node_.get());
    }

private:
    explicit Expr(NodePtr n) : node_(std::move(n)) {}

    template <typename S>
    static S eval_node(const Node& n, const std::vector<S>& vars,
                       const std::map<std::string, double>& params) {
        switch (n.kind) {
            case Kind::constant: return S(n.number);
            case Kind::variable: {
                size_t i = static_cast<size_t>(n.var_index - 1);
                if (i >= vars.size())
                    throw EvalError("expr: variable x" + std::to_string(n.var_index) +
                                    " exceeds the domain dimension");
                return vars[i];
            }
            case Kind::parameter: {
                auto it = params.find(n.param);
                if (it == params.end()) throw EvalError("expr: unbound parameter '" + n.param + "'");
                return S(it->second);
            }
            case Kind::add: return eval_node<S>(*n.a, vars, params) + eval_node<S>(*n.b, vars, params);
            case Kind::sub: return eval_node<S>(*n.a, vars, params) - eval_node<S>(*n.b, vars, params);
            case Kind::mul: return eval_node<S>(*n.a, vars, params) * eval_node<S>(*n.b, vars, params);
            case Kind::div: {
                S num = eval_node<S>(*n.a, vars, params);
                S den = eval_node<S>(*n.b, vars, params);
                if (real_part(den) == 0.0) throw EvalError("expr: division by zero");
                return num / den;
            }
            case Kind::neg: return -eval_node<S>(*n.a, vars, params);
            case Kind::pow: return pow_int(eval_node<S>(*n.a, vars, params), n.exponent);
            case Kind::sin: {
                using std::sin;
                return sin(eval_node<S>(*n.a, vars, params));
            }
            case Kind::cos: {
                using std::cos;
                return cos(eval_node<S>(*n.a, vars, params));
            }
            case Kind::sqrt: {
                using std::sqrt;
                S v = eval_node<S>(*n.a, vars, params);
                if (real_part(v) < 0.0) throw EvalError("expr: sqrt of a negative value");
                return sqrt(v);
            }
            case Kind::abs: {
                using std::abs;
                return abs(eval_node<S>(*n.a, vars, params));
            }
        }
        throw EvalError("expr: corrupt node");
    }

    static void collect_node(const Node& n, std::set<std::string>& params, int& max_var) {
        switch (n.kind) {
            case Kind::variable: max_var = std::max(max_var, n.var_index); break;
            case Kind::parameter: params.insert(n.param); break;
            default: break;
        }
        if (n.a) collect_node(*n.a, params, max_var);
        if (n.b) collect_node(*n.b, params, max_var);
    }

    // Precedence levels: 1 sum, 2 product, 3 unary minus, 4 power, 5 atom.
    static int precedence(Kind k) {
        switch (k) {
            case Kind::add:
            case Kind::sub: return 1;
            case Kind::mul:
            case Kind::div: return 2;
            case Kind::neg: return 3;
            case Kind::pow: return 4;
            default: return 5;
        }
    }

    static std::string format_number(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    static std::string wrap(const Node& n, int min_prec) {
        std::string s = print_node(n, 0);
        if (precedence(n.kind) < min_prec) return "(" + s + ")";
        return s;
    }

    static std::string print_node(const Node& n, int) {
        switch (n.kind) {
            case Kind::constant:
                return n.number < 0.0 ? "(" + format_number(n.number) + ")" : format_number(n.number);
            case Kind::variable: return "x" + std::to_string(n.var_index);
            case Kind::parameter: return n.param;
            case Kind::add: return wrap(*n.a, 1) + " + " + wrap(*n.b, 2);
            case Kind::sub: return wrap(*n.a, 1) + " - " + wrap(*n.b, 2);
            case Kind::mul: return wrap(*n.a, 2) + "*" + wrap(*n.b, 3);
            case Kind::div: return wrap(*n.a, 2) + "/" + wrap(*n.b, 3);
            case Kind::neg: return "-" + wrap(*n.a, 3);
            case Kind::pow: return wrap(*n.a, 5) + "^" + std::to_string(n.exponent);
            case Kind::sin: return "sin(" + print_node(*n.a, 0) + ")";
            case Kind::cos: return "cos(" + print_node(*n.a, 0) + ")";
            case Kind::sqrt: return "sqrt(" + print_node(*n.a, 0) + ")";
            case Kind::abs: return "abs(" + print_node(*n.a, 0) + ")";
        }
        return "?";
    }

    static bool equal_nodes(const Node* x, const Node* y) {
        if (x == y) return true;
        if (!x || !y) return false;
        if (x->kind != y->kind) return false;
        switch (x->kind) {
            case Kind::constant:
                if (x->number != y->number) return false;
                break;
            case Kind::variable:
                if (x->var_index != y->var_index) return false;
                break;
            case Kind::parameter:
                if (x->param != y->param) return false;
                break;
            case Kind::pow:
                if (x->exponent != y->exponent) return false;
                break;
            default: break;
        }
        return equal_nodes(x->a.get(), y->a.get()) && equal_nodes(x->b.get(), y->b.get());
    }

    NodePtr node_;
};

namespace detail {

class ExprParser {
public:
    explicit ExprParser(const std::string& text) : text_(text) {}

    Expr parse() {
        skip_space();
        if (pos_ >= text_.size()) throw InputError("parse error: empty expression");
        Expr e = parse_sum();
        skip_space();
        if (pos_ < text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("parse error at position " + std::to_string(pos_) + ": " + what);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Expr parse_sum() {
        Expr e = parse_product();
        while (true) {
            if (eat('+'))
                e = Expr::binary(Expr::Kind::add, e, parse_product());
            else if (eat('-'))
                e = Expr::binary(Expr::Kind::sub, e, parse_product());
            else
                return e;
        }
    }

    Expr parse_product() {
        Expr e = parse_unary();
        while (true) {
            if (eat('*'))
                e = Expr::binary(Expr::Kind::mul, e, parse_unary());
            else if (eat('/'))
                e = Expr::binary(Expr::Kind::div, e, parse_unary());
            else
                return e;
        }
    }

    Expr parse_unary() {
        if (eat('-')) return Expr::unary(Expr::Kind::neg, parse_unary());
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (eat('^')) return Expr::power(base, parse_int_exponent());
        return base;
    }

    int parse_int_exponent() {
        skip_space();
        bool negative = eat('-');
        skip_space();
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            fail("expected integer exponent after '^'");
        long v = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + (text_[pos_] - '0');
            if (v > 1000) fail("exponent too large");
            ++pos_;
        }
        return static_cast<int>(negative ? -v : v);
    }

    Expr parse_atom() {
        skip_space();
        if (pos_ >= text_.size()) fail("expected an operand");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr parse_number() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        // exponent part of a literal, e.g. 1.5e-3
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;  // the 'e' belonged to something else
            }
        }
        std::string lit = text_.substr(start, pos_ - start);
        try {
            size_t used = 0;
            double v = std::stod(lit, &used);
            if (used != lit.size()) throw std::invalid_argument(lit);
            return Expr::constant(v);
        } catch (const std::exception&) {
            pos_ = start;
            fail("malformed number '" + lit + "'");
        }
    }

    Expr parse_identifier() {
        size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '_'))
            ++pos_;
        std::string name = text_.substr(start, pos_ - start);

        if (name == "pi") return Expr::constant(M_PI);
        if (name == "sin" || name == "cos" || name == "sqrt" || name == "abs") {
            if (!eat('(')) fail("expected '(' after function '" + name + "'");
            Expr arg = parse_sum();
            if (!eat(')')) fail("expected ')' closing '" + name + "'");
            if (name == "sin") return Expr::unary(Expr::Kind::sin, arg);
            if (name == "cos") return Expr::unary(Expr::Kind::cos, arg);
            if (name == "sqrt") return Expr::unary(Expr::Kind::sqrt, arg);
            return Expr::unary(Expr::Kind::abs, arg);
        }
        if (peek() == '(') {
            pos_ = start;
            fail("unknown function '" + name + "'");
        }
        // x followed by digits is a coordinate; everything in [a-z_]+ is a
        // parameter name.
        if (name.size() >= 2 && name[0] == 'x' &&
            name.find_first_not_of("0123456789", 1) == std::string::npos) {
            int idx = std::stoi(name.substr(1));
            if (idx < 1) {
                pos_ = start;
                fail("coordinate indices start at x1");
            }
            return Expr::variable(idx);
        }
        for (char ch : name)
            if (!(std::islower(static_cast<unsigned char>(ch)) || ch == '_')) {
                pos_ = start;
                fail("unknown identifier '" + name + "' (parameters are lowercase words)");
            }
        return Expr::parameter(name);
    }

    const std::string& text_;
    size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expr(const std::string& text) {
    return detail::ExprParser(text).parse();
}

}  // namespace qslant
