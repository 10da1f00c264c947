#include "hydranav/expr.hpp"

#include <cctype>
#include <cmath>

#include <fmt/format.h>

namespace hydranav::expr {

namespace {

Expr node(Op op, std::vector<Expr> kids) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->kids = std::move(kids);
    return n;
}

bool is_const(const Expr& e, double v) { return e->op == Op::Const && e->value == v; }

class Parser {
  public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr run() {
        auto e = sum();
        skip();
        if (i_ != s_.size()) throw ParseError(i_, fmt::format("unexpected '{}' in expression", s_[i_]));
        return e;
    }

  private:
    std::string_view s_;
    std::size_t i_ = 0;

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool eat(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    Expr sum() {
        auto e = product();
        for (;;) {
            if (eat('+')) e = node(Op::Add, {e, product()});
            else if (eat('-')) e = node(Op::Sub, {e, product()});
            else return e;
        }
    }
    Expr product() {
        auto e = unary();
        for (;;) {
            if (eat('*')) e = node(Op::Mul, {e, unary()});
            else if (eat('/')) e = node(Op::Div, {e, unary()});
            else return e;
        }
    }
    Expr unary() {
        if (eat('-')) return node(Op::Neg, {unary()});
        auto base = atom();
        if (eat('^')) return node(Op::Pow, {base, unary()});
        return base;
    }
    Expr atom() {
        skip();
        if (i_ >= s_.size()) throw ParseError(i_, "unexpected end of expression");
        if (eat('(')) {
            auto e = sum();
            if (!eat(')')) throw ParseError(i_, "expected ')'");
            return e;
        }
        char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = i_;
            while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.')) ++i_;
            if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
                ++i_;
                if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
                while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            }
            return constant(std::stod(std::string(s_.substr(start, i_ - start))));
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = i_;
            while (i_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[i_]))) ++i_;
            auto word = s_.substr(start, i_ - start);
            if (word == "sin" || word == "cos" || word == "exp") {
                if (!eat('(')) throw ParseError(i_, fmt::format("expected '(' after {}", word));
                auto arg = sum();
                if (!eat(')')) throw ParseError(i_, "expected ')'");
                Op op = word == "sin" ? Op::Sin : word == "cos" ? Op::Cos : Op::Exp;
                return node(op, {arg});
            }
            if (word == "x") return variable(0);
            if (word == "y") return variable(1);
            if (word == "z") return variable(2);
            if (word.size() > 1 && word[0] == 'x' &&
                word.substr(1).find_first_not_of("0123456789") == std::string_view::npos)
                return variable(std::stoi(std::string(word.substr(1))));
            throw ParseError(start, fmt::format("unknown identifier '{}'", word));
        }
        throw ParseError(i_, fmt::format("unexpected '{}' in expression", c));
    }
};

int prec(Op op) {
    switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
    }
}

void put(std::string& out, const Expr& e, int need) {
    bool paren = prec(e->op) < need;
    if (paren) out += '(';
    switch (e->op) {
    case Op::Const: {
        auto s = fmt::format("{}", e->value);
        if (e->value < 0 && !paren && need > 0) s = "(" + s + ")";
        out += s;
        break;
    }
    case Op::Var: out += fmt::format("x{}", e->var); break;
    case Op::Neg:
        out += '-';
        put(out, e->kids[0], 4);
        break;
    case Op::Add:
    case Op::Sub:
        put(out, e->kids[0], 1);
        out += e->op == Op::Add ? " + " : " - ";
        put(out, e->kids[1], 2);
        break;
    case Op::Mul:
    case Op::Div:
        put(out, e->kids[0], 2);
        out += e->op == Op::Mul ? "*" : "/";
        put(out, e->kids[1], 3);
        break;
    case Op::Pow:
        put(out, e->kids[0], 5);
        out += '^';
        put(out, e->kids[1], 4);
        break;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
        out += e->op == Op::Sin ? "sin(" : e->op == Op::Cos ? "cos(" : "exp(";
        put(out, e->kids[0], 0);
        out += ')';
        break;
    }
    if (paren) out += ')';
}

} // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

std::string print(const Expr& e) {
    std::string out;
    put(out, e, 0);
    return out;
}

Expr constant(double v) {
    auto n = std::make_shared<Node>();
    n->value = v;
    return n;
}

Expr variable(int i) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->var = i;
    return n;
}

Expr add(Expr a, Expr b) {
    if (is_const(a, 0)) return b;
    if (is_const(b, 0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value + b->value);
    return node(Op::Add, {std::move(a), std::move(b)});
}

Expr sub(Expr a, Expr b) {
    if (is_const(b, 0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value - b->value);
    if (is_const(a, 0)) return node(Op::Neg, {std::move(b)});
    return node(Op::Sub, {std::move(a), std::move(b)});
}

Expr mul(Expr a, Expr b) {
    if (is_const(a, 0) || is_const(b, 0)) return constant(0);
    if (is_const(a, 1)) return b;
    if (is_const(b, 1)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value * b->value);
    return node(Op::Mul, {std::move(a), std::move(b)});
}

double eval(const Expr& e, const Eigen::VectorXd& x) {
    switch (e->op) {
    case Op::Const: return e->value;
    case Op::Var:
        if (e->var >= x.size())
            throw std::out_of_range(fmt::format("expression uses x{} but the point has dimension {}", e->var,
                                                x.size()));
        return x(e->var);
    case Op::Neg: return -eval(e->kids[0], x);
    case Op::Add: return eval(e->kids[0], x) + eval(e->kids[1], x);
    case Op::Sub: return eval(e->kids[0], x) - eval(e->kids[1], x);
    case Op::Mul: return eval(e->kids[0], x) * eval(e->kids[1], x);
    case Op::Div: return eval(e->kids[0], x) / eval(e->kids[1], x);
    case Op::Pow: return std::pow(eval(e->kids[0], x), eval(e->kids[1], x));
    case Op::Sin: return std::sin(eval(e->kids[0], x));
    case Op::Cos: return std::cos(eval(e->kids[0], x));
    case Op::Exp: return std::exp(eval(e->kids[0], x));
    }
    return 0.0;
}

Eigen::VectorXd eval(const std::vector<Expr>& es, const Eigen::VectorXd& x) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(es.size()));
    for (std::size_t i = 0; i < es.size(); ++i) out(static_cast<Eigen::Index>(i)) = eval(es[i], x);
    return out;
}

Expr derivative(const Expr& e, int v) {
    const auto& k = e->kids;
    switch (e->op) {
    case Op::Const: return constant(0);
    case Op::Var: return constant(e->var == v ? 1 : 0);
    case Op::Neg: {
        auto d = derivative(k[0], v);
        return is_const(d, 0) ? d : node(Op::Neg, {d});
    }
    case Op::Add: return add(derivative(k[0], v), derivative(k[1], v));
    case Op::Sub: return sub(derivative(k[0], v), derivative(k[1], v));
    case Op::Mul: return add(mul(derivative(k[0], v), k[1]), mul(k[0], derivative(k[1], v)));
    case Op::Div: {
        auto num = sub(mul(derivative(k[0], v), k[1]), mul(k[0], derivative(k[1], v)));
        if (is_const(num, 0)) return num;
        return node(Op::Div, {num, mul(k[1], k[1])});
    }
    case Op::Pow: {
        if (!is_const(derivative(k[1], v), 0))
            throw std::invalid_argument("derivative of a power with non-constant exponent is not supported");
        return mul(mul(k[1], node(Op::Pow, {k[0], sub(k[1], constant(1))})), derivative(k[0], v));
    }
    case Op::Sin: return mul(node(Op::Cos, {k[0]}), derivative(k[0], v));
    case Op::Cos: return mul(node(Op::Neg, {node(Op::Sin, {k[0]})}), derivative(k[0], v));
    case Op::Exp: return mul(e, derivative(k[0], v));
    }
    return constant(0);
}

int max_var(const Expr& e) {
    int m = e->op == Op::Var ? e->var : -1;
    for (const auto& k : e->kids) m = std::max(m, max_var(k));
    return m;
}

Expr shift_vars(const Expr& e, int offset) {
    if (e->op == Op::Var) return variable(e->var + offset);
    if (e->kids.empty()) return e;
    auto n = std::make_shared<Node>(*e);
    for (auto& k : n->kids) k = shift_vars(k, offset);
    return n;
}

std::vector<Expr> affine_exprs(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    std::vector<Expr> out;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        Expr row = constant(b(i));
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            row = add(row, mul(constant(A(i, j)), variable(static_cast<int>(j))));
        out.push_back(row);
    }
    return out;
}

Expr substitute(const Expr& e, const std::vector<Expr>& rows) {
    if (e->op == Op::Var) {
        if (e->var >= static_cast<int>(rows.size()))
            throw std::out_of_range(fmt::format("substitution has no row for x{}", e->var));
        return rows[static_cast<std::size_t>(e->var)];
    }
    if (e->kids.empty()) return e;
    auto n = std::make_shared<Node>(*e);
    for (auto& k : n->kids) k = substitute(k, rows);
    return n;
}

Expr substitute_affine(const Expr& e, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    return substitute(e, affine_exprs(A, b));
}

} // namespace hydranav::expr
