#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hydranav::expr {

// Closed-form real expressions over coordinates x0, x1, ... (x, y, z alias x0..x2).
enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;
    int var = 0;
    std::vector<Expr> kids;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t offset, const std::string& msg) : std::runtime_error(msg), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

Expr parse(std::string_view text);
std::string print(const Expr& e);

Expr constant(double v);
Expr variable(int i);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);

double eval(const Expr& e, const Eigen::VectorXd& x);
Eigen::VectorXd eval(const std::vector<Expr>& es, const Eigen::VectorXd& x);

// Symbolic partial derivative with light constant folding.
Expr derivative(const Expr& e, int var);

// Largest variable index used, or -1.
int max_var(const Expr& e);

// Renumber every variable i to i + offset.
Expr shift_vars(const Expr& e, int offset);

// Substitute x_i := rows[i].
Expr substitute(const Expr& e, const std::vector<Expr>& rows);

// Substitute x_i := affine_i(y) = sum_j A(i, j) y_j + b(i).
Expr substitute_affine(const Expr& e, const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

// sum_j A(i, j) x_j + b(i) for each row i.
std::vector<Expr> affine_exprs(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

} // namespace hydranav::expr
