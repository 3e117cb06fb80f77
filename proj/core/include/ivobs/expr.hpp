#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ivobs/interval.hpp"

namespace ivobs {

enum class VarKind { kTime, kState, kInput };
enum class BinaryOp { kAdd, kSub, kMul, kDiv };

struct ExprNode;

/// Immutable handle to a dynamics expression tree in t, x1..xn, u1..um.
///
/// Copies share structure. Variable indices are stored zero-based; the
/// textual grammar is one-based (x1 is state 0).
class Expr {
 public:
  static Expr constant(double value);
  static Expr time();
  static Expr state(std::size_t index);
  static Expr input(std::size_t index);
  static Expr unary(UnaryOp op, Expr operand);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
  /// Piecewise-constant function of time. values[k] applies on (b[k-1], b[k]],
  /// values[0] on t <= b[0] and the last value on t > b.back().
  /// Throws std::invalid_argument unless breakpoints are strictly increasing
  /// and values.size() == breakpoints.size() + 1.
  static Expr piecewise(std::vector<double> breakpoints, std::vector<double> values);

  const ExprNode& node() const { return *node_; }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);

struct ConstNode {
  double value;
  friend bool operator==(const ConstNode&, const ConstNode&) = default;
};

struct VarNode {
  VarKind kind;
  std::size_t index;
  friend bool operator==(const VarNode&, const VarNode&) = default;
};

struct UnaryNode {
  UnaryOp op;
  Expr operand;
  friend bool operator==(const UnaryNode&, const UnaryNode&) = default;
};

struct BinaryNode {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
  friend bool operator==(const BinaryNode&, const BinaryNode&) = default;
};

struct PiecewiseNode {
  std::vector<double> breakpoints;
  std::vector<double> values;

  /// Index of the piece selected at time t.
  std::size_t piece(double t) const;
  friend bool operator==(const PiecewiseNode&, const PiecewiseNode&) = default;
};

struct ExprNode {
  std::variant<ConstNode, VarNode, UnaryNode, BinaryNode, PiecewiseNode> data;
};

/// Parses the expression grammar: numbers, t, x<k>, u<k>, + - * /, unary minus,
/// parentheses, sin cos sqrt exp, and piecewise(t; b1,...,bm; v1,...,v{m+1}).
/// Throws SyntaxError (or its UnknownIdentifier / IndexOutOfRange subclasses).
Expr parse(std::string_view source, std::size_t n_x, std::size_t n_u);

/// Text form accepted by parse(); parse(unparse(e)) == e for parsed trees.
std::string unparse(const Expr& e);

double eval_real(const Expr& e, double t, std::span<const double> u, std::span<const double> x);

/// Natural interval extension of `e` over the argument boxes.
Interval eval_interval(const Expr& e, const Interval& t, const IntervalVector& u,
                       const IntervalVector& x);

/// True if `e` references no state or input variable (time is allowed).
bool depends_only_on_time(const Expr& e);

/// Largest one-based index referenced for each variable kind (0 if none).
struct VariableUsage {
  std::size_t max_state = 0;
  std::size_t max_input = 0;
  bool uses_time = false;
};
VariableUsage variable_usage(const Expr& e);

/// Sorted, deduplicated breakpoints of every piecewise node in `e`.
std::vector<double> time_breakpoints(const Expr& e);

/// Additive split e = sum_k coefficients[k] * x_k + remainder, where only
/// top-level summands of the form c*x_k, x_k*c, x_k/c or -x_k with constant c
/// are moved into the coefficients.
struct LinearSplit {
  std::vector<double> coefficients;
  Expr remainder;
};
LinearSplit split_linear_state_terms(const Expr& e, std::size_t n_x);

/// Componentwise dynamics f(t, u, x) with n_x components.
class VectorField {
 public:
  VectorField() = default;
  /// Throws DimensionError if a component references an undeclared variable
  /// or the component count differs from n_x.
  VectorField(std::vector<Expr> components, std::size_t n_x, std::size_t n_u);

  std::size_t n_x() const { return n_x_; }
  std::size_t n_u() const { return n_u_; }
  const Expr& operator[](std::size_t i) const { return components_[i]; }
  const std::vector<Expr>& components() const { return components_; }

  void eval_real(double t, std::span<const double> u, std::span<const double> x,
                 std::span<double> out) const;
  std::vector<double> eval_real(double t, std::span<const double> u,
                                std::span<const double> x) const;

  Interval eval_interval(std::size_t i, const Interval& t, const IntervalVector& u,
                         const IntervalVector& x) const;

  std::vector<double> time_breakpoints() const;

  friend bool operator==(const VectorField&, const VectorField&) = default;

 private:
  std::vector<Expr> components_;
  std::size_t n_x_ = 0;
  std::size_t n_u_ = 0;
};

}  // namespace ivobs
