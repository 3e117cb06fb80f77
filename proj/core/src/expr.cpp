#include "ivobs/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <type_traits>

namespace ivobs {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const char* symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSub: return "-";
    case BinaryOp::kMul: return "*";
    case BinaryOp::kDiv: return "/";
  }
  return "?";
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

// Recursive-descent parser over the dynamics grammar.
class Parser {
 public:
  Parser(std::string_view src, std::size_t n_x, std::size_t n_u) : src_(src), n_x_(n_x), n_u_(n_u) {}

  Expr parse_all() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' but input ended");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(BinaryOp::kAdd, lhs, parse_product());
      } else if (accept('-')) {
        lhs = Expr::binary(BinaryOp::kSub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(BinaryOp::kMul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expr::binary(BinaryOp::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::unary(UnaryOp::kNeg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_primary();
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expected an operand but input ended");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Expr::constant(parse_number());
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  double parse_number() {
    skip_ws();
    const char* first = src_.data() + pos_;
    const char* last = src_.data() + src_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return value;
  }

  double parse_signed_number() {
    bool negative = false;
    if (accept('-')) {
      negative = true;
    } else {
      accept('+');
    }
    skip_ws();
    if (pos_ >= src_.size() || !(std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      fail("expected a number");
    }
    const double v = parse_number();
    return negative ? -v : v;
  }

  std::vector<double> parse_number_list() {
    std::vector<double> out{parse_signed_number()};
    while (accept(',')) out.push_back(parse_signed_number());
    return out;
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);

    if (name == "t") return Expr::time();
    if (name == "sin") return parse_call(UnaryOp::kSin);
    if (name == "cos") return parse_call(UnaryOp::kCos);
    if (name == "sqrt") return parse_call(UnaryOp::kSqrt);
    if (name == "exp") return parse_call(UnaryOp::kExp);
    if (name == "piecewise") return parse_piecewise(start);

    if ((name[0] == 'x' || name[0] == 'u') && name.size() > 1 &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      std::size_t index = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec != std::errc() || ptr != name.data() + name.size()) {
        throw IndexOutOfRange("variable index of '" + std::string(name) + "' is not representable", start);
      }
      const bool is_state = name[0] == 'x';
      const std::size_t limit = is_state ? n_x_ : n_u_;
      if (index < 1 || index > limit) {
        throw IndexOutOfRange("variable '" + std::string(name) + "' out of range (declared " +
                                  std::to_string(limit) + ")",
                              start);
      }
      return is_state ? Expr::state(index - 1) : Expr::input(index - 1);
    }
    throw UnknownIdentifier("unknown identifier '" + std::string(name) + "'", start);
  }

  Expr parse_call(UnaryOp op) {
    expect('(');
    Expr arg = parse_sum();
    expect(')');
    return Expr::unary(op, arg);
  }

  Expr parse_piecewise(std::size_t start) {
    expect('(');
    skip_ws();
    if (src_.substr(pos_, 1) != "t") fail("piecewise must be a function of t");
    ++pos_;
    expect(';');
    std::vector<double> breaks = parse_number_list();
    expect(';');
    std::vector<double> values = parse_number_list();
    expect(')');
    try {
      return Expr::piecewise(std::move(breaks), std::move(values));
    } catch (const std::invalid_argument& e) {
      throw SyntaxError(e.what(), start);
    }
  }

  std::string_view src_;
  std::size_t n_x_;
  std::size_t n_u_;
  std::size_t pos_ = 0;
};

void unparse_into(const Expr& e, std::string& out) {
  std::visit(Overloaded{
                 [&](const ConstNode& c) { out += format_number(c.value); },
                 [&](const VarNode& v) {
                   switch (v.kind) {
                     case VarKind::kTime: out += 't'; break;
                     case VarKind::kState: out += 'x' + std::to_string(v.index + 1); break;
                     case VarKind::kInput: out += 'u' + std::to_string(v.index + 1); break;
                   }
                 },
                 [&](const UnaryNode& u) {
                   if (u.op == UnaryOp::kNeg) {
                     out += "(-";
                     unparse_into(u.operand, out);
                     out += ')';
                   } else {
                     out += to_string(u.op);
                     out += '(';
                     unparse_into(u.operand, out);
                     out += ')';
                   }
                 },
                 [&](const BinaryNode& b) {
                   out += '(';
                   unparse_into(b.lhs, out);
                   out += ' ';
                   out += symbol(b.op);
                   out += ' ';
                   unparse_into(b.rhs, out);
                   out += ')';
                 },
                 [&](const PiecewiseNode& p) {
                   out += "piecewise(t; ";
                   for (std::size_t k = 0; k < p.breakpoints.size(); ++k) {
                     if (k) out += ", ";
                     out += format_number(p.breakpoints[k]);
                   }
                   out += "; ";
                   for (std::size_t k = 0; k < p.values.size(); ++k) {
                     if (k) out += ", ";
                     out += format_number(p.values[k]);
                   }
                   out += ')';
                 },
             },
             e.node().data);
}

double apply(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::kAdd: return a + b;
    case BinaryOp::kSub: return a - b;
    case BinaryOp::kMul: return a * b;
    case BinaryOp::kDiv:
      if (b == 0.0) throw DivisionByZero("division by zero");
      return a / b;
  }
  throw std::logic_error("unhandled binary op");
}

Interval apply(BinaryOp op, const Interval& a, const Interval& b) {
  switch (op) {
    case BinaryOp::kAdd: return a + b;
    case BinaryOp::kSub: return a - b;
    case BinaryOp::kMul: return a * b;
    case BinaryOp::kDiv: return a / b;
  }
  throw std::logic_error("unhandled binary op");
}

void collect_usage(const Expr& e, VariableUsage& usage) {
  std::visit(Overloaded{
                 [](const ConstNode&) {},
                 [&](const VarNode& v) {
                   if (v.kind == VarKind::kTime) usage.uses_time = true;
                   if (v.kind == VarKind::kState) usage.max_state = std::max(usage.max_state, v.index + 1);
                   if (v.kind == VarKind::kInput) usage.max_input = std::max(usage.max_input, v.index + 1);
                 },
                 [&](const UnaryNode& u) { collect_usage(u.operand, usage); },
                 [&](const BinaryNode& b) {
                   collect_usage(b.lhs, usage);
                   collect_usage(b.rhs, usage);
                 },
                 [&](const PiecewiseNode&) { usage.uses_time = true; },
             },
             e.node().data);
}

void collect_breakpoints(const Expr& e, std::vector<double>& out) {
  std::visit(Overloaded{
                 [](const ConstNode&) {},
                 [](const VarNode&) {},
                 [&](const UnaryNode& u) { collect_breakpoints(u.operand, out); },
                 [&](const BinaryNode& b) {
                   collect_breakpoints(b.lhs, out);
                   collect_breakpoints(b.rhs, out);
                 },
                 [&](const PiecewiseNode& p) { out.insert(out.end(), p.breakpoints.begin(), p.breakpoints.end()); },
             },
             e.node().data);
}

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Expr Expr::constant(double value) { return Expr(std::make_shared<const ExprNode>(ExprNode{ConstNode{value}})); }

Expr Expr::time() { return Expr(std::make_shared<const ExprNode>(ExprNode{VarNode{VarKind::kTime, 0}})); }

Expr Expr::state(std::size_t index) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{VarNode{VarKind::kState, index}}));
}

Expr Expr::input(std::size_t index) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{VarNode{VarKind::kInput, index}}));
}

Expr Expr::unary(UnaryOp op, Expr operand) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{UnaryNode{op, std::move(operand)}}));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{BinaryNode{op, std::move(lhs), std::move(rhs)}}));
}

Expr Expr::piecewise(std::vector<double> breakpoints, std::vector<double> values) {
  if (breakpoints.empty()) throw std::invalid_argument("piecewise needs at least one breakpoint");
  if (values.size() != breakpoints.size() + 1) {
    throw std::invalid_argument("piecewise needs exactly one more value than breakpoints");
  }
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    if (!(breakpoints[k - 1] < breakpoints[k])) {
      throw std::invalid_argument("piecewise breakpoints must be strictly increasing");
    }
  }
  return Expr(std::make_shared<const ExprNode>(ExprNode{PiecewiseNode{std::move(breakpoints), std::move(values)}}));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  return a.node_->data == b.node_->data;
}

Expr operator+(Expr a, Expr b) { return Expr::binary(BinaryOp::kAdd, std::move(a), std::move(b)); }
Expr operator-(Expr a, Expr b) { return Expr::binary(BinaryOp::kSub, std::move(a), std::move(b)); }
Expr operator*(Expr a, Expr b) { return Expr::binary(BinaryOp::kMul, std::move(a), std::move(b)); }
Expr operator/(Expr a, Expr b) { return Expr::binary(BinaryOp::kDiv, std::move(a), std::move(b)); }
Expr operator-(Expr a) { return Expr::unary(UnaryOp::kNeg, std::move(a)); }

std::size_t PiecewiseNode::piece(double t) const {
  // Pieces are closed on the right: t == b[k] still selects values[k].
  return static_cast<std::size_t>(std::lower_bound(breakpoints.begin(), breakpoints.end(), t) -
                                  breakpoints.begin());
}

Expr parse(std::string_view source, std::size_t n_x, std::size_t n_u) {
  return Parser(source, n_x, n_u).parse_all();
}

std::string unparse(const Expr& e) {
  std::string out;
  unparse_into(e, out);
  return out;
}

double eval_real(const Expr& e, double t, std::span<const double> u, std::span<const double> x) {
  return std::visit(Overloaded{
                        [](const ConstNode& c) { return c.value; },
                        [&](const VarNode& v) {
                          switch (v.kind) {
                            case VarKind::kTime: return t;
                            case VarKind::kState:
                              if (v.index >= x.size()) throw DimensionError("state index out of range");
                              return x[v.index];
                            case VarKind::kInput:
                              if (v.index >= u.size()) throw DimensionError("input index out of range");
                              return u[v.index];
                          }
                          return 0.0;
                        },
                        [&](const UnaryNode& n) { return elementary(n.op, eval_real(n.operand, t, u, x)); },
                        [&](const BinaryNode& n) {
                          return apply(n.op, eval_real(n.lhs, t, u, x), eval_real(n.rhs, t, u, x));
                        },
                        [&](const PiecewiseNode& p) { return p.values[p.piece(t)]; },
                    },
                    e.node().data);
}

Interval eval_interval(const Expr& e, const Interval& t, const IntervalVector& u, const IntervalVector& x) {
  return std::visit(Overloaded{
                        [](const ConstNode& c) { return Interval(c.value); },
                        [&](const VarNode& v) {
                          switch (v.kind) {
                            case VarKind::kTime: return t;
                            case VarKind::kState:
                              if (v.index >= x.size()) throw DimensionError("state index out of range");
                              return x[v.index];
                            case VarKind::kInput:
                              if (v.index >= u.size()) throw DimensionError("input index out of range");
                              return u[v.index];
                          }
                          return Interval();
                        },
                        [&](const UnaryNode& n) { return elementary(n.op, eval_interval(n.operand, t, u, x)); },
                        [&](const BinaryNode& n) {
                          return apply(n.op, eval_interval(n.lhs, t, u, x), eval_interval(n.rhs, t, u, x));
                        },
                        [&](const PiecewiseNode& p) {
                          const std::size_t first = p.piece(t.lo());
                          const std::size_t last = p.piece(t.hi());
                          const auto [lo, hi] = std::minmax_element(p.values.begin() + static_cast<std::ptrdiff_t>(first),
                                                                    p.values.begin() + static_cast<std::ptrdiff_t>(last) + 1);
                          return Interval(*lo, *hi);
                        },
                    },
                    e.node().data);
}

bool depends_only_on_time(const Expr& e) {
  const VariableUsage usage = variable_usage(e);
  return usage.max_state == 0 && usage.max_input == 0;
}

VariableUsage variable_usage(const Expr& e) {
  VariableUsage usage;
  collect_usage(e, usage);
  return usage;
}

std::vector<double> time_breakpoints(const Expr& e) {
  std::vector<double> out;
  collect_breakpoints(e, out);
  sort_unique(out);
  return out;
}

namespace {

bool is_constant(const Expr& e) {
  const ExprNode& n = e.node();
  if (std::holds_alternative<ConstNode>(n.data)) return true;
  if (const auto* u = std::get_if<UnaryNode>(&n.data)) return is_constant(u->operand);
  if (const auto* b = std::get_if<BinaryNode>(&n.data)) return is_constant(b->lhs) && is_constant(b->rhs);
  return false;
}

std::optional<std::size_t> state_index(const Expr& e) {
  const auto* v = std::get_if<VarNode>(&e.node().data);
  if (v && v->kind == VarKind::kState) return v->index;
  return std::nullopt;
}

// Coefficient and state index when `term` is c*x_k, x_k*c, x_k/c, -x_k or x_k.
std::optional<std::pair<double, std::size_t>> linear_term(const Expr& term) {
  if (const auto k = state_index(term)) return std::pair{1.0, *k};
  const ExprNode& n = term.node();
  if (const auto* u = std::get_if<UnaryNode>(&n.data)) {
    if (u->op != UnaryOp::kNeg) return std::nullopt;
    auto inner = linear_term(u->operand);
    if (inner) inner->first = -inner->first;
    return inner;
  }
  const auto* b = std::get_if<BinaryNode>(&n.data);
  if (!b) return std::nullopt;
  if (b->op == BinaryOp::kMul) {
    if (is_constant(b->lhs)) {
      if (const auto k = state_index(b->rhs)) return std::pair{eval_real(b->lhs, 0.0, {}, {}), *k};
    }
    if (is_constant(b->rhs)) {
      if (const auto k = state_index(b->lhs)) return std::pair{eval_real(b->rhs, 0.0, {}, {}), *k};
    }
  }
  if (b->op == BinaryOp::kDiv && is_constant(b->rhs)) {
    if (const auto k = state_index(b->lhs)) return std::pair{1.0 / eval_real(b->rhs, 0.0, {}, {}), *k};
  }
  return std::nullopt;
}

void collect_summands(const Expr& e, bool negate, std::vector<std::pair<Expr, bool>>& out) {
  if (const auto* b = std::get_if<BinaryNode>(&e.node().data)) {
    if (b->op == BinaryOp::kAdd || b->op == BinaryOp::kSub) {
      collect_summands(b->lhs, negate, out);
      collect_summands(b->rhs, b->op == BinaryOp::kSub ? !negate : negate, out);
      return;
    }
  }
  out.emplace_back(e, negate);
}

}  // namespace

LinearSplit split_linear_state_terms(const Expr& e, std::size_t n_x) {
  std::vector<std::pair<Expr, bool>> summands;
  collect_summands(e, false, summands);

  LinearSplit out{std::vector<double>(n_x, 0.0), Expr::constant(0.0)};
  std::optional<Expr> rest;
  for (const auto& [term, negate] : summands) {
    const auto lin = linear_term(term);
    if (lin && lin->second < n_x && std::isfinite(lin->first)) {
      out.coefficients[lin->second] += negate ? -lin->first : lin->first;
      continue;
    }
    if (!rest) {
      rest = negate ? -term : term;
    } else {
      rest = negate ? *rest - term : *rest + term;
    }
  }
  if (rest) out.remainder = *rest;
  return out;
}

VectorField::VectorField(std::vector<Expr> components, std::size_t n_x, std::size_t n_u)
    : components_(std::move(components)), n_x_(n_x), n_u_(n_u) {
  if (components_.size() != n_x_) {
    throw DimensionError("vector field has " + std::to_string(components_.size()) + " components, expected " +
                         std::to_string(n_x_));
  }
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const VariableUsage usage = variable_usage(components_[i]);
    if (usage.max_state > n_x_ || usage.max_input > n_u_) {
      throw DimensionError("component " + std::to_string(i + 1) + " references an undeclared variable");
    }
  }
}

void VectorField::eval_real(double t, std::span<const double> u, std::span<const double> x,
                            std::span<double> out) const {
  if (x.size() != n_x_ || u.size() != n_u_ || out.size() != n_x_) {
    throw DimensionError("vector field evaluated with mismatched dimensions");
  }
  for (std::size_t i = 0; i < n_x_; ++i) out[i] = ivobs::eval_real(components_[i], t, u, x);
}

std::vector<double> VectorField::eval_real(double t, std::span<const double> u, std::span<const double> x) const {
  std::vector<double> out(n_x_);
  eval_real(t, u, x, out);
  return out;
}

Interval VectorField::eval_interval(std::size_t i, const Interval& t, const IntervalVector& u,
                                    const IntervalVector& x) const {
  return ivobs::eval_interval(components_.at(i), t, u, x);
}

std::vector<double> VectorField::time_breakpoints() const {
  std::vector<double> out;
  for (const auto& c : components_) collect_breakpoints(c, out);
  sort_unique(out);
  return out;
}

}  // namespace ivobs
