#include "ivobs/interval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace ivobs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// True when some point offset + 2*pi*k lies in [lo, hi].
bool hits_periodic_point(double lo, double hi, double offset) {
  const double k = std::ceil((lo - offset) / kTwoPi);
  return offset + kTwoPi * k <= hi;
}

Interval periodic_range(const Interval& a, double (*fn)(double), double max_at, double min_at) {
  if (a.width() >= kTwoPi) return {-1.0, 1.0};
  const double flo = fn(a.lo());
  const double fhi = fn(a.hi());
  double lo = std::min(flo, fhi);
  double hi = std::max(flo, fhi);
  if (hits_periodic_point(a.lo(), a.hi(), max_at)) hi = 1.0;
  if (hits_periodic_point(a.lo(), a.hi(), min_at)) lo = -1.0;
  return {lo, hi};
}

}  // namespace

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw DomainError("non-finite interval endpoint");
  }
  if (!(lo <= hi)) {
    throw std::invalid_argument("interval lower bound exceeds upper bound");
  }
}

std::ostream& operator<<(std::ostream& os, const Interval& x) {
  return os << '[' << x.lo() << ", " << x.hi() << ']';
}

Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi())};
}

Interval operator+(const Interval& a, const Interval& b) { return {a.lo() + b.lo(), a.hi() + b.hi()}; }

Interval operator-(const Interval& a, const Interval& b) { return {a.lo() - b.hi(), a.hi() - b.lo()}; }

Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = a.lo() * b.lo();
  const double p2 = a.lo() * b.hi();
  const double p3 = a.hi() * b.lo();
  const double p4 = a.hi() * b.hi();
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) throw DivisionByZero("interval division by an interval containing zero");
  const double q1 = a.lo() / b.lo();
  const double q2 = a.lo() / b.hi();
  const double q3 = a.hi() / b.lo();
  const double q4 = a.hi() / b.hi();
  return {std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4})};
}

Interval operator-(const Interval& a) { return {-a.hi(), -a.lo()}; }

Interval operator+(const Interval& a, double b) { return {a.lo() + b, a.hi() + b}; }

Interval operator*(double a, const Interval& b) {
  return a >= 0.0 ? Interval(a * b.lo(), a * b.hi()) : Interval(a * b.hi(), a * b.lo());
}

const char* to_string(UnaryOp op) {
  switch (op) {
    case UnaryOp::kNeg: return "neg";
    case UnaryOp::kSin: return "sin";
    case UnaryOp::kCos: return "cos";
    case UnaryOp::kSqrt: return "sqrt";
    case UnaryOp::kExp: return "exp";
  }
  return "?";
}

Interval neg(const Interval& a) { return -a; }

Interval sin(const Interval& a) {
  return periodic_range(a, static_cast<double (*)(double)>(std::sin), 0.5 * kPi, -0.5 * kPi);
}

Interval cos(const Interval& a) {
  return periodic_range(a, static_cast<double (*)(double)>(std::cos), 0.0, kPi);
}

Interval sqrt(const Interval& a) {
  if (a.lo() < 0.0) throw DomainError("sqrt of an interval with negative lower bound");
  return {std::sqrt(a.lo()), std::sqrt(a.hi())};
}

Interval exp(const Interval& a) { return {std::exp(a.lo()), std::exp(a.hi())}; }

Interval elementary(UnaryOp op, const Interval& a) {
  switch (op) {
    case UnaryOp::kNeg: return neg(a);
    case UnaryOp::kSin: return sin(a);
    case UnaryOp::kCos: return cos(a);
    case UnaryOp::kSqrt: return sqrt(a);
    case UnaryOp::kExp: return exp(a);
  }
  throw std::logic_error("unhandled unary op");
}

double elementary(UnaryOp op, double a) {
  switch (op) {
    case UnaryOp::kNeg: return -a;
    case UnaryOp::kSin: return std::sin(a);
    case UnaryOp::kCos: return std::cos(a);
    case UnaryOp::kSqrt:
      if (a < 0.0) throw DomainError("sqrt of a negative number");
      return std::sqrt(a);
    case UnaryOp::kExp: return std::exp(a);
  }
  throw std::logic_error("unhandled unary op");
}

IntervalVector::IntervalVector(std::span<const double> lo, std::span<const double> hi) {
  if (lo.size() != hi.size()) throw DimensionError("box bounds have different lengths");
  items_.reserve(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) items_.emplace_back(lo[i], hi[i]);
}

IntervalVector IntervalVector::point(std::span<const double> x) { return IntervalVector(x, x); }

std::vector<double> IntervalVector::lower() const {
  std::vector<double> out;
  out.reserve(items_.size());
  for (const auto& x : items_) out.push_back(x.lo());
  return out;
}

std::vector<double> IntervalVector::upper() const {
  std::vector<double> out;
  out.reserve(items_.size());
  for (const auto& x : items_) out.push_back(x.hi());
  return out;
}

bool IntervalVector::contains(std::span<const double> x) const {
  if (x.size() != items_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!items_[i].contains(x[i])) return false;
  }
  return true;
}

bool IntervalVector::subset_of(const IntervalVector& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!items_[i].subset_of(other[i])) return false;
  }
  return true;
}

std::ostream& operator<<(std::ostream& os, const IntervalVector& x) {
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) os << " x ";
    os << x[i];
  }
  return os << ')';
}

Interval linear_natural_extension(std::span<const double> a, const IntervalVector& z) {
  if (a.size() != z.size()) throw DimensionError("coefficient vector and box differ in dimension");
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] >= 0.0) {
      lo += a[i] * z[i].lo();
      hi += a[i] * z[i].hi();
    } else {
      lo += a[i] * z[i].hi();
      hi += a[i] * z[i].lo();
    }
  }
  return {lo, hi};
}

}  // namespace ivobs
