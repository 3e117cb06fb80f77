#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <vector>

#include "ivobs/errors.hpp"

namespace ivobs {

/// Closed, nonempty real interval [lo, hi] with finite endpoints.
///
/// Endpoint arithmetic is plain round-to-nearest floating point; no outward
/// rounding is performed.
class Interval {
 public:
  constexpr Interval() = default;
  /// Degenerate interval [value, value].
  explicit Interval(double value) : Interval(value, value) {}
  Interval(double lo, double hi);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const { return hi_ - lo_; }
  double mid() const { return 0.5 * (lo_ + hi_); }
  bool is_degenerate() const { return lo_ == hi_; }
  bool contains(double x) const { return lo_ <= x && x <= hi_; }
  bool contains_zero() const { return lo_ <= 0.0 && 0.0 <= hi_; }
  bool subset_of(const Interval& other) const { return other.lo_ <= lo_ && hi_ <= other.hi_; }

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

std::ostream& operator<<(std::ostream& os, const Interval& x);

Interval hull(const Interval& a, const Interval& b);

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
/// Throws DivisionByZero when 0 lies in `b`.
Interval operator/(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);

Interval operator+(const Interval& a, double b);
Interval operator*(double a, const Interval& b);

enum class UnaryOp { kNeg, kSin, kCos, kSqrt, kExp };

const char* to_string(UnaryOp op);

Interval neg(const Interval& a);
Interval sin(const Interval& a);
Interval cos(const Interval& a);
/// Throws DomainError when a.lo() < 0.
Interval sqrt(const Interval& a);
Interval exp(const Interval& a);

/// Tight range of the elementary function `op` over `a`.
Interval elementary(UnaryOp op, const Interval& a);

/// Real counterpart of `elementary`; throws DomainError for sqrt of a negative.
double elementary(UnaryOp op, double a);

/// Axis-aligned box: an ordered list of intervals.
class IntervalVector {
 public:
  IntervalVector() = default;
  explicit IntervalVector(std::size_t n) : items_(n) {}
  IntervalVector(std::initializer_list<Interval> items) : items_(items) {}
  explicit IntervalVector(std::vector<Interval> items) : items_(std::move(items)) {}
  /// Box [lo, hi]; throws DimensionError on size mismatch, std::invalid_argument if lo > hi.
  IntervalVector(std::span<const double> lo, std::span<const double> hi);

  static IntervalVector point(std::span<const double> x);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Interval& operator[](std::size_t i) const { return items_[i]; }
  Interval& operator[](std::size_t i) { return items_[i]; }

  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  std::vector<double> lower() const;
  std::vector<double> upper() const;

  bool contains(std::span<const double> x) const;
  bool subset_of(const IntervalVector& other) const;

  friend bool operator==(const IntervalVector&, const IntervalVector&) = default;

 private:
  std::vector<Interval> items_;
};

std::ostream& operator<<(std::ostream& os, const IntervalVector& x);

/// Natural interval extension of z -> a^T z over the box `z`.
///
/// For each term the endpoints are ordered by the sign of a_i, which makes
/// the result the exact range of the linear map over the box.
Interval linear_natural_extension(std::span<const double> a, const IntervalVector& z);

}  // namespace ivobs
