#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ivobs/interval.hpp"
#include "ivobs/matrix.hpp"

namespace ivobs {

enum class Side { kLower, kUpper };

/// A box with one coordinate pinned to the lower or upper endpoint.
struct FaceBox {
  IntervalVector box;
  std::size_t fixed_index = 0;
  Side fixed_side = Side::kLower;
};

/// The i-th lower or upper face of [v, w] (i zero-based).
///
/// Bounds are first repaired componentwise to v_j' = min(v_j, m_j) and
/// w_j' = max(w_j, m_j) with m_j the midpoint, so crossed bounds (v_j > w_j)
/// still produce a nonempty box.
FaceBox face(std::span<const double> v, std::span<const double> w, std::size_t i, Side side);

/// Linear inequality system M z <= d.
struct LinearConstraints {
  Matrix M;
  std::vector<double> d;
};

/// Counters for tightening passes.
struct TightenStats {
  /// Bound updates that moved an endpoint.
  std::size_t updates = 0;
  /// Updates where the candidate fell outside the current box on the far side
  /// and the median pinned it to the opposite endpoint (locally infeasible row).
  std::size_t clamps = 0;
};

/// Single-pass interval tightening of `box` against M z <= d.
///
/// Rows outer, columns inner; each update is applied in place so later
/// columns and rows see the tightened bounds. Output is nonempty and a subset
/// of `box`, and contains every z in `box` satisfying M z <= d.
IntervalVector tighten_interval(const IntervalVector& box, const Matrix& M, std::span<const double> d,
                                TightenStats* stats = nullptr);
IntervalVector tighten_interval(const IntervalVector& box, const LinearConstraints& constraints,
                                TightenStats* stats = nullptr);

/// Measurement slab y - vU <= C z <= y - vL as M = [C; -C], d = (y - vL, -y + vU).
LinearConstraints measurement_constraints(const Matrix& C, std::span<const double> y, std::span<const double> v_lo,
                                          std::span<const double> v_hi);

/// tighten_interval(box, measurement_constraints(C, y, v_lo, v_hi)).
IntervalVector apply_measurement_constraints(const IntervalVector& box, const Matrix& C, std::span<const double> y,
                                             std::span<const double> v_lo, std::span<const double> v_hi,
                                             TightenStats* stats = nullptr);

}  // namespace ivobs
