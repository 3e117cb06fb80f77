#pragma once

#include "ivobs/lp.hpp"
#include "ivobs/matrix.hpp"

namespace ivobs {

/// Linear part x' = A x with output y = C x, used for gain design.
struct LinearObserverData {
  Matrix A;  // n_x by n_x
  Matrix C;  // n_y by n_x

  std::size_t n_x() const { return A.rows(); }
  std::size_t n_y() const { return C.rows(); }
  void validate() const;
};

struct GainResult {
  Matrix L;            // n_x by n_y
  double s_star = 0;   // optimal LP objective
  double margin = 0;   // gershgorin_margin(data, L)
  /// margin < 0: the width dynamics of the unconstrained observer contract.
  bool contracting = false;
};

/// Row-wise Gershgorin margin of A - L C:
/// max_i [ (A-LC)_ii + sum_{j != i} |(A-LC)_ij| ].
double margin_of(const LinearObserverData& data, const Matrix& L);

/// Gain-design LP: minimize s over (L, B, s) subject to
///   l_i^T C_j - b_ij <= a_ij,  -l_i^T C_j - b_ij <= -a_ij   (i != j)
///   -l_i^T C_i + sum_{j != i} b_ij - s <= -a_ii
/// with s >= s_min, |L entries| <= l_bound, B >= 0.
///
/// Variable order: L row-major, then b_ij for i != j in row-major order, then s.
/// Throws std::invalid_argument unless s_min < 0 and l_bound > 0.
DenseLP build_gain_lp(const LinearObserverData& data, double s_min, double l_bound);

/// Solves the gain LP and certifies the result. Throws SynthesisFailed when the
/// LP is not optimal or s* >= 0.
GainResult synthesize_gain(const LinearObserverData& data, double s_min = -10.0, double l_bound = 100.0);

}  // namespace ivobs
