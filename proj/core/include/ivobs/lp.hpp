#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "ivobs/matrix.hpp"

namespace ivobs {

/// minimize c^T x  subject to  A x <= b,  lower <= x <= upper.
///
/// Bounds may be infinite. `lower`/`upper` default to [0, +inf) when left empty.
struct DenseLP {
  std::vector<double> objective;
  Matrix A;
  std::vector<double> b;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t num_variables() const { return objective.size(); }
  /// Throws DimensionError on inconsistent sizes or zero variables.
  void validate() const;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus status);

struct LpSolution {
  std::vector<double> values;
  double objective = std::numeric_limits<double>::quiet_NaN();
  LpStatus status = LpStatus::kInfeasible;
};

/// Two-phase dense tableau simplex with Bland's anti-cycling rule.
/// Never throws for infeasible or unbounded problems; those are status codes.
LpSolution solve_lp(const DenseLP& lp);

}  // namespace ivobs
