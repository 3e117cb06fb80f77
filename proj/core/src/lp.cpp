#include "ivobs/lp.hpp"

#include <cmath>
#include <optional>

#include "ivobs/errors.hpp"

namespace ivobs {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;
constexpr double kFeasTol = 1e-9;

// How an original variable maps onto nonnegative standard-form columns.
enum class Mapping { kShift, kReflect, kSplit };

struct ColumnMap {
  Mapping mapping;
  std::size_t column;  // first standard-form column
  double offset;       // lo (shift) or hi (reflect)
};

// Dense tableau; the last row holds reduced costs, the last column the rhs.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double& cost(std::size_t j) { return at(rows_, j); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    at(r, c) = 1.0;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

enum class PhaseResult { kOptimal, kUnbounded };

// Runs Bland's-rule simplex on columns [0, allowed_cols).
PhaseResult run_simplex(Tableau& t, std::vector<std::size_t>& basis, std::size_t allowed_cols) {
  for (;;) {
    std::optional<std::size_t> enter;
    for (std::size_t j = 0; j < allowed_cols; ++j) {
      if (t.cost(j) < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (!enter) return PhaseResult::kOptimal;

    std::optional<std::size_t> leave;
    double best = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, *enter);
      if (a <= kPivotTol) continue;
      const double ratio = t.rhs(i) / a;
      if (!leave || ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && basis[i] < basis[*leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (!leave) return PhaseResult::kUnbounded;
    t.pivot(*leave, *enter);
    basis[*leave] = *enter;
  }
}

}  // namespace

void DenseLP::validate() const {
  const std::size_t n = objective.size();
  if (n == 0) throw DimensionError("LP has no variables");
  if (A.rows() != b.size()) throw DimensionError("LP row count and rhs length differ");
  if (A.rows() > 0 && A.cols() != n) throw DimensionError("LP constraint columns differ from variable count");
  if (!lower.empty() && lower.size() != n) throw DimensionError("LP lower bounds have wrong length");
  if (!upper.empty() && upper.size() != n) throw DimensionError("LP upper bounds have wrong length");
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "?";
}

LpSolution solve_lp(const DenseLP& lp) {
  lp.validate();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = lp.num_variables();
  auto lower_of = [&](std::size_t j) { return lp.lower.empty() ? 0.0 : lp.lower[j]; };
  auto upper_of = [&](std::size_t j) { return lp.upper.empty() ? kInf : lp.upper[j]; };

  // Map each variable onto nonnegative columns.
  std::vector<ColumnMap> maps(n);
  std::size_t ncols = 0;
  std::vector<std::pair<std::size_t, double>> bound_rows;  // (column, y upper bound)
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lower_of(j);
    const double hi = upper_of(j);
    if (lo > hi) return {{}, std::numeric_limits<double>::quiet_NaN(), LpStatus::kInfeasible};
    if (std::isfinite(lo)) {
      maps[j] = {Mapping::kShift, ncols, lo};
      if (std::isfinite(hi)) bound_rows.emplace_back(ncols, hi - lo);
      ncols += 1;
    } else if (std::isfinite(hi)) {
      maps[j] = {Mapping::kReflect, ncols, hi};
      ncols += 1;
    } else {
      maps[j] = {Mapping::kSplit, ncols, 0.0};
      ncols += 2;
    }
  }

  const std::size_t m = lp.A.rows() + bound_rows.size();
  std::vector<std::vector<double>> rows(m, std::vector<double>(ncols, 0.0));
  std::vector<double> rhs(m, 0.0);
  for (std::size_t i = 0; i < lp.A.rows(); ++i) {
    rhs[i] = lp.b[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double a = lp.A(i, j);
      if (a == 0.0) continue;
      const ColumnMap& cm = maps[j];
      switch (cm.mapping) {
        case Mapping::kShift:
          rows[i][cm.column] += a;
          rhs[i] -= a * cm.offset;
          break;
        case Mapping::kReflect:
          rows[i][cm.column] -= a;
          rhs[i] -= a * cm.offset;
          break;
        case Mapping::kSplit:
          rows[i][cm.column] += a;
          rows[i][cm.column + 1] -= a;
          break;
      }
    }
  }
  for (std::size_t k = 0; k < bound_rows.size(); ++k) {
    rows[lp.A.rows() + k][bound_rows[k].first] = 1.0;
    rhs[lp.A.rows() + k] = bound_rows[k].second;
  }

  std::vector<double> cost(ncols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const ColumnMap& cm = maps[j];
    const double c = lp.objective[j];
    switch (cm.mapping) {
      case Mapping::kShift: cost[cm.column] += c; break;
      case Mapping::kReflect: cost[cm.column] -= c; break;
      case Mapping::kSplit:
        cost[cm.column] += c;
        cost[cm.column + 1] -= c;
        break;
    }
  }

  // Columns: structural | slacks | artificials.
  std::size_t n_art = 0;
  for (double r : rhs) n_art += r < 0.0 ? 1 : 0;
  const std::size_t slack0 = ncols;
  const std::size_t art0 = ncols + m;
  const std::size_t total = art0 + n_art;
  Tableau t(m, total);
  std::vector<std::size_t> basis(m);
  std::size_t next_art = art0;
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < ncols; ++j) t.at(i, j) = sign * rows[i][j];
    t.at(i, slack0 + i) = sign;
    t.rhs(i) = sign * rhs[i];
    if (sign < 0.0) {
      t.at(i, next_art) = 1.0;
      basis[i] = next_art++;
    } else {
      basis[i] = slack0 + i;
    }
  }

  // Phase 1: minimize the sum of artificials.
  if (n_art > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < art0) continue;
      for (std::size_t j = 0; j <= total; ++j) {
        if (j >= art0 && j < total) continue;
        t.at(m, j) -= t.at(i, j);
      }
    }
    run_simplex(t, basis, total);
    if (-t.at(m, total) > kFeasTol) return {{}, std::numeric_limits<double>::quiet_NaN(), LpStatus::kInfeasible};
    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < art0) continue;
      for (std::size_t j = 0; j < art0; ++j) {
        if (std::abs(t.at(i, j)) > kPivotTol) {
          t.pivot(i, j);
          basis[i] = j;
          break;
        }
      }
    }
  }

  // Phase 2 reduced costs.
  for (std::size_t j = 0; j <= total; ++j) t.at(m, j) = j < ncols ? cost[j] : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double cb = basis[i] < ncols ? cost[basis[i]] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= total; ++j) t.at(m, j) -= cb * t.at(i, j);
  }
  if (run_simplex(t, basis, art0) == PhaseResult::kUnbounded) {
    return {{}, -std::numeric_limits<double>::infinity(), LpStatus::kUnbounded};
  }

  std::vector<double> y(total, 0.0);
  for (std::size_t i = 0; i < m; ++i) y[basis[i]] = t.rhs(i);

  LpSolution sol;
  sol.status = LpStatus::kOptimal;
  sol.values.resize(n);
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const ColumnMap& cm = maps[j];
    switch (cm.mapping) {
      case Mapping::kShift: sol.values[j] = cm.offset + y[cm.column]; break;
      case Mapping::kReflect: sol.values[j] = cm.offset - y[cm.column]; break;
      case Mapping::kSplit: sol.values[j] = y[cm.column] - y[cm.column + 1]; break;
    }
    sol.objective += lp.objective[j] * sol.values[j];
  }
  return sol;
}

}  // namespace ivobs
