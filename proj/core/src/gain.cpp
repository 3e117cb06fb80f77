#include "ivobs/gain.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ivobs/errors.hpp"

namespace ivobs {

void LinearObserverData::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) throw DimensionError("A must be a nonempty square matrix");
  if (C.rows() == 0 || C.cols() != A.cols()) throw DimensionError("C must have as many columns as A");
}

double margin_of(const LinearObserverData& data, const Matrix& L) {
  data.validate();
  if (L.rows() != data.n_x() || L.cols() != data.n_y()) throw DimensionError("gain must be n_x by n_y");
  const Matrix M = data.A - L * data.C;
  double margin = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < M.rows(); ++i) {
    double row = M(i, i);
    for (std::size_t j = 0; j < M.cols(); ++j) {
      if (j != i) row += std::abs(M(i, j));
    }
    margin = std::max(margin, row);
  }
  return margin;
}

DenseLP build_gain_lp(const LinearObserverData& data, double s_min, double l_bound) {
  data.validate();
  if (!(s_min < 0.0)) throw std::invalid_argument("s_min must be negative");
  if (!(l_bound > 0.0)) throw std::invalid_argument("l_bound must be positive");

  const std::size_t nx = data.n_x();
  const std::size_t ny = data.n_y();
  const std::size_t n_l = nx * ny;
  const std::size_t n_b = nx * (nx - 1);
  const std::size_t n_vars = n_l + n_b + 1;
  const std::size_t s_var = n_vars - 1;
  auto l_var = [&](std::size_t i, std::size_t k) { return i * ny + k; };
  // Off-diagonal b_ij, j != i, packed row-major with the diagonal skipped.
  auto b_var = [&](std::size_t i, std::size_t j) { return n_l + i * (nx - 1) + (j < i ? j : j - 1); };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  DenseLP lp;
  lp.objective.assign(n_vars, 0.0);
  lp.objective[s_var] = 1.0;
  lp.lower.assign(n_vars, 0.0);
  lp.upper.assign(n_vars, kInf);
  for (std::size_t v = 0; v < n_l; ++v) {
    lp.lower[v] = -l_bound;
    lp.upper[v] = l_bound;
  }
  lp.lower[s_var] = s_min;

  const std::size_t n_rows = 2 * n_b + nx;
  lp.A = Matrix(n_rows, n_vars);
  lp.b.assign(n_rows, 0.0);

  std::size_t r = 0;
  // l_i^T C_j - b_ij <= a_ij
  for (int sign : {1, -1}) {
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < nx; ++j) {
        if (j == i) continue;
        for (std::size_t k = 0; k < ny; ++k) lp.A(r, l_var(i, k)) = sign * data.C(k, j);
        lp.A(r, b_var(i, j)) = -1.0;
        lp.b[r] = sign * data.A(i, j);
        ++r;
      }
    }
  }
  // -l_i^T C_i + sum_{j != i} b_ij - s <= -a_ii
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t k = 0; k < ny; ++k) lp.A(r, l_var(i, k)) = -data.C(k, i);
    for (std::size_t j = 0; j < nx; ++j) {
      if (j != i) lp.A(r, b_var(i, j)) = 1.0;
    }
    lp.A(r, s_var) = -1.0;
    lp.b[r] = -data.A(i, i);
    ++r;
  }
  return lp;
}

GainResult synthesize_gain(const LinearObserverData& data, double s_min, double l_bound) {
  const DenseLP lp = build_gain_lp(data, s_min, l_bound);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) {
    throw SynthesisFailed(std::string("gain LP is ") + to_string(sol.status));
  }

  GainResult out;
  out.L = Matrix(data.n_x(), data.n_y());
  for (std::size_t i = 0; i < data.n_x(); ++i) {
    for (std::size_t k = 0; k < data.n_y(); ++k) out.L(i, k) = sol.values[i * data.n_y() + k];
  }
  out.s_star = sol.objective;
  out.margin = margin_of(data, out.L);
  out.contracting = out.margin < 0.0;
  if (!(out.s_star < 0.0)) {
    std::ostringstream msg;
    msg << "no certified gain: optimal s* = " << out.s_star << " is not negative";
    throw SynthesisFailed(msg.str());
  }
  return out;
}

}  // namespace ivobs
