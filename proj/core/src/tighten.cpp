#include "ivobs/tighten.hpp"

#include <algorithm>
#include <string>

#include "ivobs/errors.hpp"

namespace ivobs {

namespace {

double median3(double a, double b, double c) {
  if (a > b) std::swap(a, b);
  if (b > c) std::swap(b, c);
  if (a > b) std::swap(a, b);
  return b;
}

}  // namespace

FaceBox face(std::span<const double> v, std::span<const double> w, std::size_t i, Side side) {
  if (v.size() != w.size()) throw DimensionError("face: bound vectors differ in dimension");
  if (i >= v.size()) throw DimensionError("face: index " + std::to_string(i) + " out of range");
  std::vector<Interval> items;
  items.reserve(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double m = 0.5 * (v[j] + w[j]);
    const double lo = std::min(v[j], m);
    const double hi = std::max(w[j], m);
    if (j == i) {
      items.emplace_back(side == Side::kLower ? lo : hi);
    } else {
      items.emplace_back(lo, hi);
    }
  }
  return {IntervalVector(std::move(items)), i, side};
}

IntervalVector tighten_interval(const IntervalVector& box, const Matrix& M, std::span<const double> d,
                                TightenStats* stats) {
  const std::size_t n = box.size();
  if (M.cols() != n) throw DimensionError("tighten: constraint columns do not match box dimension");
  if (M.rows() != d.size()) throw DimensionError("tighten: constraint rows do not match rhs length");

  std::vector<double> lo = box.lower();
  std::vector<double> hi = box.upper();

  for (std::size_t i = 0; i < M.rows(); ++i) {
    const auto row = M.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double mij = row[j];
      if (mij == 0.0) continue;
      double rest = d[i];
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j) continue;
        rest += std::max(-row[k] * lo[k], -row[k] * hi[k]);
      }
      const double candidate = rest / mij;
      const double gamma = median3(lo[j], hi[j], candidate);
      double& target = mij > 0.0 ? hi[j] : lo[j];
      if (stats) {
        if (gamma != target) ++stats->updates;
        if (mij > 0.0 ? candidate < lo[j] : candidate > hi[j]) ++stats->clamps;
      }
      target = gamma;
    }
  }

  std::vector<Interval> items;
  items.reserve(n);
  for (std::size_t j = 0; j < n; ++j) items.emplace_back(lo[j], hi[j]);
  return IntervalVector(std::move(items));
}

IntervalVector tighten_interval(const IntervalVector& box, const LinearConstraints& constraints, TightenStats* stats) {
  return tighten_interval(box, constraints.M, constraints.d, stats);
}

LinearConstraints measurement_constraints(const Matrix& C, std::span<const double> y, std::span<const double> v_lo,
                                          std::span<const double> v_hi) {
  const std::size_t ny = C.rows();
  if (y.size() != ny || v_lo.size() != ny || v_hi.size() != ny) {
    throw DimensionError("measurement constraints: y, vL, vU must match the rows of C");
  }
  LinearConstraints out{vstack(C, -C), std::vector<double>(2 * ny)};
  for (std::size_t k = 0; k < ny; ++k) {
    out.d[k] = y[k] - v_lo[k];
    out.d[ny + k] = -y[k] + v_hi[k];
  }
  return out;
}

IntervalVector apply_measurement_constraints(const IntervalVector& box, const Matrix& C, std::span<const double> y,
                                             std::span<const double> v_lo, std::span<const double> v_hi,
                                             TightenStats* stats) {
  return tighten_interval(box, measurement_constraints(C, y, v_lo, v_hi), stats);
}

}  // namespace ivobs
