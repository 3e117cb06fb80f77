#include <cmath>
#include <vector>

#include "doctest.h"
#include "ivobs/tighten.hpp"
#include "support/oracles.hpp"

using namespace ivobs;
using ivobs::testing::Rng;

namespace {

IntervalVector unit_box(std::size_t n) { return IntervalVector(std::vector<Interval>(n, Interval(0, 1))); }

// Calls f on every point of a g^n grid over the box.
template <class F>
void for_grid(const IntervalVector& box, int g, F&& f) {
  const std::size_t n = box.size();
  std::vector<int> idx(n, 0);
  std::vector<double> z(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) z[i] = idx[i] == g - 1 ? box[i].hi() : box[i].lo() + box[i].width() * idx[i] / (g - 1);
    f(z);
    std::size_t k = 0;
    while (k < n && ++idx[k] == g) idx[k++] = 0;
    if (k == n) return;
  }
}

bool satisfies(const Matrix& M, const std::vector<double>& d, const std::vector<double>& z) {
  for (std::size_t r = 0; r < M.rows(); ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) s += M(r, j) * z[j];
    if (s > d[r]) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("tighten") {
  TEST_CASE("face of an ordered box") {
    const std::vector<double> v{0, 0}, w{2, 4};
    const FaceBox f = face(v, w, 0, Side::kLower);
    CHECK(f.box == IntervalVector{Interval(0), Interval(0, 4)});
    CHECK(f.fixed_index == 0);
    CHECK(f.fixed_side == Side::kLower);
  }

  TEST_CASE("face repairs crossed bounds at the midpoint") {
    const std::vector<double> v{3, 0}, w{1, 4};
    CHECK(face(v, w, 0, Side::kLower).box == IntervalVector{Interval(2), Interval(0, 4)});
    CHECK(face(v, w, 0, Side::kUpper).box == IntervalVector{Interval(2), Interval(0, 4)});
    CHECK(face(v, w, 1, Side::kUpper).box == IntervalVector{Interval(2, 2), Interval(4)});
  }

  TEST_CASE("face of a point box") {
    const std::vector<double> p{1, 1};
    CHECK(face(p, p, 1, Side::kUpper).box == IntervalVector{Interval(1), Interval(1)});
  }

  TEST_CASE("face argument errors") {
    const std::vector<double> v{0, 0}, w{1};
    CHECK_THROWS_AS(face(v, w, 0, Side::kLower), DimensionError);
    CHECK_THROWS_AS(face(v, v, 2, Side::kLower), DimensionError);
  }

  TEST_CASE("faces of ordered boxes are exact") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = static_cast<std::size_t>(rng.integer(1, 4));
      std::vector<double> v(n), w(n);
      for (std::size_t j = 0; j < n; ++j) {
        const Interval x = rng.interval(-5, 5);
        v[j] = x.lo();
        w[j] = x.hi();
      }
      const std::size_t i = static_cast<std::size_t>(rng.integer(0, static_cast<int>(n) - 1));
      const Side side = rng.coin() ? Side::kLower : Side::kUpper;
      const FaceBox f = face(v, w, i, side);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          const double pinned = side == Side::kLower ? v[j] : w[j];
          CHECK(f.box[j] == Interval(pinned));
        } else {
          CHECK(f.box[j] == Interval(v[j], w[j]));
        }
      }
    }
  }

  TEST_CASE("single-row tightening") {
    TightenStats stats;
    CHECK(tighten_interval(unit_box(2), Matrix{{1, 0}}, std::vector<double>{0.5}, &stats) ==
          IntervalVector{Interval(0, 0.5), Interval(0, 1)});
    CHECK(stats.updates == 1);
    CHECK(stats.clamps == 0);
    CHECK(tighten_interval(unit_box(2), Matrix{{-1, 0}}, std::vector<double>{-0.5}) ==
          IntervalVector{Interval(0.5, 1), Interval(0, 1)});
    TightenStats slack;
    CHECK(tighten_interval(unit_box(2), Matrix{{1, 1}}, std::vector<double>{10}, &slack) == unit_box(2));
    CHECK(slack.updates == 0);
  }

  TEST_CASE("later columns see earlier updates") {
    // Row x1 + x2 <= 0.5 over [0,1]^2: the x1 update to 0.5 leaves x2's
    // candidate at 0.5 - 0 = 0.5.
    const IntervalVector out = tighten_interval(unit_box(2), Matrix{{1, 1}}, std::vector<double>{0.5});
    CHECK(out == IntervalVector{Interval(0, 0.5), Interval(0, 0.5)});
    // Two rows: x1 >= 0.6 then x1 + x2 <= 0.8 gives x2 <= 0.2 only because
    // the second row sees x1's raised lower bound.
    const IntervalVector chained =
        tighten_interval(unit_box(2), Matrix{{-1, 0}, {1, 1}}, std::vector<double>{-0.6, 0.8});
    CHECK(chained[0].lo() == doctest::Approx(0.6));
    CHECK(chained[0].hi() == doctest::Approx(0.8));
    CHECK(chained[1].lo() == 0.0);
    CHECK(chained[1].hi() == doctest::Approx(0.2));
  }

  TEST_CASE("dimension mismatch") {
    CHECK_THROWS_AS(tighten_interval(unit_box(3), Matrix{{1, 0}}, std::vector<double>{1}), DimensionError);
    CHECK_THROWS_AS(tighten_interval(unit_box(2), Matrix{{1, 0}}, std::vector<double>{1, 2}), DimensionError);
  }

  TEST_CASE("measurement constraints") {
    const Matrix C{{1, 0}};
    const LinearConstraints lc =
        measurement_constraints(C, std::vector<double>{0.7}, std::vector<double>{-0.25}, std::vector<double>{0.25});
    CHECK(lc.M == Matrix{{1, 0}, {-1, 0}});
    REQUIRE(lc.d.size() == 2);
    CHECK(lc.d[0] == doctest::Approx(0.95));
    CHECK(lc.d[1] == doctest::Approx(-0.45));

    const LinearConstraints slab = measurement_constraints(Matrix{{1, 0, 0}}, std::vector<double>{1},
                                                           std::vector<double>{-0.1}, std::vector<double>{0.1});
    CHECK(slab.d[0] == doctest::Approx(1.1));
    CHECK(slab.d[1] == doctest::Approx(-0.9));

    const LinearConstraints exact = measurement_constraints(Matrix{{2, 1}}, std::vector<double>{3},
                                                            std::vector<double>{0}, std::vector<double>{0});
    CHECK(exact.d == std::vector<double>{3, -3});

    CHECK_THROWS_AS(measurement_constraints(C, std::vector<double>{1, 2}, std::vector<double>{0},
                                            std::vector<double>{0}),
                    DimensionError);
  }

  TEST_CASE("measurement slab on the bioreactor box") {
    const IntervalVector box{Interval(0, 10), Interval(0, 100)};
    const IntervalVector out = apply_measurement_constraints(box, Matrix{{1, 0}}, std::vector<double>{0.7},
                                                             std::vector<double>{-0.25}, std::vector<double>{0.25});
    CHECK(out[0].lo() == doctest::Approx(0.45));
    CHECK(out[0].hi() == doctest::Approx(0.95));
    CHECK(out[1] == Interval(0, 100));
  }

  TEST_CASE("inactive slab leaves the box alone") {
    const IntervalVector box{Interval(0.5, 0.8), Interval(0, 100)};
    TightenStats stats;
    CHECK(apply_measurement_constraints(box, Matrix{{1, 0}}, std::vector<double>{0.7}, std::vector<double>{-0.25},
                                        std::vector<double>{0.25}, &stats) == box);
    CHECK(stats.updates == 0);
  }

  TEST_CASE("infeasible slab keeps the box nonempty") {
    TightenStats stats;
    const IntervalVector out = apply_measurement_constraints(unit_box(3), Matrix{{1, 0, 0}}, std::vector<double>{5},
                                                             std::vector<double>{-0.1}, std::vector<double>{0.1},
                                                             &stats);
    CHECK(out == IntervalVector{Interval(1), Interval(0, 1), Interval(0, 1)});
    CHECK(stats.clamps == 1);
  }

  TEST_CASE("a feasible point box is returned unchanged") {
    Rng rng(32);
    for (int trial = 0; trial < 200; ++trial) {
      const std::vector<double> p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
      const Matrix C{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
      const double cz = C(0, 0) * p[0] + C(0, 1) * p[1] + C(0, 2) * p[2];
      const double lo = rng.uniform(-0.5, 0.0), hi = rng.uniform(0.0, 0.5);
      const double y = cz + rng.uniform(lo, hi);
      const IntervalVector box = IntervalVector::point(p);
      CHECK(apply_measurement_constraints(box, C, std::vector<double>{y}, std::vector<double>{lo},
                                          std::vector<double>{hi}) == box);
    }
  }

  TEST_CASE("tightening is sound on random constraints") {
    Rng rng(33);
    for (int trial = 0; trial < 120; ++trial) {
      const std::size_t n = static_cast<std::size_t>(rng.integer(2, 3));
      const std::size_t m = static_cast<std::size_t>(rng.integer(1, 4));
      IntervalVector box(n);
      for (std::size_t j = 0; j < n; ++j) box[j] = rng.interval(-3, 3);
      Matrix M(m, n);
      std::vector<double> d(m);
      const std::vector<double> anchor = rng.inside(box);
      for (std::size_t r = 0; r < m; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          M(r, j) = rng.coin(0.8) ? rng.uniform(-2, 2) : 0.0;
          s += M(r, j) * anchor[j];
        }
        d[r] = s + rng.uniform(-0.5, 1.5);
      }
      const IntervalVector out = tighten_interval(box, M, d);
      CHECK(out.subset_of(box));
      CHECK(tighten_interval(out, M, d).subset_of(out));

      const int g = n == 2 ? 100 : 22;
      std::size_t missed = 0;
      for_grid(box, g, [&](const std::vector<double>& z) {
        if (!satisfies(M, d, z)) return;
        for (std::size_t j = 0; j < n; ++j) {
          const double slack = 1e-12 * (1.0 + std::abs(z[j]));
          if (z[j] < out[j].lo() - slack || z[j] > out[j].hi() + slack) {
            ++missed;
            return;
          }
        }
      });
      CHECK(missed == 0);
    }
  }
}
