#include <cmath>
#include <vector>

#include "doctest.h"
#include "ivobs/errors.hpp"
#include "ivobs/gain.hpp"
#include "support/oracles.hpp"

using namespace ivobs;
using ivobs::testing::Rng;

namespace {

const double kSqrt3 = std::sqrt(3.0);

LinearObserverData linearized_data() {
  return {Matrix{{2, 0, 0}, {1, -4, kSqrt3}, {-1, -kSqrt3, -4}}, Matrix{{1, 0, 0}}};
}

// Row values of the Gershgorin expression, computed directly from the entries.
std::vector<double> gershgorin_rows(const Matrix& A, const Matrix& C, const Matrix& L) {
  const std::size_t n = A.rows();
  std::vector<double> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double lc = 0.0;
      for (std::size_t k = 0; k < C.rows(); ++k) lc += L(i, k) * C(k, j);
      rows[i] += i == j ? A(i, j) - lc : std::abs(A(i, j) - lc);
    }
  }
  return rows;
}

}  // namespace

TEST_SUITE("gain") {
  TEST_CASE("LP size for three states and one output") {
    const DenseLP lp = build_gain_lp(linearized_data(), -10, 100);
    CHECK(lp.num_variables() == 10);
    CHECK(lp.A.rows() == 15);
    CHECK(lp.b.size() == 15);
    CHECK(lp.objective[9] == 1.0);
    CHECK(lp.lower[9] == -10.0);
    for (std::size_t v = 0; v < 3; ++v) {
      CHECK(lp.lower[v] == -100.0);
      CHECK(lp.upper[v] == 100.0);
    }
    for (std::size_t v = 3; v < 9; ++v) CHECK(lp.lower[v] == 0.0);
  }

  TEST_CASE("LP argument checks") {
    CHECK_THROWS_AS(build_gain_lp(linearized_data(), 0.0, 100), std::invalid_argument);
    CHECK_THROWS_AS(build_gain_lp(linearized_data(), -1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_gain_lp({Matrix{{1, 2}}, Matrix{{1, 0}}}, -1.0, 1.0), DimensionError);
    CHECK_THROWS_AS(build_gain_lp({Matrix{{1}}, Matrix{{1, 0}}}, -1.0, 1.0), DimensionError);
  }

  TEST_CASE("scalar system drives s to its lower bound") {
    const LinearObserverData data{Matrix{{0.5}}, Matrix{{2.0}}};
    const DenseLP lp = build_gain_lp(data, -3.0, 100.0);
    CHECK(lp.num_variables() == 2);
    REQUIRE(lp.A.rows() == 1);
    CHECK(lp.A(0, 0) == -2.0);
    CHECK(lp.A(0, 1) == -1.0);
    CHECK(lp.b[0] == -0.5);
    const GainResult g = synthesize_gain(data, -3.0, 100.0);
    CHECK(g.s_star == doctest::Approx(-3.0));
    CHECK(g.L(0, 0) == doctest::Approx((0.5 + 3.0) / 2.0));
    CHECK(g.margin == doctest::Approx(-3.0));
    CHECK(g.contracting);
  }

  TEST_CASE("zero output matrix leaves the gain without effect") {
    const LinearObserverData data{Matrix{{-3, 1}, {0.5, -2}}, Matrix{{0, 0}}};
    const GainResult g = synthesize_gain(data, -10.0, 100.0);
    CHECK(g.s_star == doctest::Approx(std::max(-3.0 + 1.0, -2.0 + 0.5)));
    CHECK(g.margin == doctest::Approx(-1.5));
  }

  TEST_CASE("unobservable unstable system has no certificate") {
    const LinearObserverData data{Matrix{{1}}, Matrix{{0}}};
    CHECK_THROWS_AS(synthesize_gain(data, -10.0, 100.0), SynthesisFailed);
    CHECK(margin_of(data, Matrix{{42}}) == 1.0);
  }

  TEST_CASE("margins of the linearized system") {
    const LinearObserverData data = linearized_data();
    const Matrix L2{{4.27}, {1}, {-1}};
    const Matrix L1{{3}, {0}, {0}};
    const std::vector<double> rows2 = gershgorin_rows(data.A, data.C, L2);
    CHECK(rows2[0] == doctest::Approx(-2.27));
    CHECK(rows2[1] == doctest::Approx(-4 + kSqrt3));
    CHECK(rows2[2] == doctest::Approx(-4 + kSqrt3));
    CHECK(margin_of(data, L2) == doctest::Approx(-4 + kSqrt3));
    CHECK(margin_of(data, L1) == doctest::Approx(-1.0));
    CHECK(margin_of(data, Matrix(3, 1)) == doctest::Approx(2.0));
    CHECK(margin_of({Matrix{{-1, 0}, {0, -2}}, Matrix{{1, 1}}}, Matrix(2, 1)) == -1.0);
    CHECK_THROWS_AS(margin_of(data, Matrix(1, 3)), DimensionError);
  }

  TEST_CASE("synthesis on the linearized system") {
    const LinearObserverData data = linearized_data();
    const GainResult g = synthesize_gain(data, -2.27, 10.0);
    CHECK(g.s_star < 0.0);
    CHECK(g.margin <= g.s_star + 1e-9);
    const GainResult d = synthesize_gain(data);
    CHECK(d.s_star < 0.0);
    CHECK(d.margin <= d.s_star + 1e-9);
    CHECK(d.margin == doctest::Approx(margin_of(data, d.L)));
    // The solver must do at least as well as the published gain.
    CHECK(d.s_star <= margin_of(data, Matrix{{4.27}, {1}, {-1}}) + 1e-9);
  }

  TEST_CASE("certificates hold on random systems") {
    Rng rng(51);
    int certified = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t nx = static_cast<std::size_t>(rng.integer(1, 4));
      const std::size_t ny = static_cast<std::size_t>(rng.integer(1, 2));
      Matrix A(nx, nx), C(ny, nx);
      for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < nx; ++j) A(i, j) = rng.uniform(-3, 3);
      for (std::size_t k = 0; k < ny; ++k)
        for (std::size_t j = 0; j < nx; ++j) C(k, j) = rng.coin(0.7) ? rng.uniform(-2, 2) : 0.0;
      const LinearObserverData data{A, C};
      const double s_min = -rng.uniform(0.5, 10.0);
      try {
        const GainResult g = synthesize_gain(data, s_min, 20.0);
        ++certified;
        CHECK(g.s_star < 0.0);
        CHECK(g.s_star >= s_min - 1e-9);
        CHECK(g.margin <= g.s_star + 1e-9);
        const std::vector<double> rows = gershgorin_rows(A, C, g.L);
        for (double r : rows) CHECK(r <= g.s_star + 1e-9);
        for (std::size_t i = 0; i < nx; ++i)
          for (std::size_t k = 0; k < ny; ++k) CHECK(std::abs(g.L(i, k)) <= 20.0 + 1e-9);
      } catch (const SynthesisFailed&) {
        // Only acceptable when even the LP optimum is nonnegative; check that
        // the zero gain is not a certificate either.
        CHECK(margin_of(data, Matrix(nx, ny)) >= -1e-9);
      }
    }
    CHECK(certified > 20);
  }
}
