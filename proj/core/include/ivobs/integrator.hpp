#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ivobs {

/// Right-hand side x' = rhs(t, x), written into `dx`.
using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;

struct IntegConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-9;
  double max_step = std::numeric_limits<double>::infinity();
  /// Integration stops with kDiverged once max |x_i| exceeds this.
  double blow_up_threshold = 1e12;
  /// Times where the rhs may jump; steps never straddle them.
  std::vector<double> breakpoints;
  /// Sorted times at which the solution is reported.
  std::vector<double> output_times;
  /// Consecutive rejected steps tolerated before giving up.
  std::size_t max_rejections = 50;
  std::size_t max_steps = 20'000'000;
  /// Switch a segment to a Rosenbrock 2(3) method once the explicit steps
  /// are stability-limited.
  bool stiff_switch = true;
  /// Keep per-step interpolation data for dense_eval().
  bool keep_dense = false;

  /// Throws std::invalid_argument on non-positive tolerances or unsorted times.
  void validate(double t0, double tf) const;
};

enum class IntegStatus { kCompleted, kDiverged, kStepUnderflow, kRhsError };

const char* to_string(IntegStatus status);

/// One accepted step [t, t + h] with its quartic continuous extension.
struct DenseStep {
  double t = 0;
  double h = 0;
  std::vector<double> coeffs;  // 5 blocks of n values
};

struct OdeSolution {
  std::size_t dimension = 0;
  /// Requested output times reached before termination, with their states.
  std::vector<double> times;
  std::vector<std::vector<double>> states;

  IntegStatus status = IntegStatus::kCompleted;
  /// Last time successfully integrated to.
  double final_time = 0;
  std::vector<double> final_state;
  std::string message;

  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
  /// Accepted steps taken by the stiff fallback.
  std::size_t stiff_steps = 0;

  /// Populated when IntegConfig::keep_dense is set.
  std::vector<DenseStep> dense;
};

/// Adaptive Dormand-Prince 5(4) integration with PI step-size control.
///
/// When stiffness is detected the rest of the segment is integrated with a
/// linearly implicit Rosenbrock method (finite-difference Jacobian).
///
/// The horizon is split at configured breakpoints and each segment is
/// integrated separately; the first stage of a segment is evaluated one ulp
/// inside it so that piecewise inputs select the segment's piece.
OdeSolution integrate(const OdeRhs& rhs, std::span<const double> x0, double t0, double tf,
                      const IntegConfig& config);

/// Evaluates the continuous extension at t. Requires keep_dense. Throws
/// std::out_of_range for t outside the integrated range.
std::vector<double> dense_eval(const OdeSolution& solution, double t);

}  // namespace ivobs
