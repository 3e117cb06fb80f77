#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ivobs/expr.hpp"
#include "ivobs/integrator.hpp"
#include "ivobs/interval.hpp"
#include "ivobs/matrix.hpp"
#include "ivobs/tighten.hpp"

namespace ivobs {

/// Interval-valued signal t -> [lower(t), upper(t)], one expression of t per bound.
struct BoundSignal {
  std::vector<Expr> lower;
  std::vector<Expr> upper;

  std::size_t size() const { return lower.size(); }
  /// Throws std::invalid_argument if a lower bound exceeds its upper bound at t.
  IntervalVector at(double t) const;
  void at(double t, std::span<double> lo, std::span<double> hi) const;
  std::vector<double> time_breakpoints() const;

  friend bool operator==(const BoundSignal&, const BoundSignal&) = default;
};

/// Constant bounds as a BoundSignal.
BoundSignal constant_bounds(const IntervalVector& box);

/// x' = f(t, u, x), y = C x + v, with x(t0) in X0, u(t) in U(t), v(t) in V(t).
struct SystemModel {
  VectorField f;
  Matrix C;
  IntervalVector X0;
  double t0 = 0.0;
  double tf = 1.0;
  BoundSignal U;
  BoundSignal V;

  std::size_t n_x() const { return f.n_x(); }
  std::size_t n_u() const { return f.n_u(); }
  std::size_t n_y() const { return C.rows(); }
  /// Throws DimensionError / std::invalid_argument on inconsistent data.
  void validate() const;
  /// Breakpoints of every piecewise node in f, U and V.
  std::vector<double> time_breakpoints() const;

  friend bool operator==(const SystemModel&, const SystemModel&) = default;
};

/// Sampled measurements, linearly interpolated between samples and held
/// constant outside the sampled range.
class MeasurementSignal {
 public:
  MeasurementSignal() = default;
  /// Requires >= 2 strictly increasing sample times and equal-length samples.
  MeasurementSignal(std::vector<double> times, std::vector<std::vector<double>> values);

  std::size_t dimension() const { return values_.empty() ? 0 : values_.front().size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<std::vector<double>>& values() const { return values_; }

  void eval(double t, std::span<double> out) const;
  std::vector<double> eval(double t) const;

  friend bool operator==(const MeasurementSignal&, const MeasurementSignal&) = default;

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;
};

enum class Variant { kGmac, kNoMeasurements, kNoConstraints };

const char* to_string(Variant v);
/// Accepts GMAC, NoMeasurements, NoConstraints (case-insensitive, '-'/'_' ignored).
std::optional<Variant> parse_variant(std::string_view text);

/// Observer gain and variant. NoMeasurements always runs with a zero gain.
class ObserverSpec {
 public:
  ObserverSpec(Variant variant, Matrix gain);

  Variant variant() const { return variant_; }
  const Matrix& gain() const { return gain_; }
  bool uses_constraints() const { return variant_ != Variant::kNoConstraints; }

 private:
  Variant variant_;
  Matrix gain_;
};

enum class RunStatus { kCompleted, kDiverged, kStepUnderflow, kSolverFailure };

const char* to_string(RunStatus status);

struct RunDiagnostics {
  RunStatus status = RunStatus::kCompleted;
  std::optional<double> failure_time;
  /// Measurement-constraint passes that moved at least one face bound.
  std::size_t ic_activation_count = 0;
  /// Constraint rows that were locally infeasible on a face.
  std::size_t ic_clamp_count = 0;
  /// First output time with some lower bound above its upper bound.
  std::optional<double> first_crossing_time;
  std::string message;
  std::size_t steps = 0;
  std::size_t rhs_evaluations = 0;
};

struct EstimateTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> lower;
  std::vector<std::vector<double>> upper;
  RunDiagnostics diagnostics;

  std::size_t size() const { return times.size(); }
};

using TimeFunction = std::function<std::vector<double>(double)>;

/// Reference trajectory of x' = f(t, u(t), x), queryable at any time in the horizon.
class TruthTrajectory {
 public:
  explicit TruthTrajectory(OdeSolution solution) : solution_(std::move(solution)) {}
  std::vector<double> operator()(double t) const { return dense_eval(solution_, t); }
  const OdeSolution& solution() const { return solution_; }

 private:
  OdeSolution solution_;
};

/// Integrates the model with a fixed input signal. Throws Error unless the
/// integration completes.
TruthTrajectory simulate_truth(const SystemModel& model, const TimeFunction& u, std::span<const double> x0,
                               IntegConfig config = {});

/// n_samples equally spaced samples y_k = C x(t_k) + noise(t_k) on [t0, tf].
MeasurementSignal make_measurements(const TimeFunction& truth, const Matrix& C, const TimeFunction& noise,
                                    std::size_t n_samples, double t0, double tf);

/// The interval observer: bound ODEs for [xL, xU] driven by the measurement signal.
class IntervalObserver {
 public:
  IntervalObserver(ObserverSpec spec, SystemModel model, MeasurementSignal measurements);

  /// Derivatives of the lower and upper bounds at time t.
  void rhs(double t, std::span<const double> x_lo, std::span<const double> x_hi, std::span<double> dx_lo,
           std::span<double> dx_hi, TightenStats* stats = nullptr) const;

  /// Integrates from X0 over the model horizon. Failures are reported in the
  /// diagnostics; nothing is thrown for divergence or rhs errors.
  EstimateTrajectory run(IntegConfig config) const;

  const ObserverSpec& spec() const { return spec_; }
  const SystemModel& model() const { return model_; }

 private:
  ObserverSpec spec_;
  SystemModel model_;
  MeasurementSignal meas_;
  Matrix linear_rows_;     // constant linear part of f minus L C
  std::vector<Expr> nonlinear_;
  Matrix l_neg_;           // -L
  Matrix constraint_rows_; // [C; -C]
};

void observer_rhs(const ObserverSpec& spec, const SystemModel& model, const MeasurementSignal& meas, double t,
                  std::span<const double> x_lo, std::span<const double> x_hi, std::span<double> dx_lo,
                  std::span<double> dx_hi);

EstimateTrajectory run_observer(const ObserverSpec& spec, const SystemModel& model, const MeasurementSignal& meas,
                                const IntegConfig& config);

/// n equally spaced points covering [t0, tf] inclusive.
std::vector<double> linspace(double t0, double tf, std::size_t n);

}  // namespace ivobs
