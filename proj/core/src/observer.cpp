#include "ivobs/observer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "ivobs/errors.hpp"

namespace ivobs {

namespace {

std::vector<double> merge_sorted(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

IntervalVector BoundSignal::at(double t) const {
  std::vector<double> lo(size()), hi(size());
  at(t, lo, hi);
  return IntervalVector(lo, hi);
}

void BoundSignal::at(double t, std::span<double> lo, std::span<double> hi) const {
  if (lower.size() != upper.size()) throw DimensionError("bound signal has mismatched lower/upper lists");
  for (std::size_t k = 0; k < lower.size(); ++k) {
    lo[k] = eval_real(lower[k], t, {}, {});
    hi[k] = eval_real(upper[k], t, {}, {});
    if (!(lo[k] <= hi[k])) {
      throw std::invalid_argument("bound signal component " + std::to_string(k + 1) + " has lower > upper at t = " +
                                  std::to_string(t));
    }
  }
}

std::vector<double> BoundSignal::time_breakpoints() const {
  std::vector<double> out;
  for (const auto& e : lower) out = merge_sorted(std::move(out), ivobs::time_breakpoints(e));
  for (const auto& e : upper) out = merge_sorted(std::move(out), ivobs::time_breakpoints(e));
  return out;
}

BoundSignal constant_bounds(const IntervalVector& box) {
  BoundSignal s;
  for (const auto& x : box) {
    s.lower.push_back(Expr::constant(x.lo()));
    s.upper.push_back(Expr::constant(x.hi()));
  }
  return s;
}

void SystemModel::validate() const {
  const std::size_t nx = n_x();
  if (nx == 0) throw DimensionError("model has no states");
  if (C.cols() != nx || C.rows() == 0) throw DimensionError("C must be n_y by n_x with n_y >= 1");
  if (X0.size() != nx) throw DimensionError("X0 dimension differs from n_x");
  if (U.lower.size() != n_u() || U.upper.size() != n_u()) throw DimensionError("U bounds must have n_u components");
  if (V.lower.size() != n_y() || V.upper.size() != n_y()) throw DimensionError("V bounds must have n_y components");
  if (!(t0 < tf)) throw std::invalid_argument("horizon must satisfy t0 < tf");
  for (const BoundSignal* s : {&U, &V}) {
    for (const auto* list : {&s->lower, &s->upper}) {
      for (const auto& e : *list) {
        if (!depends_only_on_time(e)) throw DimensionError("bound expressions may depend on t only");
      }
    }
  }
}

std::vector<double> SystemModel::time_breakpoints() const {
  return merge_sorted(merge_sorted(f.time_breakpoints(), U.time_breakpoints()), V.time_breakpoints());
}

MeasurementSignal::MeasurementSignal(std::vector<double> times, std::vector<std::vector<double>> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() < 2) throw std::invalid_argument("measurement signal needs at least two samples");
  if (times_.size() != values_.size()) throw DimensionError("sample times and values differ in length");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k - 1] < times_[k])) throw std::invalid_argument("sample times must be strictly increasing");
    if (values_[k].size() != values_[0].size()) throw DimensionError("samples differ in dimension");
  }
}

void MeasurementSignal::eval(double t, std::span<double> out) const {
  const std::size_t n = dimension();
  if (t <= times_.front()) {
    std::copy(values_.front().begin(), values_.front().end(), out.begin());
    return;
  }
  if (t >= times_.back()) {
    std::copy(values_.back().begin(), values_.back().end(), out.begin());
    return;
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin());
  const double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
  for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 - w) * values_[k - 1][i] + w * values_[k][i];
}

std::vector<double> MeasurementSignal::eval(double t) const {
  std::vector<double> out(dimension());
  eval(t, out);
  return out;
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kGmac: return "GMAC";
    case Variant::kNoMeasurements: return "NoMeasurements";
    case Variant::kNoConstraints: return "NoConstraints";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (key == "gmac") return Variant::kGmac;
  if (key == "nomeasurements" || key == "nomeasurement") return Variant::kNoMeasurements;
  if (key == "noconstraints" || key == "noconstraint") return Variant::kNoConstraints;
  return std::nullopt;
}

ObserverSpec::ObserverSpec(Variant variant, Matrix gain) : variant_(variant), gain_(std::move(gain)) {
  if (variant_ == Variant::kNoMeasurements) gain_ = Matrix(gain_.rows(), gain_.cols());
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kDiverged: return "diverged";
    case RunStatus::kStepUnderflow: return "step_underflow";
    case RunStatus::kSolverFailure: return "solver_failure";
  }
  return "?";
}

std::vector<double> linspace(double t0, double tf, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linspace needs at least two points");
  std::vector<double> out(n);
  const double dt = (tf - t0) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) out[k] = t0 + dt * static_cast<double>(k);
  out.back() = tf;
  return out;
}

TruthTrajectory simulate_truth(const SystemModel& model, const TimeFunction& u, std::span<const double> x0,
                               IntegConfig config) {
  if (x0.size() != model.n_x()) throw DimensionError("initial state dimension differs from n_x");
  config.keep_dense = true;
  config.breakpoints = merge_sorted(config.breakpoints, model.f.time_breakpoints());
  const VectorField& f = model.f;
  OdeRhs rhs = [&](double t, std::span<const double> x, std::span<double> dx) {
    const std::vector<double> ut = u(t);
    f.eval_real(t, ut, x, dx);
  };
  OdeSolution sol = integrate(rhs, x0, model.t0, model.tf, config);
  if (sol.status != IntegStatus::kCompleted) {
    throw Error(std::string("truth simulation failed (") + to_string(sol.status) + ") at t = " +
                std::to_string(sol.final_time) + ": " + sol.message);
  }
  return TruthTrajectory(std::move(sol));
}

MeasurementSignal make_measurements(const TimeFunction& truth, const Matrix& C, const TimeFunction& noise,
                                    std::size_t n_samples, double t0, double tf) {
  std::vector<double> times = linspace(t0, tf, n_samples);
  std::vector<std::vector<double>> values;
  values.reserve(times.size());
  for (double t : times) {
    std::vector<double> y = C * truth(t);
    const std::vector<double> v = noise(t);
    if (v.size() != y.size()) throw DimensionError("noise dimension differs from n_y");
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += v[k];
    values.push_back(std::move(y));
  }
  return MeasurementSignal(std::move(times), std::move(values));
}

IntervalObserver::IntervalObserver(ObserverSpec spec, SystemModel model, MeasurementSignal measurements)
    : spec_(std::move(spec)), model_(std::move(model)), meas_(std::move(measurements)) {
  model_.validate();
  const Matrix& L = spec_.gain();
  if (L.rows() != model_.n_x() || L.cols() != model_.n_y()) throw DimensionError("gain must be n_x by n_y");
  if (meas_.dimension() != model_.n_y()) throw DimensionError("measurement dimension differs from n_y");
  // Constant-coefficient state terms of f are merged with -LC so that
  // cancelling entries of A - LC are evaluated exactly.
  linear_rows_ = -(L * model_.C);
  for (std::size_t i = 0; i < model_.n_x(); ++i) {
    LinearSplit split = split_linear_state_terms(model_.f[i], model_.n_x());
    for (std::size_t j = 0; j < model_.n_x(); ++j) linear_rows_(i, j) += split.coefficients[j];
    nonlinear_.push_back(std::move(split.remainder));
  }
  l_neg_ = -L;
  constraint_rows_ = vstack(model_.C, -model_.C);
}

void IntervalObserver::rhs(double t, std::span<const double> x_lo, std::span<const double> x_hi,
                           std::span<double> dx_lo, std::span<double> dx_hi, TightenStats* stats) const {
  const std::size_t nx = model_.n_x();
  const std::size_t ny = model_.n_y();
  const IntervalVector u_box = model_.U.at(t);
  std::vector<double> v_lo(ny), v_hi(ny);
  model_.V.at(t, v_lo, v_hi);
  const IntervalVector v_box(v_lo, v_hi);
  const std::vector<double> y = meas_.eval(t);

  std::vector<double> d(2 * ny);
  for (std::size_t k = 0; k < ny; ++k) {
    d[k] = y[k] - v_lo[k];
    d[ny + k] = -y[k] + v_hi[k];
  }

  const Interval t_point(t);
  const Matrix& L = spec_.gain();
  for (std::size_t i = 0; i < nx; ++i) {
    const Interval noise_term = linear_natural_extension(l_neg_.row(i), v_box);
    const double injection = dot(L.row(i), y);
    for (Side side : {Side::kLower, Side::kUpper}) {
      IntervalVector z = face(x_lo, x_hi, i, side).box;
      if (spec_.uses_constraints()) {
        TightenStats local;
        z = tighten_interval(z, constraint_rows_, d, &local);
        if (stats) {
          stats->updates += local.updates > 0 ? 1 : 0;
          stats->clamps += local.clamps;
        }
      }
      const Interval total =
          eval_interval(nonlinear_[i], t_point, u_box, z) + linear_natural_extension(linear_rows_.row(i), z) + noise_term;
      if (side == Side::kLower) {
        dx_lo[i] = total.lo() + injection;
      } else {
        dx_hi[i] = total.hi() + injection;
      }
    }
  }
}

EstimateTrajectory IntervalObserver::run(IntegConfig config) const {
  const std::size_t nx = model_.n_x();
  config.breakpoints = merge_sorted(config.breakpoints, model_.time_breakpoints());

  TightenStats stats;
  OdeRhs ode = [&](double t, std::span<const double> x, std::span<double> dx) {
    rhs(t, x.subspan(0, nx), x.subspan(nx, nx), dx.subspan(0, nx), dx.subspan(nx, nx), &stats);
  };

  std::vector<double> x0(2 * nx);
  for (std::size_t i = 0; i < nx; ++i) {
    x0[i] = model_.X0[i].lo();
    x0[nx + i] = model_.X0[i].hi();
  }

  const OdeSolution sol = integrate(ode, x0, model_.t0, model_.tf, config);

  EstimateTrajectory out;
  out.times = sol.times;
  out.lower.reserve(sol.states.size());
  out.upper.reserve(sol.states.size());
  for (std::size_t k = 0; k < sol.states.size(); ++k) {
    const auto& s = sol.states[k];
    out.lower.emplace_back(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(nx));
    out.upper.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(nx), s.end());
    if (!out.diagnostics.first_crossing_time) {
      for (std::size_t i = 0; i < nx; ++i) {
        if (out.lower.back()[i] > out.upper.back()[i]) {
          out.diagnostics.first_crossing_time = sol.times[k];
          break;
        }
      }
    }
  }

  RunDiagnostics& diag = out.diagnostics;
  diag.ic_activation_count = stats.updates;
  diag.ic_clamp_count = stats.clamps;
  diag.steps = sol.accepted_steps;
  diag.rhs_evaluations = sol.rhs_evaluations;
  switch (sol.status) {
    case IntegStatus::kCompleted: diag.status = RunStatus::kCompleted; break;
    case IntegStatus::kDiverged: diag.status = RunStatus::kDiverged; break;
    case IntegStatus::kStepUnderflow: diag.status = RunStatus::kStepUnderflow; break;
    case IntegStatus::kRhsError: diag.status = RunStatus::kSolverFailure; break;
  }
  if (diag.status != RunStatus::kCompleted) {
    diag.failure_time = sol.final_time;
    diag.message = sol.message;
  }
  return out;
}

void observer_rhs(const ObserverSpec& spec, const SystemModel& model, const MeasurementSignal& meas, double t,
                  std::span<const double> x_lo, std::span<const double> x_hi, std::span<double> dx_lo,
                  std::span<double> dx_hi) {
  IntervalObserver(spec, model, meas).rhs(t, x_lo, x_hi, dx_lo, dx_hi);
}

EstimateTrajectory run_observer(const ObserverSpec& spec, const SystemModel& model, const MeasurementSignal& meas,
                                const IntegConfig& config) {
  return IntervalObserver(spec, model, meas).run(config);
}

}  // namespace ivobs
