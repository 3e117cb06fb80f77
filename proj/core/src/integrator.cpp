#include "ivobs/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ivobs/errors.hpp"

namespace ivobs {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// Step-size controller constants.
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - 0.75 * kBeta;
constexpr double kSafety = 0.9;
constexpr double kMaxShrink = 5.0;   // h_new >= h / 5
constexpr double kMaxGrowth = 0.1;   // h_new <= h * 10

// Stiffness detection: h * |lambda| estimate above kStiffRatio on
// kStiffSteps accepted steps (reset after kNonStiffSteps clear ones).
constexpr double kStiffRatio = 3.25;
constexpr int kStiffSteps = 15;
constexpr int kNonStiffSteps = 6;

// Second-order L-stable Rosenbrock pair used once a segment turns stiff.
const double kRosD = 1.0 / (2.0 + std::sqrt(2.0));
const double kRosE32 = 6.0 + std::sqrt(2.0);

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void interpolate(const DenseStep& step, std::size_t n, double t, std::span<double> out) {
  const double theta = (t - step.t) / step.h;
  const double theta1 = 1.0 - theta;
  const double* rc = step.coeffs.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = rc[i] + theta * (rc[n + i] + theta1 * (rc[2 * n + i] + theta * (rc[3 * n + i] + theta1 * rc[4 * n + i])));
  }
}

// In-place LU factorization with partial pivoting of an n x n row-major matrix.
bool lu_factor(std::vector<double>& a, std::vector<std::size_t>& piv, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
    }
    piv[k] = p;
    if (a[p * n + k] == 0.0 || !std::isfinite(a[p * n + k])) return false;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i * n + k] / a[k * n + k];
      a[i * n + k] = m;
      for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= m * a[k * n + j];
    }
  }
  return true;
}

void lu_solve(const std::vector<double>& lu, const std::vector<std::size_t>& piv, std::size_t n,
              std::span<double> b) {
  for (std::size_t k = 0; k < n; ++k) {
    std::swap(b[k], b[piv[k]]);
    for (std::size_t i = k + 1; i < n; ++i) b[i] -= lu[i * n + k] * b[k];
  }
  for (std::size_t k = n; k-- > 0;) {
    for (std::size_t j = k + 1; j < n; ++j) b[k] -= lu[k * n + j] * b[j];
    b[k] /= lu[k * n + k];
  }
}

class Stepper {
 public:
  Stepper(const OdeRhs& rhs, const IntegConfig& config, std::size_t n, OdeSolution& sol)
      : rhs_(rhs), cfg_(config), n_(n), sol_(sol) {
    for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ystage_, &y1_, &r1_, &r2_, &r3_, &f1_, &f2_, &ft_}) {
      k->assign(n, 0.0);
    }
    jac_.assign(n * n, 0.0);
    w_.assign(n * n, 0.0);
    piv_.assign(n, 0);
  }

  // Integrates the segment [a, b]; returns false when integration must stop.
  bool segment(double a, double b, std::vector<double>& y, double& h, std::size_t& next_output) {
    double t = a;
    // First stage of a segment sits one ulp inside it.
    if (!eval(std::nextafter(a, b), y, k1_)) {
      fail(IntegStatus::kRhsError, a, y);
      return false;
    }
    if (h <= 0.0) h = initial_step(a, b, y);

    std::size_t rejections = 0;
    bool last_rejected = false;
    bool stiff = false;
    int stiff_count = 0;
    int nonstiff_count = 0;
    while (t < b) {
      if (sol_.accepted_steps >= cfg_.max_steps) {
        sol_.message = "step budget exhausted";
        fail(IntegStatus::kStepUnderflow, t, y);
        return false;
      }
      h = std::min(h, cfg_.max_step);
      bool last = false;
      if (t + 1.01 * h >= b) {
        h = b - t;
        last = true;
      }
      if (h <= 1e-14 * std::max(1.0, std::abs(t))) {
        sol_.message = "step size underflow";
        fail(IntegStatus::kStepUnderflow, t, y);
        return false;
      }

      double err = 0.0;
      const bool ok = stiff ? attempt_rosenbrock(t, h, b, y, err) : attempt(t, h, y, err);
      if (!ok || !(err <= 1.0)) {
        ++sol_.rejected_steps;
        if (++rejections > cfg_.max_rejections) {
          if (sol_.message.empty()) sol_.message = "too many consecutive step rejections";
          fail(ok ? IntegStatus::kStepUnderflow : last_error_status_, t, y);
          return false;
        }
        if (!ok) {
          h *= 0.25;
        } else if (stiff) {
          h *= std::max(1.0 / kMaxShrink, 0.8 * std::pow(err, -1.0 / 3.0));
        } else {
          h /= std::min(kMaxShrink, std::pow(err, kExpo) / kSafety);
        }
        last_rejected = true;
        continue;
      }

      if (stiff) {
        const double grow = 0.8 * std::pow(std::max(err, 1e-12), -1.0 / 3.0);
        double h_new = h * std::clamp(grow, 1.0 / kMaxShrink, 1.0 / kMaxGrowth);
        if (last_rejected) h_new = std::min(h_new, h);
        rejections = 0;
        last_rejected = false;
        const double t_new = last ? b : t + h;
        DenseStep step = make_dense_rosenbrock(t, t_new - t, y);
        emit_outputs(step, t_new, next_output);
        if (cfg_.keep_dense) sol_.dense.push_back(std::move(step));
        ++sol_.accepted_steps;
        ++sol_.stiff_steps;
        y.swap(y1_);
        k1_.swap(f2_);
        t = t_new;
        sol_.final_time = t;
        if (max_abs(y) > cfg_.blow_up_threshold) {
          sol_.message = "state magnitude exceeded blow-up threshold";
          fail(IntegStatus::kDiverged, t, y);
          return false;
        }
        h = last ? std::max(h, h_new) : h_new;
        continue;
      }

      if (cfg_.stiff_switch && detect_stiffness(h, stiff_count, nonstiff_count)) stiff = true;

      const double fac11 = std::pow(err, kExpo);
      double fac = fac11 / std::pow(facold_, kBeta);
      fac = std::max(kMaxGrowth, std::min(kMaxShrink, fac / kSafety));
      double h_new = h / fac;
      facold_ = std::max(err, 1e-4);
      if (last_rejected) h_new = std::min(h_new, h);
      rejections = 0;
      last_rejected = false;

      const double t_new = last ? b : t + h;
      DenseStep step = make_dense(t, t_new - t, y);
      emit_outputs(step, t_new, next_output);
      if (cfg_.keep_dense) sol_.dense.push_back(std::move(step));
      ++sol_.accepted_steps;

      y.swap(y1_);
      k1_.swap(k7_);
      t = t_new;
      sol_.final_time = t;
      if (max_abs(y) > cfg_.blow_up_threshold) {
        sol_.message = "state magnitude exceeded blow-up threshold";
        fail(IntegStatus::kDiverged, t, y);
        return false;
      }
      if (!last) h = h_new;
      else h = std::max(h, h_new);
    }
    return true;
  }

  void emit_initial(double t0, std::span<const double> y, std::size_t& next_output) {
    while (next_output < cfg_.output_times.size() && cfg_.output_times[next_output] <= t0) {
      sol_.times.push_back(cfg_.output_times[next_output]);
      sol_.states.emplace_back(y.begin(), y.end());
      ++next_output;
    }
  }

 private:
  bool eval(double t, std::span<const double> y, std::vector<double>& out) {
    ++sol_.rhs_evaluations;
    try {
      rhs_(t, y, out);
    } catch (const Error& e) {
      sol_.message = e.what();
      last_error_status_ = IntegStatus::kRhsError;
      return false;
    }
    return all_finite(out);
  }

  double initial_step(double a, double b, std::span<const double> y0) {
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(y0[i]);
      dnf += (k1_[i] / sk) * (k1_[i] / sk);
      dny += (y0[i] / sk) * (y0[i] / sk);
    }
    const double hmax = std::min(cfg_.max_step, b - a);
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax);
    for (std::size_t i = 0; i < n_; ++i) ystage_[i] = y0[i] + h * k1_[i];
    if (!eval(a + h, ystage_, k2_)) return std::min(1e-6, hmax);
    double der2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(y0[i]);
      der2 += ((k2_[i] - k1_[i]) / sk) * ((k2_[i] - k1_[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, hmax});
  }

  bool attempt(double t, double h, std::span<const double> y, double& err) {
    auto stage = [&](double c, auto&& combine, std::vector<double>& k) {
      for (std::size_t i = 0; i < n_; ++i) ystage_[i] = y[i] + h * combine(i);
      if (!all_finite(ystage_)) return false;
      return eval(t + c * h, ystage_, k);
    };
    if (!stage(c2, [&](std::size_t i) { return a21 * k1_[i]; }, k2_)) return false;
    if (!stage(c3, [&](std::size_t i) { return a31 * k1_[i] + a32 * k2_[i]; }, k3_)) return false;
    if (!stage(c4, [&](std::size_t i) { return a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]; }, k4_)) return false;
    if (!stage(c5, [&](std::size_t i) { return a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]; }, k5_)) {
      return false;
    }
    if (!stage(1.0,
               [&](std::size_t i) { return a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]; },
               k6_)) {
      return false;
    }
    for (std::size_t i = 0; i < n_; ++i) {
      y1_[i] = y[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
    }
    if (!all_finite(y1_) || !eval(t + h, y1_, k7_)) return false;

    double sum = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      const double sk = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y[i]), std::abs(y1_[i]));
      sum += (e / sk) * (e / sk);
    }
    err = std::sqrt(sum / static_cast<double>(n_));
    return std::isfinite(err);
  }

  bool detect_stiffness(double h, int& stiff_count, int& nonstiff_count) const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      num += (k7_[i] - k6_[i]) * (k7_[i] - k6_[i]);
      den += (y1_[i] - ystage_[i]) * (y1_[i] - ystage_[i]);
    }
    if (!(den > 0.0)) return false;
    if (h * std::sqrt(num / den) > kStiffRatio) {
      nonstiff_count = 0;
      return ++stiff_count >= kStiffSteps;
    }
    if (++nonstiff_count >= kNonStiffSteps) stiff_count = 0;
    return false;
  }

  // One step of the Rosenbrock 2(3) pair with a forward-difference Jacobian.
  // k1_ holds f(t, y) on entry.
  bool attempt_rosenbrock(double t, double h, double b, std::span<const double> y, double& err) {
    constexpr double kSqrtEps = 1.4901161193847656e-08;
    std::copy(y.begin(), y.end(), ystage_.begin());
    for (std::size_t j = 0; j < n_; ++j) {
      const double delta = kSqrtEps * std::max(std::abs(y[j]), 1e-5);
      ystage_[j] = y[j] + delta;
      if (!eval(t, ystage_, f1_)) return false;
      for (std::size_t i = 0; i < n_; ++i) jac_[i * n_ + j] = (f1_[i] - k1_[i]) / delta;
      ystage_[j] = y[j];
    }
    double dt = kSqrtEps * std::max(std::abs(t), 1.0);
    if (t + dt > b) dt = -dt;
    if (!eval(t + dt, y, f1_)) return false;
    for (std::size_t i = 0; i < n_; ++i) ft_[i] = (f1_[i] - k1_[i]) / dt;

    const double hd = h * kRosD;
    for (std::size_t i = 0; i < n_ * n_; ++i) w_[i] = -hd * jac_[i];
    for (std::size_t i = 0; i < n_; ++i) w_[i * n_ + i] += 1.0;
    if (!lu_factor(w_, piv_, n_)) return false;

    for (std::size_t i = 0; i < n_; ++i) r1_[i] = k1_[i] + hd * ft_[i];
    lu_solve(w_, piv_, n_, r1_);
    for (std::size_t i = 0; i < n_; ++i) ystage_[i] = y[i] + 0.5 * h * r1_[i];
    if (!all_finite(ystage_) || !eval(t + 0.5 * h, ystage_, f1_)) return false;

    for (std::size_t i = 0; i < n_; ++i) r2_[i] = f1_[i] - r1_[i];
    lu_solve(w_, piv_, n_, r2_);
    for (std::size_t i = 0; i < n_; ++i) {
      r2_[i] += r1_[i];
      y1_[i] = y[i] + h * r2_[i];
    }
    if (!all_finite(y1_) || !eval(t + h, y1_, f2_)) return false;

    for (std::size_t i = 0; i < n_; ++i) {
      r3_[i] = f2_[i] - kRosE32 * (r2_[i] - f1_[i]) - 2.0 * (r1_[i] - k1_[i]) + hd * ft_[i];
    }
    lu_solve(w_, piv_, n_, r3_);

    double sum = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double e = h / 6.0 * (r1_[i] - 2.0 * r2_[i] + r3_[i]);
      const double sk = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y[i]), std::abs(y1_[i]));
      sum += (e / sk) * (e / sk);
    }
    err = std::sqrt(sum / static_cast<double>(n_));
    return std::isfinite(err);
  }

  // Quadratic continuous extension written in the quartic layout.
  DenseStep make_dense_rosenbrock(double t, double h, std::span<const double> y) const {
    DenseStep step{t, h, std::vector<double>(5 * n_, 0.0)};
    double* rc = step.coeffs.data();
    for (std::size_t i = 0; i < n_; ++i) {
      rc[i] = y[i];
      rc[n_ + i] = y1_[i] - y[i];
      rc[2 * n_ + i] = h * (r1_[i] - r2_[i]) / (1.0 - 2.0 * kRosD);
    }
    return step;
  }

  DenseStep make_dense(double t, double h, std::span<const double> y) const {
    DenseStep step{t, h, std::vector<double>(5 * n_)};
    double* rc = step.coeffs.data();
    for (std::size_t i = 0; i < n_; ++i) {
      const double ydiff = y1_[i] - y[i];
      const double bspl = h * k1_[i] - ydiff;
      rc[i] = y[i];
      rc[n_ + i] = ydiff;
      rc[2 * n_ + i] = bspl;
      rc[3 * n_ + i] = ydiff - h * k7_[i] - bspl;
      rc[4 * n_ + i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] + d7 * k7_[i]);
    }
    return step;
  }

  void emit_outputs(const DenseStep& step, double t_new, std::size_t& next_output) {
    const auto& out_times = cfg_.output_times;
    while (next_output < out_times.size() && out_times[next_output] <= t_new) {
      const double tau = out_times[next_output];
      if (tau == t_new) {
        sol_.states.push_back(y1_);
      } else {
        std::vector<double> v(n_);
        interpolate(step, n_, tau, v);
        sol_.states.push_back(std::move(v));
      }
      sol_.times.push_back(tau);
      ++next_output;
    }
  }

  void fail(IntegStatus status, double t, std::span<const double> y) {
    sol_.status = status;
    sol_.final_time = t;
    sol_.final_state.assign(y.begin(), y.end());
  }

  const OdeRhs& rhs_;
  const IntegConfig& cfg_;
  std::size_t n_;
  OdeSolution& sol_;
  double facold_ = 1e-4;
  IntegStatus last_error_status_ = IntegStatus::kRhsError;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ystage_, y1_;
  std::vector<double> r1_, r2_, r3_, f1_, f2_, ft_, jac_, w_;
  std::vector<std::size_t> piv_;
};

}  // namespace

void IntegConfig::validate(double t0, double tf) const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("integration tolerances must be positive");
  if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
  if (!(blow_up_threshold > 0.0)) throw std::invalid_argument("blow_up_threshold must be positive");
  if (!(t0 < tf)) throw std::invalid_argument("integration horizon must satisfy t0 < tf");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end())) {
    throw std::invalid_argument("breakpoints must be sorted");
  }
  if (!std::is_sorted(output_times.begin(), output_times.end())) {
    throw std::invalid_argument("output times must be sorted");
  }
  if (!output_times.empty() && (output_times.front() < t0 || output_times.back() > tf)) {
    throw std::invalid_argument("output times must lie inside the horizon");
  }
}

const char* to_string(IntegStatus status) {
  switch (status) {
    case IntegStatus::kCompleted: return "completed";
    case IntegStatus::kDiverged: return "diverged";
    case IntegStatus::kStepUnderflow: return "step_underflow";
    case IntegStatus::kRhsError: return "rhs_error";
  }
  return "?";
}

OdeSolution integrate(const OdeRhs& rhs, std::span<const double> x0, double t0, double tf, const IntegConfig& config) {
  config.validate(t0, tf);
  OdeSolution sol;
  sol.dimension = x0.size();
  sol.final_time = t0;
  sol.final_state.assign(x0.begin(), x0.end());

  std::vector<double> nodes{t0};
  for (double b : config.breakpoints) {
    if (b > t0 && b < tf) nodes.push_back(b);
  }
  nodes.push_back(tf);

  std::vector<double> y(x0.begin(), x0.end());
  Stepper stepper(rhs, config, y.size(), sol);
  std::size_t next_output = 0;
  stepper.emit_initial(t0, y, next_output);
  if (!all_finite(y)) {
    sol.status = IntegStatus::kDiverged;
    sol.message = "non-finite initial state";
    return sol;
  }

  double h = 0.0;
  for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
    if (!stepper.segment(nodes[s], nodes[s + 1], y, h, next_output)) return sol;
  }
  sol.status = IntegStatus::kCompleted;
  sol.message.clear();
  sol.final_time = tf;
  sol.final_state = y;
  return sol;
}

std::vector<double> dense_eval(const OdeSolution& solution, double t) {
  const auto& steps = solution.dense;
  if (steps.empty()) throw std::out_of_range("solution has no dense output");
  if (t < steps.front().t || t > solution.final_time) throw std::out_of_range("dense_eval outside integrated range");
  const std::size_t n = solution.dimension;
  if (t == solution.final_time && solution.status == IntegStatus::kCompleted) return solution.final_state;
  auto it = std::upper_bound(steps.begin(), steps.end(), t, [](double v, const DenseStep& s) { return v < s.t; });
  const DenseStep& step = *(it - 1);
  if (t == step.t) return {step.coeffs.begin(), step.coeffs.begin() + static_cast<std::ptrdiff_t>(n)};
  std::vector<double> out(n);
  interpolate(step, n, t, out);
  return out;
}

}  // namespace ivobs
