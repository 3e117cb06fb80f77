#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivobs/errors.hpp"
#include "ivobs/expr.hpp"
#include "ivobs/integrator.hpp"
#include "ivobs/matrix.hpp"
#include "ivobs/observer.hpp"

namespace ivobs {

/// Invalid scenario text; the message names the offending key (or line).
class ScenarioError : public Error {
 public:
  using Error::Error;
};

struct NoiseSpec {
  /// One expression of t per output, or empty when `random_seed` is set.
  std::vector<Expr> expressions;
  /// Independent uniform samples inside V(t_k), reproducible from the seed.
  std::optional<std::uint64_t> random_seed;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// How the simulated measurements are generated.
struct TruthSpec {
  std::vector<Expr> u;  // expressions of t
  std::vector<double> x0;
  NoiseSpec noise;
  std::size_t n_samples = 500;

  friend bool operator==(const TruthSpec&, const TruthSpec&) = default;
};

struct GainSpec {
  enum class Kind { kMatrix, kNamed, kAuto };
  Kind kind = Kind::kMatrix;
  Matrix matrix;     // kMatrix
  std::string name;  // kNamed

  friend bool operator==(const GainSpec&, const GainSpec&) = default;
};

struct ObserverBlock {
  Variant variant = Variant::kGmac;
  GainSpec gain;
  double s_min = -10.0;
  double l_bound = 100.0;

  friend bool operator==(const ObserverBlock&, const ObserverBlock&) = default;
};

struct IntegrationBlock {
  double rel_tol = 1e-9;
  double abs_tol = 1e-9;
  double max_step = std::numeric_limits<double>::infinity();
  double blow_up_threshold = 1e12;
  std::size_t n_output = 500;

  friend bool operator==(const IntegrationBlock&, const IntegrationBlock&) = default;
};

struct Scenario {
  std::string name;
  SystemModel model;
  /// Linear part for gain design; required by `auto` gains.
  std::optional<Matrix> A;
  TruthSpec truth;
  std::map<std::string, Matrix> gains;
  ObserverBlock observer;
  IntegrationBlock integration;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses the sectioned `key = value` scenario format. Throws ScenarioError.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
/// Canonical text form; parse_scenario(format_scenario(s)) == s.
std::string format_scenario(const Scenario& s);

/// Gain matrix for `spec`: inline, looked up in `gains`, or synthesized from A.
/// Throws ScenarioError for unknown names or a missing A, SynthesisFailed when
/// the LP gives no certificate.
Matrix resolve_gain(const Scenario& s, const GainSpec& spec);

/// Integration settings with `n_output` equally spaced output times.
IntegConfig integration_config(const Scenario& s);

/// Truth trajectory driven by the scenario's fixed inputs.
TruthTrajectory simulate_scenario_truth(const Scenario& s);

/// Noise realization as a function of time.
TimeFunction scenario_noise(const Scenario& s);

/// Measurements sampled from the scenario's truth and noise.
MeasurementSignal scenario_measurements(const Scenario& s, const TruthTrajectory& truth);

}  // namespace ivobs
