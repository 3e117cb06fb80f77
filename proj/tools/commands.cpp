#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ivobs/gain.hpp"

namespace ivobs::cli {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Scenario gain override: a [gains] name, "auto", or an inline matrix.
GainSpec gain_spec_from_text(const Scenario& s, const std::string& text) {
  // Reuse the scenario reader by parsing a minimal observer block.
  if (text == "auto") return {GainSpec::Kind::kAuto, {}, {}};
  if (s.gains.count(text)) return {GainSpec::Kind::kNamed, {}, text};
  Scenario probe = s;
  probe.observer.gain = {};
  std::string patched = format_scenario(probe);
  const auto pos = patched.find("gain = ");
  const auto eol = patched.find('\n', pos);
  patched.replace(pos, eol - pos, "gain = " + text);
  return parse_scenario(patched).observer.gain;
}

struct PreparedRun {
  std::string label;
  ObserverSpec spec;
};

std::string final_box_line(const EstimateTrajectory& est) {
  if (est.size() == 0) return "(no output)";
  std::ostringstream line;
  const auto& lo = est.lower.back();
  const auto& hi = est.upper.back();
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (i) line << " x ";
    line << '[' << fmt_short(lo[i]) << ", " << fmt_short(hi[i]) << ']';
  }
  return line.str();
}

void print_diagnostics(std::ostream& out, const std::string& label, const EstimateTrajectory& est) {
  const RunDiagnostics& d = est.diagnostics;
  out << label << ": status " << to_string(d.status);
  if (d.failure_time) out << " at t = " << fmt_short(*d.failure_time);
  out << '\n';
  if (est.size() > 0) out << "  final t = " << fmt_short(est.times.back()) << "  box " << final_box_line(est) << '\n';
  out << "  steps " << d.steps << ", rhs evaluations " << d.rhs_evaluations << ", constraint activations "
      << d.ic_activation_count << ", clamped updates " << d.ic_clamp_count << '\n';
  if (d.first_crossing_time) out << "  bounds first crossed at t = " << fmt_short(*d.first_crossing_time) << '\n';
  if (!d.message.empty()) out << "  " << d.message << '\n';
}

int exit_code_for(const EstimateTrajectory& est) {
  return est.diagnostics.status == RunStatus::kCompleted ? kExitOk : kExitRunFailed;
}

bool write_csv_file(const std::filesystem::path& path, const EstimateTrajectory& est, const TruthTrajectory& truth,
                    std::ostream& err) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path);
  if (!file) {
    err << "error: cannot write '" << path.string() << "'\n";
    return false;
  }
  write_trajectory_csv(file, est, truth);
  return true;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const EstimateTrajectory& est, const TruthTrajectory& truth) {
  const std::size_t n = est.size() ? est.lower.front().size() : truth.solution().dimension;
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",xL_" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",xU_" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",truth_" << i;
  out << "\r\n";
  for (std::size_t k = 0; k < est.size(); ++k) {
    out << fmt17(est.times[k]);
    for (double v : est.lower[k]) out << ',' << fmt17(v);
    for (double v : est.upper[k]) out << ',' << fmt17(v);
    for (double v : truth(est.times[k])) out << ',' << fmt17(v);
    out << "\r\n";
  }
}

int cmd_run(const std::filesystem::path& scenario_path, const std::filesystem::path& output, const RunOptions& options,
            std::ostream& out, std::ostream& err) {
  Scenario s;
  Matrix gain;
  try {
    s = load_scenario(scenario_path);
    if (options.variant) s.observer.variant = *options.variant;
    if (options.gain) s.observer.gain = gain_spec_from_text(s, *options.gain);
    gain = resolve_gain(s, s.observer.gain);
  } catch (const SynthesisFailed& e) {
    err << "error: " << e.what() << '\n';
    return kExitSynthesisFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  try {
    const TruthTrajectory truth = simulate_scenario_truth(s);
    const MeasurementSignal meas = scenario_measurements(s, truth);
    const ObserverSpec spec(s.observer.variant, gain);
    const EstimateTrajectory est = run_observer(spec, s.model, meas, integration_config(s));
    if (!write_csv_file(output, est, truth, err)) return kExitInputError;
    print_diagnostics(out, to_string(spec.variant()), est);
    return exit_code_for(est);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRunFailed;
  }
}

int cmd_gain(const std::filesystem::path& scenario_path, std::optional<double> s_min, std::optional<double> l_bound,
             std::ostream& out, std::ostream& err) {
  Scenario s;
  try {
    s = load_scenario(scenario_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  if (!s.A) {
    err << "error: scenario has no A matrix in [model]; gain synthesis needs the linear part\n";
    return kExitInputError;
  }
  const double smin = s_min.value_or(s.observer.s_min);
  const double lb = l_bound.value_or(s.observer.l_bound);
  if (!(smin < 0.0)) {
    err << "error: --s-min must be negative\n";
    return kExitInputError;
  }
  if (!(lb > 0.0)) {
    err << "error: --l-bound must be positive\n";
    return kExitInputError;
  }

  try {
    const GainResult g = synthesize_gain({*s.A, s.model.C}, smin, lb);
    out << "L =";
    for (std::size_t i = 0; i < g.L.rows(); ++i) {
      out << (i ? "; " : " ");
      for (std::size_t k = 0; k < g.L.cols(); ++k) out << (k ? ", " : "") << fmt17(g.L(i, k));
    }
    out << '\n' << "s* = " << fmt17(g.s_star) << '\n' << "margin = " << fmt17(g.margin) << '\n';
    out << (g.contracting ? "certified: gain condition holds\n" : "not certified\n");
    return g.contracting ? kExitOk : kExitSynthesisFailed;
  } catch (const SynthesisFailed& e) {
    err << "error: " << e.what() << '\n';
    return kExitSynthesisFailed;
  }
}

int cmd_compare(const std::filesystem::path& scenario_path, const std::vector<std::string>& variants,
                const std::filesystem::path& output_dir, std::ostream& out, std::ostream& err) {
  Scenario s;
  std::vector<PreparedRun> runs;
  try {
    s = load_scenario(scenario_path);
    if (variants.empty()) throw ScenarioError("no variants requested");
    for (const std::string& item : variants) {
      const auto colon = item.find(':');
      const std::string name = item.substr(0, colon);
      const auto v = parse_variant(name);
      if (!v) throw ScenarioError("unknown variant '" + name + "'");
      GainSpec g = s.observer.gain;
      if (colon != std::string::npos) g = gain_spec_from_text(s, item.substr(colon + 1));
      runs.push_back({item, ObserverSpec(*v, resolve_gain(s, g))});
    }
  } catch (const SynthesisFailed& e) {
    err << "error: " << e.what() << '\n';
    return kExitSynthesisFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  int code = kExitOk;
  try {
    // One measurement realization shared by every variant.
    const TruthTrajectory truth = simulate_scenario_truth(s);
    const MeasurementSignal meas = scenario_measurements(s, truth);
    const IntegConfig config = integration_config(s);

    std::ostringstream table;
    table << std::left << std::setw(28) << "method";
    for (std::size_t i = 1; i <= s.model.n_x(); ++i) {
      table << std::setw(28) << ("[x" + std::to_string(i) + "L, x" + std::to_string(i) + "U]");
    }
    table << "status\n";
    for (const PreparedRun& run : runs) {
      const EstimateTrajectory est = run_observer(run.spec, s.model, meas, config);
      std::string file = run.label;
      std::replace(file.begin(), file.end(), ':', '_');
      if (!write_csv_file(output_dir / (file + ".csv"), est, truth, err)) return kExitInputError;
      print_diagnostics(out, run.label, est);
      code = std::max(code, exit_code_for(est));

      table << std::setw(28) << run.label;
      for (std::size_t i = 0; i < s.model.n_x(); ++i) {
        std::string cell = "-";
        if (est.size() > 0) cell = "[" + fmt_short(est.lower.back()[i]) + ", " + fmt_short(est.upper.back()[i]) + "]";
        table << std::setw(28) << cell;
      }
      table << to_string(est.diagnostics.status);
      if (est.size() > 0) table << " (t = " << fmt_short(est.times.back()) << ")";
      table << '\n';
    }
    std::ofstream summary(output_dir / "summary.txt");
    summary << table.str();
    out << '\n' << table.str();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRunFailed;
  }
  return code;
}

}  // namespace ivobs::cli
