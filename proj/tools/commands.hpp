#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ivobs/observer.hpp"
#include "ivobs/scenario.hpp"

namespace ivobs::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitRunFailed = 2;
inline constexpr int kExitSynthesisFailed = 3;

struct RunOptions {
  std::optional<Variant> variant;
  /// Gain name from [gains], "auto", or an inline matrix ("2; 0").
  std::optional<std::string> gain;
};

/// Writes the trajectory CSV: t, xL_1..xL_n, xU_1..xU_n, truth_1..truth_n.
void write_trajectory_csv(std::ostream& out, const EstimateTrajectory& est, const TruthTrajectory& truth);

int cmd_run(const std::filesystem::path& scenario, const std::filesystem::path& output, const RunOptions& options,
            std::ostream& out, std::ostream& err);

int cmd_gain(const std::filesystem::path& scenario, std::optional<double> s_min, std::optional<double> l_bound,
             std::ostream& out, std::ostream& err);

/// Each variant is "Name" or "Name:gain" (gain as in RunOptions::gain).
int cmd_compare(const std::filesystem::path& scenario, const std::vector<std::string>& variants,
                const std::filesystem::path& output_dir, std::ostream& out, std::ostream& err);

}  // namespace ivobs::cli
