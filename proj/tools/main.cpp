#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace ivobs::cli;

  CLI::App app{"Interval state estimator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string output;

  auto* run = app.add_subcommand("run", "Run the observer on a scenario and write a CSV");
  std::string variant_text;
  std::string gain_text;
  run->add_option("scenario", scenario, "Scenario file")->required();
  run->add_option("-o,--output", output, "Output CSV")->required();
  run->add_option("--variant", variant_text, "GMAC, NoMeasurements or NoConstraints");
  run->add_option("--gain", gain_text, "Gain name, 'auto', or inline matrix");

  auto* gain = app.add_subcommand("gain", "Synthesize an observer gain");
  std::optional<double> s_min;
  std::optional<double> l_bound;
  gain->add_option("scenario", scenario, "Scenario file")->required();
  gain->add_option("--s-min", s_min, "Lower bound on s (negative)");
  gain->add_option("--l-bound", l_bound, "Bound on |L| entries (positive)");

  auto* compare = app.add_subcommand("compare", "Run several variants on one measurement realization");
  std::vector<std::string> variants;
  compare->add_option("scenario", scenario, "Scenario file")->required();
  compare->add_option("--variants", variants, "Comma-separated Variant[:gain] list")->required()->delimiter(',');
  compare->add_option("-o,--output", output, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }

  if (*run) {
    RunOptions options;
    if (!variant_text.empty()) {
      options.variant = ivobs::parse_variant(variant_text);
      if (!options.variant) {
        std::cerr << "error: unknown variant '" << variant_text << "'\n";
        return kExitInputError;
      }
    }
    if (!gain_text.empty()) options.gain = gain_text;
    return cmd_run(scenario, output, options, std::cout, std::cerr);
  }
  if (*gain) return cmd_gain(scenario, s_min, l_bound, std::cout, std::cerr);
  return cmd_compare(scenario, variants, output, std::cout, std::cerr);
}
