// Command-line driver for the Monte Carlo harness.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtqml/harness.hpp"

namespace {

mtqml::ExperimentConfig load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  mtqml::ExperimentConfig config = mtqml::load_config(path);
  for (const auto& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw mtqml::Error("override '" + entry + "' must be key=value");
    mtqml::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  config.finalize();
  return config;
}

void run_and_write(const mtqml::ExperimentConfig& config, const std::string& output, bool with_timing) {
  const mtqml::ResultTable table = mtqml::run_experiment(config);
  const std::string path = output.empty() ? config.output : output;
  if (path == "-") {
    mtqml::write_results_csv(table, std::cout, with_timing);
  } else {
    mtqml::emit_csv(table, path, with_timing);
    std::cerr << "wrote " << table.rows.size() << " rows to " << path << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure-transformed quasi-likelihood estimation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  std::vector<std::string> overrides;
  bool with_timing = false;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config,-c", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--output,-o", output, "Output CSV (overrides config; '-' for stdout)");
  run->add_option("--set", overrides, "Override a config entry, key=value");
  run->add_flag("--with-timing", with_timing, "Append the mean wall time column");

  std::string axis;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "Run a config with a different sweep axis and values");
  sweep->add_option("--config,-c", config_path, "Config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis, "omega, snr or n")->required();
  sweep->add_option("--values", values, "Comma list or start:stop:count")->required();
  sweep->add_option("--output,-o", output, "Output CSV (overrides config; '-' for stdout)");
  sweep->add_option("--set", overrides, "Override a config entry, key=value");
  sweep->add_flag("--with-timing", with_timing, "Append the mean wall time column");

  auto* timing = app.add_subcommand("timing", "Mean wall time per estimator call at the first sweep value");
  timing->add_option("--config,-c", config_path, "Config file")->required()->check(CLI::ExistingFile);
  timing->add_option("--set", overrides, "Override a config entry, key=value");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      run_and_write(load_with_overrides(config_path, overrides), output, with_timing);
    } else if (sweep->parsed()) {
      overrides.push_back("sweep=" + axis);
      overrides.push_back("values=" + values);
      run_and_write(load_with_overrides(config_path, overrides), output, with_timing);
    } else if (timing->parsed()) {
      mtqml::write_timing_csv(mtqml::timing_report(load_with_overrides(config_path, overrides)), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "mtqml: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
