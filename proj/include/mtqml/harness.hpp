#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtqml/samplers.hpp"
#include "mtqml/types.hpp"

namespace mtqml {

enum class Application { regression, doa };
enum class SweepAxis { omega, snr, n };

/// Monte Carlo experiment description.  See docs/config.md for the file format.
struct ExperimentConfig {
  Application application = Application::regression;
  TextureLaw texture;
  SweepAxis sweep = SweepAxis::snr;
  std::vector<double> values{0.0};
  double snr_db = 0.0;
  Index n = 1000;
  bool omega_opt = true;
  double omega = 10.0;  // used when omega_opt is false
  std::vector<double> omega_grid;
  std::vector<std::string> estimators;
  std::vector<double> theta0;  // regression: [Re alpha; Im alpha]; doa: angle in degrees
  Index p = 0;
  Index trials = 100;
  std::uint64_t seed = 1;
  std::string output = "results.csv";
  Index doa_grid = 10'000;
  double are_target = 0.95;

  /// Fills application-dependent defaults and checks consistency.
  void finalize();
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Applies one "key = value" assignment (same syntax as the file).
void apply_config_entry(ExperimentConfig& config, const std::string& key, const std::string& value);

std::vector<std::string> known_estimators(Application application);

struct ResultRow {
  std::string sweep;  // axis name
  double sweep_value = 0.0;
  std::string estimator;
  Index trials = 0;
  Index failed = 0;
  double empirical_mse = 0.0;             // mean ||theta_hat - theta0||^2 over successful trials
  double asymptotic_mse = 0.0;            // closed form, NaN when not applicable
  double empirical_asymptotic_mse = 0.0;  // mean empirical estimate, NaN when not applicable
  double mean_omega = 0.0;                // NaN for estimators without an MT-function
  double mean_seconds = 0.0;              // wall time per estimator call
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

ResultTable run_experiment(const ExperimentConfig& config);

/// Header plus rows, 12 significant digits, rows in table order.  Wall time
/// is machine dependent, so its column is written only on request; without
/// it the file is byte-identical across runs with the same config.
void write_results_csv(const ResultTable& table, std::ostream& out, bool include_timing = false);
void emit_csv(const ResultTable& table, const std::string& path, bool include_timing = false);
ResultTable read_results_csv(std::istream& in);

struct TimingRow {
  std::string estimator;
  Index calls = 0;
  double mean_seconds = 0.0;
};

/// Mean wall time per estimator call at the first sweep value.
std::vector<TimingRow> timing_report(const ExperimentConfig& config);
void write_timing_csv(const std::vector<TimingRow>& rows, std::ostream& out);

}  // namespace mtqml
