#include "mtqml/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "mtqml/baselines.hpp"
#include "mtqml/core_stats.hpp"
#include "mtqml/doa.hpp"
#include "mtqml/linreg.hpp"

namespace mtqml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || trim(end) != "" || !std::isfinite(v)) {
    throw Error("config key '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

Index parse_count(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || v < 0) throw Error("config key '" + key + "': expected a non-negative integer");
  return static_cast<Index>(v);
}

// "a, b, c" or "start:stop:count".
std::vector<double> parse_values(const std::string& key, const std::string& value) {
  if (value.find(':') != std::string::npos) {
    std::stringstream ss(value);
    std::string a;
    std::string b;
    std::string c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
      throw Error("config key '" + key + "': range must be start:stop:count");
    }
    const double start = parse_number(key, trim(a));
    const double stop = parse_number(key, trim(b));
    const Index count = parse_count(key, trim(c));
    if (count < 1) throw Error("config key '" + key + "': range count must be positive");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
      out[static_cast<std::size_t>(i)] =
          count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number(key, item));
  return out;
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::omega:
      return "omega";
    case SweepAxis::snr:
      return "snr";
    case SweepAxis::n:
      return "n";
  }
  return "unknown";
}

}  // namespace

std::vector<std::string> known_estimators(Application application) {
  if (application == Application::regression) return {"gqmle", "mt-gqmle", "tukey", "mle"};
  return {"gqmle", "mt-gqmle"};
}

void apply_config_entry(ExperimentConfig& config, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "application") {
    if (value == "regression") {
      config.application = Application::regression;
    } else if (value == "doa") {
      config.application = Application::doa;
    } else {
      throw Error("config key 'application': expected regression or doa");
    }
  } else if (key == "noise") {
    config.texture.kind = parse_noise_kind(value);
  } else if (key == "noise_param") {
    config.texture.lambda = parse_number(key, value);
  } else if (key == "sweep") {
    if (value == "omega") {
      config.sweep = SweepAxis::omega;
    } else if (value == "snr") {
      config.sweep = SweepAxis::snr;
    } else if (value == "n") {
      config.sweep = SweepAxis::n;
    } else {
      throw Error("config key 'sweep': expected omega, snr or n");
    }
  } else if (key == "values") {
    config.values = parse_values(key, value);
  } else if (key == "snr_db") {
    config.snr_db = parse_number(key, value);
  } else if (key == "n") {
    config.n = parse_count(key, value);
  } else if (key == "omega") {
    if (value == "opt") {
      config.omega_opt = true;
    } else {
      config.omega_opt = false;
      config.omega = parse_number(key, value);
    }
  } else if (key == "omega_grid") {
    config.omega_grid = parse_values(key, value);
  } else if (key == "estimators") {
    config.estimators = split_list(value);
  } else if (key == "theta0") {
    config.theta0 = parse_values(key, value);
  } else if (key == "p") {
    config.p = parse_count(key, value);
  } else if (key == "trials") {
    config.trials = parse_count(key, value);
  } else if (key == "seed") {
    config.seed = static_cast<std::uint64_t>(parse_count(key, value));
  } else if (key == "output") {
    config.output = value;
  } else if (key == "doa_grid") {
    config.doa_grid = parse_count(key, value);
  } else if (key == "are_target") {
    config.are_target = parse_number(key, value);
  } else {
    throw Error("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    apply_config_entry(config, line.substr(0, eq), line.substr(eq + 1));
  }
  config.finalize();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_config(in);
}

void ExperimentConfig::finalize() {
  const bool regression = application == Application::regression;
  if (p == 0) p = regression ? 10 : 4;
  if (estimators.empty()) estimators = known_estimators(application);
  if (theta0.empty()) theta0 = regression ? std::vector<double>{0.3, 0.5, 0.6, 0.8} : std::vector<double>{30.0};
  if (omega_grid.empty()) omega_grid = parse_values("omega_grid", "1:30:30");

  texture.validate();
  if (values.empty()) throw Error("sweep values must not be empty");
  if (trials < 1) throw Error("trials must be at least 1");
  if (n < 1) throw Error("n must be at least 1");
  if (p < 2) throw Error("p must be at least 2");
  if (!omega_opt && !(omega > 0.0)) throw Error("omega must be positive");
  for (double w : omega_grid) {
    if (!(w > 0.0)) throw Error("omega_grid entries must be positive");
  }
  if (sweep == SweepAxis::omega) {
    for (double w : values) {
      if (!(w > 0.0)) throw Error("omega sweep values must be positive");
    }
  }
  if (sweep == SweepAxis::n) {
    for (double v : values) {
      if (v < 1 || v != std::floor(v)) throw Error("n sweep values must be positive integers");
    }
  }
  const auto names = known_estimators(application);
  for (const auto& e : estimators) {
    if (std::find(names.begin(), names.end(), e) == names.end()) {
      throw Error("unknown estimator '" + e + "' for this application");
    }
    if (e == "mle" && regression && texture.kind == NoiseKind::k) {
      throw Error("no MLE is available for K-distributed regression noise");
    }
  }
  if (regression && theta0.size() != 4) throw Error("regression theta0 needs 4 entries");
  if (!regression) {
    if (theta0.size() != 1) throw Error("doa theta0 needs one angle in degrees");
    if (doa_grid < 2) throw Error("doa_grid must be at least 2");
  }
  if (!(are_target > 0.0 && are_target < 1.0)) throw Error("are_target must lie in (0, 1)");
}

namespace {

struct Outcome {
  bool ok = false;
  double sq_error = 0.0;
  double omega = kNaN;
  double empirical_asymptotic = kNaN;
  double asymptotic = kNaN;
  double seconds = 0.0;
};

struct SweepPoint {
  double snr_db;
  Index n;
  bool omega_opt;
  double omega;
};

SweepPoint sweep_point(const ExperimentConfig& config, double value) {
  SweepPoint sp{config.snr_db, config.n, config.omega_opt, config.omega};
  switch (config.sweep) {
    case SweepAxis::snr:
      sp.snr_db = value;
      break;
    case SweepAxis::n:
      sp.n = static_cast<Index>(value);
      break;
    case SweepAxis::omega:
      sp.omega_opt = false;
      sp.omega = value;
      break;
  }
  return sp;
}

// Closed-form MT asymptotics on the width grid, or at the fixed width.
std::vector<double> closed_form_table(const ExperimentConfig& config, const SweepPoint& sp,
                                      const std::function<double(double)>& at_width) {
  const std::vector<double> widths = sp.omega_opt ? config.omega_grid : std::vector<double>{sp.omega};
  std::vector<double> out;
  for (double w : widths) {
    try {
      out.push_back(at_width(w));
    } catch (const Error&) {
      out.push_back(kNaN);
    }
  }
  return out;
}

template <typename Fn>
Outcome timed(Fn&& fn) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    fn(out);
    out.ok = std::isfinite(out.sq_error);
  } catch (const Error&) {
    out.ok = false;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

using TrialRunner = std::function<std::vector<Outcome>(const SeededStream&)>;

TrialRunner regression_runner(const ExperimentConfig& config, const SweepPoint& sp, double tukey_c) {
  auto base = std::make_shared<RegressionModel>(build_steering_regressors(config.p));
  auto model = std::make_shared<const RegressionModel>(base->with_dispersion(base->dispersion_for_snr_db(sp.snr_db)));
  const RealVector theta0 = Eigen::Map<const RealVector>(config.theta0.data(), 4);
  const ComplexVector alpha0 = complexify(theta0);
  const NoiseSpec noise{config.texture, model->noise_dispersion};
  const Index n = sp.n;
  std::vector<double> table;
  const bool wants_mt = std::find(config.estimators.begin(), config.estimators.end(), "mt-gqmle") !=
                        config.estimators.end();
  if (wants_mt) {
    table = closed_form_table(config, sp, [&](double w) {
      return asymptotic_mse_regression(*model, config.texture, w, n).trace();
    });
  }
  return [=, &config](const SeededStream& stream) {
    const Dataset data = synthesize_regression(model->A, alpha0, noise, n, stream);
    std::vector<Outcome> outcomes;
    for (const auto& name : config.estimators) {
      outcomes.push_back(timed([&](Outcome& o) {
        RealVector theta;
        if (name == "gqmle") {
          theta = gqmle_regression(data, *model);
        } else if (name == "mt-gqmle") {
          if (sp.omega_opt) {
            const SelectionResult sel = select_omega_regression(data, *model, config.omega_grid);
            const auto i = static_cast<std::size_t>(sel.index);
            theta = sel.theta_hats[i];
            o.omega = sel.omega_opt;
            o.empirical_asymptotic = sel.traces[i];
            o.asymptotic = table[i];
          } else {
            theta = mt_gqmle_regression(data, *model, sp.omega);
            o.omega = sp.omega;
            o.empirical_asymptotic = empirical_asymptotic_mse_regression(data, *model, sp.omega).trace();
            o.asymptotic = table[0];
          }
        } else if (name == "tukey") {
          theta = tukey_m_estimator(data, *model, tukey_c).theta;
        } else if (name == "mle") {
          theta = config.texture.kind == NoiseKind::t
                      ? mle_t_noise(data, *model, config.texture.lambda, model->noise_dispersion).theta
                      : gqmle_regression(data, *model);
        }
        o.sq_error = (theta - theta0).squaredNorm();
      }));
    }
    return outcomes;
  };
}

TrialRunner doa_runner(const ExperimentConfig& config, const SweepPoint& sp) {
  const UlaModel model = UlaModel::from_snr_db(config.p, sp.snr_db, config.texture);
  const double theta0 = config.theta0[0] * std::numbers::pi / 180.0;
  const auto grid = shared_doa_grid(config.p, config.doa_grid);
  const NoiseSpec noise{config.texture, model.noise_dispersion};
  const Index n = sp.n;
  std::vector<double> table;
  const bool wants_mt = std::find(config.estimators.begin(), config.estimators.end(), "mt-gqmle") !=
                        config.estimators.end();
  if (wants_mt) {
    table = closed_form_table(config, sp, [&](double w) { return asymptotic_mse_doa(model, theta0, w, n); });
  }
  return [=, &config](const SeededStream& stream) {
    const Dataset data = synthesize_doa(model.p, theta0, model.signal_power, noise, n, stream);
    std::vector<Outcome> outcomes;
    for (const auto& name : config.estimators) {
      outcomes.push_back(timed([&](Outcome& o) {
        double theta = 0.0;
        if (name == "gqmle") {
          theta = estimate_doa(data, MTFunction::constant(), *grid);
        } else if (name == "mt-gqmle") {
          if (sp.omega_opt) {
            const SelectionResult sel = select_omega_doa(data, config.omega_grid, *grid);
            const auto i = static_cast<std::size_t>(sel.index);
            theta = sel.theta_hats[i](0);
            o.omega = sel.omega_opt;
            o.empirical_asymptotic = sel.traces[i];
            o.asymptotic = table[i];
          } else {
            const MTFunction u = gaussian_mt_function(sp.omega);
            theta = estimate_doa(data, u, *grid);
            o.omega = sp.omega;
            o.empirical_asymptotic = empirical_asymptotic_mse_doa(data, theta, u);
            o.asymptotic = table[0];
          }
        }
        o.sq_error = (theta - theta0) * (theta - theta0);
      }));
    }
    return outcomes;
  };
}

double mean_of_finite(const std::vector<double>& v) {
  double total = 0.0;
  Index count = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      total += x;
      ++count;
    }
  }
  return count > 0 ? total / static_cast<double>(count) : kNaN;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& input) {
  ExperimentConfig config = input;
  config.finalize();
  const bool regression = config.application == Application::regression;
  double tukey_c = 0.0;
  if (regression && std::find(config.estimators.begin(), config.estimators.end(), "tukey") != config.estimators.end()) {
    tukey_c = tune_c_for_are(config.are_target, config.p);
  }
  const SeededStream root{config.seed, 0};
  ResultTable table;
  for (std::size_t s = 0; s < config.values.size(); ++s) {
    const SweepPoint sp = sweep_point(config, config.values[s]);
    const TrialRunner runner = regression ? regression_runner(config, sp, tukey_c) : doa_runner(config, sp);
    const SeededStream sweep_stream = root.child(s);
    std::vector<std::vector<Outcome>> results(static_cast<std::size_t>(config.trials));
#pragma omp parallel for schedule(dynamic)
    for (Index t = 0; t < config.trials; ++t) {
      results[static_cast<std::size_t>(t)] = runner(sweep_stream.child(static_cast<std::uint64_t>(t)));
    }
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      ResultRow row;
      row.sweep = axis_name(config.sweep);
      row.sweep_value = config.values[s];
      row.estimator = config.estimators[e];
      std::vector<double> errors;
      std::vector<double> asym;
      std::vector<double> emp_asym;
      std::vector<double> omegas;
      double seconds = 0.0;
      for (const auto& trial : results) {
        const Outcome& o = trial[e];
        seconds += o.seconds;
        if (!o.ok) {
          ++row.failed;
          continue;
        }
        errors.push_back(o.sq_error);
        asym.push_back(o.asymptotic);
        emp_asym.push_back(o.empirical_asymptotic);
        omegas.push_back(o.omega);
      }
      row.trials = static_cast<Index>(errors.size());
      row.empirical_mse = mean_of_finite(errors);
      row.asymptotic_mse = mean_of_finite(asym);
      row.empirical_asymptotic_mse = mean_of_finite(emp_asym);
      row.mean_omega = mean_of_finite(omegas);
      row.mean_seconds = seconds / static_cast<double>(config.trials);
      table.rows.push_back(row);
    }
  }
  return table;
}

namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const char* kResultHeader =
    "sweep,sweep_value,estimator,trials,failed,empirical_mse,asymptotic_mse,empirical_asymptotic_mse,mean_omega";

}  // namespace

void write_results_csv(const ResultTable& table, std::ostream& out, bool include_timing) {
  out << kResultHeader << (include_timing ? ",mean_seconds" : "") << '\n';
  for (const auto& r : table.rows) {
    out << r.sweep << ',' << format_number(r.sweep_value) << ',' << r.estimator << ',' << r.trials << ','
        << r.failed << ',' << format_number(r.empirical_mse) << ',' << format_number(r.asymptotic_mse) << ','
        << format_number(r.empirical_asymptotic_mse) << ',' << format_number(r.mean_omega);
    if (include_timing) out << ',' << format_number(r.mean_seconds);
    out << '\n';
  }
}

void emit_csv(const ResultTable& table, const std::string& path, bool include_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_results_csv(table, out, include_timing);
  out.flush();
  if (!out) throw Error("failed writing '" + path + "'");
}

ResultTable read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("missing results header");
  const bool timing = line.find(",mean_seconds") != std::string::npos;
  if (line.rfind(kResultHeader, 0) != 0) throw Error("unexpected results header");
  ResultTable table;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != (timing ? 10u : 9u)) throw Error("malformed results row");
    const auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
    ResultRow r;
    r.sweep = cells[0];
    r.sweep_value = num(cells[1]);
    r.estimator = cells[2];
    r.trials = static_cast<Index>(num(cells[3]));
    r.failed = static_cast<Index>(num(cells[4]));
    r.empirical_mse = num(cells[5]);
    r.asymptotic_mse = num(cells[6]);
    r.empirical_asymptotic_mse = num(cells[7]);
    r.mean_omega = num(cells[8]);
    if (timing) r.mean_seconds = num(cells[9]);
    table.rows.push_back(r);
  }
  return table;
}

std::vector<TimingRow> timing_report(const ExperimentConfig& input) {
  ExperimentConfig config = input;
  config.finalize();
  config.values.resize(1);
  const ResultTable table = run_experiment(config);
  std::vector<TimingRow> out;
  for (const auto& r : table.rows) out.push_back({r.estimator, config.trials, r.mean_seconds});
  return out;
}

void write_timing_csv(const std::vector<TimingRow>& rows, std::ostream& out) {
  out << "estimator,calls,mean_seconds\n";
  for (const auto& r : rows) out << r.estimator << ',' << r.calls << ',' << format_number(r.mean_seconds) << '\n';
}

}  // namespace mtqml
