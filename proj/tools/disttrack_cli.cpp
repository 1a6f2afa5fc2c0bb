// Command-line front end for the experiment harness.
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "disttrack/error.hpp"
#include "disttrack/harness/calibration.hpp"
#include "disttrack/harness/experiment.hpp"
#include "disttrack/sim/engine.hpp"

using namespace disttrack;
using namespace disttrack::harness;

namespace {

// Writes to the named file, or stdout when empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

ExperimentSpec load(const std::string& path) {
  ExperimentSpec spec = load_config(path);
  for (const std::string& w : validate(spec)) std::cerr << "warning: " << w << '\n';
  return spec;
}

int cmd_run(const std::string& config, const std::string& out_path,
            double max_failure_rate) {
  const ExperimentSpec spec = load(config);
  Output out(out_path);
  write_csv_header(out.stream());
  std::uint64_t probes = 0, failures = 0;
  for (std::uint64_t seed : spec.seeds) {
    const RunOutput run = run_one(spec, seed);
    write_run_csv(out.stream(), run);
    probes += run.summary.probes;
    failures += run.summary.probe_failures;
  }
  const double rate =
      probes == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(probes);
  std::cerr << "probes " << probes << ", beyond eps*n: " << failures << " (" << rate
            << ")\n";
  if (max_failure_rate >= 0 && rate > max_failure_rate) {
    std::cerr << "check failed: failure rate " << rate << " > " << max_failure_rate
              << '\n';
    return 1;
  }
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& axis,
              const std::vector<double>& values, const std::string& out_path,
              double min_slope, double max_slope) {
  const ExperimentSpec spec = load(config);
  const SweepResult result = sweep(spec, parse_axis(axis), values);
  Output out(out_path);
  write_sweep_csv(out.stream(), result);
  std::cerr << "slope " << result.fit.slope << '\n';
  if (result.fit.slope < min_slope || result.fit.slope > max_slope) {
    std::cerr << "check failed: slope outside [" << min_slope << ", " << max_slope
              << "]\n";
    return 1;
  }
  return 0;
}

int cmd_calibrate(const std::string& out_path, double scale, std::uint64_t seed) {
  const auto items = calibrate({seed, scale});
  Output out(out_path.empty() ? "calibration.txt" : out_path);
  write_constants(out.stream(), items);
  int status = 0;
  for (const CalibrationItem& item : items) {
    std::cerr << (item.ok ? "ok   " : "FAIL ") << item.name << " = " << item.measured
              << " (limit " << item.limit << ")\n";
    if (!item.ok) status = 1;
  }
  return status;
}

int cmd_dump(const std::string& config, std::uint64_t seed, const std::string& out_path) {
  ExperimentSpec spec = load(config);
  const RunOutput run = run_one(spec, seed, true);
  Output out(out_path);
  write_message_log_csv(out.stream(), seed, run.log);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous distributed tracking experiments"};
  app.require_subcommand(1);

  std::string config, out_path, axis;
  std::vector<double> values;
  double max_failure_rate = -1;
  double min_slope = -1e300, max_slope = 1e300;
  double scale = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t cal_seed = 2024;

  auto* run = app.add_subcommand("run", "run every seed of a config, CSV out");
  run->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_path, "CSV file (default stdout)");
  run->add_option("--max-failure-rate", max_failure_rate,
                  "fail if more probes than this fraction miss eps*n");

  auto* sw = app.add_subcommand("sweep", "sweep one axis and fit a log-log slope");
  sw->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axis, "k, eps or N")->required()->check(
      CLI::IsMember({"k", "eps", "N"}));
  sw->add_option("--values", values, "axis values")->required()->delimiter(',');
  sw->add_option("-o,--out", out_path, "CSV file (default stdout)");
  sw->add_option("--min-slope", min_slope, "lower slope bound to check");
  sw->add_option("--max-slope", max_slope, "upper slope bound to check");

  auto* cal = app.add_subcommand("calibrate", "re-measure the frozen constants");
  cal->add_option("-o,--out", out_path, "constants file (default calibration.txt)");
  cal->add_option("--scale", scale, "trial count multiplier");
  cal->add_option("--seed", cal_seed, "calibration seed");

  auto* dump = app.add_subcommand("dump-messages", "message log of one run as CSV");
  dump->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  dump->add_option("--seed", seed, "run seed");
  dump->add_option("-o,--out", out_path, "CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out_path, max_failure_rate);
    if (*sw) return cmd_sweep(config, axis, values, out_path, min_slope, max_slope);
    if (*cal) return cmd_calibrate(out_path, scale, cal_seed);
    if (*dump) return cmd_dump(config, seed, out_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
