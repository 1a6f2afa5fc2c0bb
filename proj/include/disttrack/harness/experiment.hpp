#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "disttrack/rank/summary.hpp"
#include "disttrack/sim/engine.hpp"
#include "disttrack/workload/workload.hpp"
#include "disttrack/harness/stats.hpp"

namespace disttrack::harness {

enum class TrackerKind { kCount, kDetCount, kFreq, kRank, kSample };

std::string tracker_name(TrackerKind kind);
TrackerKind parse_tracker(const std::string& name);

struct ExperimentSpec {
  TrackerKind tracker = TrackerKind::kCount;
  workload::WorkloadSpec workload;  // carries N and k
  double eps = 0.1;
  double delta = 0.1;
  std::uint32_t copies = 1;  // median boosting for the count tracker
  double c_p = 4.0;
  std::uint64_t sample_size = 0;  // 0: 4 / eps^2
  rank::SummaryKind summary = rank::SummaryKind::kMergeable;
  // Empty: one probe per (1 + eps) growth of n, plus the last arrival.
  std::vector<TimeInstant> probes;
  std::vector<std::uint64_t> seeds{1};
  std::size_t top_items = 10;
};

// Flat "key = value" text; '#' starts a comment.
ExperimentSpec parse_config(std::istream& in);
ExperimentSpec load_config(const std::string& path);

// Throws ConfigError; returns warnings.
std::vector<std::string> validate(const ExperimentSpec& spec);

// Probe at every arrival where n = t + 1 first reaches the next (1 + eps)
// multiple of the previous probe, plus the final arrival.
std::vector<TimeInstant> default_probes(std::uint64_t n, double eps);

struct RunSummary {
  std::uint64_t seed = 0;
  std::uint64_t arrivals = 0;
  SiteTraffic comm;
  std::uint64_t peak_site_words = 0;
  std::size_t probes = 0;
  std::size_t probe_failures = 0;  // worst query beyond eps * n
  double max_abs_err = 0;
  double max_rel_err = 0;
  double final_truth = 0;
  double final_estimate = 0;

  std::uint64_t total_messages() const {
    return comm.messages_up + comm.messages_down;
  }
  std::uint64_t total_words() const { return comm.words_up + comm.words_down; }
};

struct RunOutput {
  std::vector<ExperimentRecord> records;
  RunSummary summary;
  std::vector<LoggedMessage> log;
};

std::unique_ptr<Protocol> make_protocol(const ExperimentSpec& spec,
                                        std::uint64_t seed);

// The workload seed is derived from the run seed.
workload::WorkloadSpec workload_for(const ExperimentSpec& spec,
                                    std::uint64_t seed);

RunOutput run_one(const ExperimentSpec& spec, std::uint64_t seed,
                  bool keep_log = false);

// Per-probe rows followed by one summary row (probe_t = "summary").
void write_csv_header(std::ostream& os);
void write_run_csv(std::ostream& os, const RunOutput& run);

enum class SweepAxis { kK, kEps, kN };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);

struct SweepPoint {
  double value = 0;
  stats::Moments messages;
  stats::Moments words;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::kK;
  std::vector<SweepPoint> points;
  // Log-log fit of mean total messages against k, 1/eps, or log N.
  stats::SlopeFit fit;
};

ExperimentSpec with_axis_value(ExperimentSpec spec, SweepAxis axis,
                               double value);

inline constexpr std::size_t kMinSweepSeeds = 20;

SweepResult sweep(const ExperimentSpec& base, SweepAxis axis,
                  const std::vector<double>& values);

// axis, value, seeds, mean_messages, sd_messages, mean_words, sd_words;
// then a fit line.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

}  // namespace disttrack::harness
