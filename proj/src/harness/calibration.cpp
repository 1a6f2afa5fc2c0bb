#include "disttrack/harness/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "disttrack/count/count_tracker.hpp"
#include "disttrack/freq/freq_tracker.hpp"
#include "disttrack/harness/experiment.hpp"
#include "disttrack/harness/stats.hpp"
#include "disttrack/rank/rank_tracker.hpp"
#include "disttrack/rank/summary.hpp"

namespace disttrack::harness {

namespace {

std::uint64_t scaled(std::uint64_t trials, double scale) {
  return std::max<std::uint64_t>(50, static_cast<std::uint64_t>(trials * scale));
}

// Largest |z| of the count estimator's mean and variance against the
// closed forms over the (n, p) grid.
CalibrationItem count_variance(Rng& rng, double scale) {
  const std::uint64_t trials = scaled(200000, scale);
  double worst = 0;
  for (std::uint64_t n : {10u, 100u, 1000u}) {
    for (double p : {0.5, 0.1, 0.01}) {
      stats::Moments m;
      for (std::uint64_t t = 0; t < trials; ++t) {
        count::CountSiteState site;
        site.p = p;
        site.coin.reset(rng, p);
        for (std::uint64_t i = 0; i < n; ++i) count::site_on_arrival_fixed_p(site, rng);
        m.add(count::estimate_site_count(site.nbar, p));
      }
      const double var = (1 - p) * (1 - std::pow(1 - p, n)) / (p * p);
      worst = std::max(worst, std::abs(m.mean() - n) / m.standard_error());
      worst = std::max(worst, std::abs(m.variance() - var) / m.variance_standard_error());
    }
  }
  return {"count_estimator_max_z", worst, 4.0, worst <= 4.0,
          "mean and variance vs closed form, 4 standard errors"};
}

CalibrationItem report_constant(double scale) {
  ExperimentSpec spec;
  spec.tracker = TrackerKind::kCount;
  spec.workload = workload::round_robin(200000, 16);
  spec.eps = 0.05;
  spec.c_p = frozen::kReportConstant;
  std::uint64_t probes = 0, failures = 0;
  const std::uint64_t seeds = scaled(100, scale);
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const RunOutput run = run_one(spec, seed);
    probes += run.summary.probes;
    failures += run.summary.probe_failures;
  }
  const stats::Interval band = stats::wilson_interval(failures, probes, 0.99);
  std::ostringstream detail;
  detail << "c_p=" << frozen::kReportConstant << " failure rate "
         << static_cast<double>(failures) / static_cast<double>(probes)
         << " wilson99 [" << band.lo << ", " << band.hi << "]";
  return {"count_failure_rate_lower", band.lo, 0.1, band.lo <= 0.1, detail.str()};
}

CalibrationItem summary_constant(Rng& rng, double scale) {
  const std::size_t m = 4096;
  const std::uint64_t seeds = scaled(1000, scale);
  double worst = 0;
  for (double eps_prime : {0.25, 0.125, 0.0625}) {
    std::vector<stats::Moments> err(9);
    for (std::uint64_t s = 0; s < seeds; ++s) {
      std::vector<Key> keys(m);
      for (Key& key : keys) key = rng();
      std::vector<Key> sorted = keys;
      std::sort(sorted.begin(), sorted.end());
      rank::MergeableSummaryBuilder builder(eps_prime, rank::rng_offsets(rng));
      for (Key key : keys) builder.insert(key);
      const rank::RankSummary summary = builder.finalize();
      for (int q = 1; q <= 9; ++q) {
        const std::size_t r = m * q / 10;
        err[q - 1].add(summary.estimate_rank(sorted[r]) - static_cast<double>(r));
      }
    }
    for (const stats::Moments& e : err) {
      worst = std::max(worst, e.stddev() / (eps_prime * static_cast<double>(m)));
    }
  }
  return {"summary_c_A", worst, frozen::kSummaryStdConstant,
          worst <= frozen::kSummaryStdConstant, "max std / (eps' m), m=4096"};
}

CalibrationItem freq_constant(Rng& rng, double scale, std::string& bias_table) {
  const std::uint64_t trials = scaled(100000, scale);
  double worst = 0;
  std::ostringstream table;
  for (double p : {1.0, 0.5, 0.125, 1.0 / 64}) {
    const auto inv = static_cast<std::uint64_t>(1 / p);
    const std::set<std::uint64_t> fs{1, 2, 5, 10, inv, 5 * inv};
    for (std::uint64_t f : fs) {
      stats::Moments final_est, biased;
      for (std::uint64_t t = 0; t < trials; ++t) {
        freq::CounterList list;
        CoinStream report, sample;
        report.reset(rng, p);
        sample.reset(rng, p);
        count::MaybeCount cbar;
        std::uint64_t d = 0;
        for (std::uint64_t c = 0; c < f; ++c) {
          const freq::InsertOutcome out = freq::mm_insert(list, 1, report, sample, rng);
          if (out.report) cbar = out.report;
          if (out.sampled) ++d;
        }
        final_est.add(freq::estimate_fij_final(cbar, d, p));
        biased.add(freq::estimate_fij_biased(cbar, p));
      }
      worst = std::max(worst, final_est.variance() * p * p);
      table << " f=" << f << ",p=" << p << ":bias=" << biased.mean() - f
            << "/expected=" << f * std::pow(1 - p, f);
    }
  }
  bias_table = table.str();
  return {"freq_variance_constant", worst, frozen::kFreqVarianceConstant,
          worst <= frozen::kFreqVarianceConstant, "max Var * p^2 over the grid"};
}

CalibrationItem chunk_constant(double scale) {
  std::vector<double> ratios;
  const std::uint64_t seeds = scaled(10, scale);
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    workload::Workload w(workload::random_keys(200000, 16, seed + 1));
    rank::RankTracker tracker({16, 0.05, rank::SummaryKind::kMergeable, true}, seed + 1);
    run_simulation(tracker, w, {}, nullptr);
    for (const rank::ChunkAudit& audit : tracker.chunk_audits()) {
      if (!tracker.rounds()[audit.round].params.raw) ratios.push_back(audit.ratio());
    }
  }
  const double q99 = stats::quantile(ratios, 0.99);
  return {"chunk_variance_q99", q99, frozen::kChunkVarianceConstant,
          q99 <= frozen::kChunkVarianceConstant,
          "99th percentile of chunk mse / b^2, " + std::to_string(ratios.size()) +
              " chunks"};
}

}  // namespace

std::vector<CalibrationItem> calibrate(const CalibrationOptions& options) {
  Rng rng(options.seed);
  std::vector<CalibrationItem> items;
  items.push_back(count_variance(rng, options.scale));
  items.push_back(report_constant(options.scale));
  items.push_back(summary_constant(rng, options.scale));
  std::string bias_table;
  items.push_back(freq_constant(rng, options.scale, bias_table));
  items.back().detail += ";" + bias_table;
  items.push_back(chunk_constant(options.scale));
  return items;
}

void write_constants(std::ostream& os, const std::vector<CalibrationItem>& items) {
  bool all = true;
  os << std::setprecision(6);
  for (const CalibrationItem& item : items) {
    os << item.name << " = " << item.measured << "  # limit " << item.limit
       << (item.ok ? " ok" : " DISAGREES") << "; " << item.detail << '\n';
    all = all && item.ok;
  }
  os << "frozen.c_p = " << frozen::kReportConstant << '\n'
     << "frozen.c_A = " << frozen::kSummaryStdConstant << '\n'
     << "frozen.freq_variance = " << frozen::kFreqVarianceConstant << '\n'
     << "frozen.chunk_variance = " << frozen::kChunkVarianceConstant << '\n'
     << "status = " << (all ? "ok" : "disagreement") << '\n';
}

}  // namespace disttrack::harness
