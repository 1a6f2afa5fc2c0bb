#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "disttrack/error.hpp"
#include "disttrack/harness/calibration.hpp"
#include "disttrack/harness/experiment.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace disttrack;
using namespace disttrack::harness;

namespace {

ExperimentSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string run_csv(const ExperimentSpec& spec) {
  std::ostringstream os;
  write_csv_header(os);
  for (std::uint64_t seed : spec.seeds) write_run_csv(os, run_one(spec, seed));
  return os.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentSpec spec = parse(R"(
# comment line
tracker = freq
eps = 0.05   # trailing comment
delta = 0.01
workload.kind = zipf
workload.N = 5000
workload.k = 8
workload.alpha = 1.3
workload.universe = 1000
seeds = 3..6
probes = 10, 20, 4999
top_items = 4
)");
  CHECK(spec.tracker == TrackerKind::kFreq);
  CHECK(spec.eps == 0.05);
  CHECK(spec.delta == 0.01);
  CHECK(spec.workload.kind == workload::Kind::kZipf);
  CHECK(spec.workload.n == 5000);
  CHECK(spec.workload.k == 8);
  CHECK(spec.workload.alpha == 1.3);
  CHECK(spec.workload.universe == 1000);
  CHECK(spec.seeds == std::vector<std::uint64_t>{3, 4, 5, 6});
  CHECK(spec.probes == std::vector<TimeInstant>{10, 20, 4999});
  CHECK(spec.top_items == 4);

  const ExperimentSpec shorthand = parse("k = 4\nN = 100\nseeds = 7,9\n");
  CHECK(shorthand.workload.k == 4);
  CHECK(shorthand.workload.n == 100);
  CHECK(shorthand.seeds == std::vector<std::uint64_t>{7, 9});
  CHECK(parse("copies = auto").copies == 0);
  CHECK(parse("probes = auto").probes.empty());
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse("no_such_key = 1"), ConfigError);
  CHECK_THROWS_AS(parse("eps"), ConfigError);
  CHECK_THROWS_AS(parse("eps = abc"), ConfigError);
  CHECK_THROWS_AS(parse("tracker = nope"), ConfigError);
  CHECK_THROWS_AS(parse("workload.kind = nope"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config"), ConfigError);

  ExperimentSpec spec = parse("eps = 0.1\nN = 10\nk = 2\n");
  CHECK(validate(spec).empty());
  spec.eps = 1.0;
  CHECK_THROWS_AS(validate(spec), ConfigError);
  spec.tracker = TrackerKind::kDetCount;
  CHECK_NOTHROW(validate(spec));
  spec.eps = 0.1;
  spec.tracker = TrackerKind::kCount;
  spec.copies = 4;
  CHECK_THROWS_AS(validate(spec), ConfigError);
  spec.copies = 3;
  CHECK_NOTHROW(validate(spec));
  spec.tracker = TrackerKind::kFreq;
  CHECK_THROWS_AS(validate(spec), ConfigError);
  spec.copies = 1;
  spec.tracker = TrackerKind::kRank;
  spec.workload.kind = workload::Kind::kZipf;
  CHECK_THROWS_AS(validate(spec), ConfigError);
}

TEST_CASE("k above 1/eps^2 only warns") {
  ExperimentSpec spec = parse("eps = 0.2\nk = 26\nN = 100\n");
  const auto warnings = validate(spec);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("1/eps^2") != std::string::npos);
  spec.workload.k = 25;
  CHECK(validate(spec).empty());
}

TEST_CASE("default probes") {
  CHECK(default_probes(0, 0.1).empty());
  CHECK(default_probes(1, 0.1) == std::vector<TimeInstant>{0});
  // eps = 1: n = 1, 2, 4, 8, then the last arrival.
  CHECK(default_probes(10, 1.0) == std::vector<TimeInstant>{0, 1, 3, 7, 9});

  // Oracle: consecutive probe counts grow by at least max(1, eps) and at most
  // a factor (1 + eps) rounded up.
  const double eps = 0.05;
  const auto probes = default_probes(100000, eps);
  CHECK(probes.front() == 0);
  CHECK(probes.back() == 99999);
  for (std::size_t i = 1; i + 1 < probes.size(); ++i) {
    const double prev = static_cast<double>(probes[i - 1] + 1);
    const double cur = static_cast<double>(probes[i] + 1);
    CHECK(cur > prev);
    CHECK(cur <= std::ceil(std::max(prev + 1, prev * (1 + eps))) + 1);
  }
  CHECK(probes.size() < 300);
}

TEST_CASE("empty workload gives a header-only CSV") {
  ExperimentSpec spec = parse("N = 0\nk = 4\n");
  const auto out = lines(run_csv(spec));
  REQUIRE(out.size() == 1);
  CHECK(out[0].rfind("seed,probe_t,truth,estimate", 0) == 0);
}

TEST_CASE("deterministic count single site at eps = 1") {
  ExperimentSpec spec = parse("tracker = det_count\neps = 1\nN = 1048576\nk = 1\n");
  const RunOutput run = run_one(spec, 1);
  CHECK(run.summary.comm.messages_up == 21);
  CHECK(run.summary.comm.messages_down == 0);
  CHECK(run.summary.final_estimate == 1048576.0);
  const auto out = lines(run_csv(spec));
  CHECK(out.back().rfind("1,summary,1048576,1048576,0,0,21,0,", 0) == 0);
}

TEST_CASE("run output is deterministic and the summary aggregates the rows") {
  for (const char* tracker : {"count", "freq", "rank", "sample", "det_count"}) {
    CAPTURE(tracker);
    const std::string kind = std::string(tracker) == "freq" ? "zipf" : "random_keys";
    ExperimentSpec spec = parse(std::string("tracker = ") + tracker +
                                "\neps = 0.1\nN = 20000\nk = 8\nseeds = 1,2\n"
                                "workload.kind = " + kind + "\n");
    const std::string a = run_csv(spec);
    CHECK(a == run_csv(spec));

    const RunOutput run = run_one(spec, 2);
    REQUIRE(!run.records.empty());
    CHECK(run.summary.arrivals == 20000);
    CHECK(run.summary.probes == run.records.size());
    double max_abs = 0;
    std::size_t failures = 0;
    std::uint64_t peak = 0;
    for (const ExperimentRecord& r : run.records) {
      max_abs = std::max(max_abs, r.abs_err);
      peak = std::max(peak, r.peak_site_words);
      if (r.abs_err > spec.eps * static_cast<double>(r.t + 1)) ++failures;
    }
    CHECK(run.summary.max_abs_err == max_abs);
    CHECK(run.summary.probe_failures == failures);
    CHECK(run.summary.peak_site_words >= peak);
    // Traffic in the last row is cumulative, so it matches the summary.
    CHECK(run.records.back().comm.messages_up == run.summary.comm.messages_up);
    CHECK(run.records.back().comm.words_down == run.summary.comm.words_down);
  }
}

TEST_CASE("different seeds give different runs") {
  ExperimentSpec spec = parse("eps = 0.1\nN = 20000\nk = 8\n");
  CHECK(run_one(spec, 1).summary.total_words() != run_one(spec, 2).summary.total_words());
}

TEST_CASE("message log matches the ledger") {
  ExperimentSpec spec = parse("tracker = freq\nworkload.kind = zipf\neps = 0.1\nN = 20000\nk = 8\n");
  const RunOutput run = run_one(spec, 5, true);
  const CommStats recounted = testing::recount(run.log, spec.workload.k);
  CHECK(recounted.totals().messages_up == run.summary.comm.messages_up);
  CHECK(recounted.totals().words_down == run.summary.comm.words_down);
  std::ostringstream os;
  write_message_log_csv(os, 5, run.log);
  CHECK(lines(os.str()).size() == run.log.size() + 1);
}

TEST_CASE("copies = auto uses odd 2 ln(1/delta) median copies") {
  ExperimentSpec spec = parse("copies = auto\ndelta = 0.01\neps = 0.2\nN = 5000\nk = 4\n");
  CHECK(validate(spec).empty());
  const RunOutput boosted = run_one(spec, 3);
  spec.copies = 1;
  const RunOutput single = run_one(spec, 3);
  // 2 ln 100 = 9.2, so 11 copies; each copy pays its own traffic.
  CHECK(boosted.summary.total_messages() > 5 * single.summary.total_messages());
}

TEST_CASE("sweeps refuse too few points or seeds") {
  ExperimentSpec spec = parse("eps = 0.2\nN = 2000\nk = 4\nseeds = 1..20\n");
  CHECK_THROWS_AS(sweep(spec, SweepAxis::kK, {2, 4, 8}), ConfigError);
  ExperimentSpec few = spec;
  few.seeds = {1, 2, 3};
  CHECK_THROWS_AS(sweep(few, SweepAxis::kK, {2, 4, 8, 16}), ConfigError);
  CHECK_THROWS_AS(parse_axis("z"), ConfigError);

  const SweepResult result = sweep(spec, SweepAxis::kK, {2, 4, 8, 16});
  REQUIRE(result.points.size() == 4);
  for (const SweepPoint& p : result.points) CHECK(p.messages.count() == 20);
  CHECK(result.fit.slope > 0.0);
  CHECK(with_axis_value(spec, SweepAxis::kEps, 0.05).eps == 0.05);
  CHECK(with_axis_value(spec, SweepAxis::kN, 1000).workload.n == 1000);
  std::ostringstream os;
  write_sweep_csv(os, result);
  CHECK(lines(os.str()).size() >= 5);
}

TEST_CASE("calibration smoke run agrees with the frozen constants") {
  const auto items = calibrate({7, 0.02});
  REQUIRE(items.size() == 5);
  std::ostringstream os;
  write_constants(os, items);
  for (const CalibrationItem& item : items) {
    CAPTURE(item.name);
    CAPTURE(item.measured);
    CHECK(std::isfinite(item.measured));
    CHECK(os.str().find(item.name) != std::string::npos);
  }
}
