#include <algorithm>
#include <cmath>

#include "disttrack/baseline/baselines.hpp"
#include "disttrack/sim/engine.hpp"
#include "disttrack/workload/workload.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace disttrack;
using namespace disttrack::baseline;

TEST_CASE("deterministic count at eps = 1 reports at powers of two") {
  DetCountTracker tracker(1, 1.0);
  workload::Workload w(workload::round_robin(1 << 20, 1));
  RunOptions options;
  options.keep_log = true;
  const SimulationResult result = run_simulation(tracker, w, {}, nullptr, options);
  CHECK(result.stats.total_messages() == 21);
  std::uint64_t expected = 1;
  for (const LoggedMessage& entry : result.log) {
    CHECK(entry.message.kind == MessageKind::kDetReport);
    CHECK(entry.message.payload.at(0) == expected);
    expected *= 2;
  }
  CHECK(tracker.estimate_count() == static_cast<double>(1 << 20));
}

TEST_CASE("deterministic count stays within its guarantee at every arrival") {
  for (double eps : {0.5, 0.1, 0.01}) {
    const SiteId k = 7;
    DetCountTracker tracker(k, eps);
    workload::Workload w(workload::one_way_hard(50000, k, 3));
    std::uint64_t n = 0;
    RunOptions options;
    options.after_arrival = [&](TimeInstant, const Protocol&) {
      ++n;
      const double est = tracker.estimate_count();
      CHECK(est <= static_cast<double>(n));
      CHECK(est * (1 + eps) >= static_cast<double>(n));
      for (SiteId i = 0; i < k; ++i) {
        const DetCountSiteState& s = tracker.site(i);
        if (s.n == 0) continue;
        CHECK(s.last_report <= s.n);
        CHECK(static_cast<double>(s.n) <
              (1 + eps) * static_cast<double>(s.last_report));
      }
    };
    run_simulation(tracker, w, {}, nullptr, options);
  }
}

TEST_CASE("deterministic cost is k times the single-site schedule") {
  // independent oracle: replay the (1 + eps) rule on one counter
  auto schedule = [](std::uint64_t m, double eps) {
    std::uint64_t reports = 0, last = 0;
    for (std::uint64_t n = 1; n <= m; ++n) {
      if (static_cast<double>(n) >= (1 + eps) * static_cast<double>(last)) {
        ++reports;
        last = n;
      }
    }
    return reports;
  };
  const double eps = 0.05;
  const std::uint64_t n = 1 << 20;
  auto cost = [&](SiteId k) {
    DetCountTracker tracker(k, eps);
    workload::Workload w(workload::round_robin(n, k));
    return run_simulation(tracker, w, {}, nullptr).stats.total_messages();
  };
  for (SiteId k : {4u, 64u}) CHECK(cost(k) == k * schedule(n / k, eps));
  // linear in k apart from the log(n / k) factor of each site's schedule
  const double ratio = static_cast<double>(cost(64)) / static_cast<double>(cost(4));
  MESSAGE("k=64 / k=4 message ratio " << ratio);
  CHECK(ratio > 0.7 * 16);
  CHECK(ratio <= 16);
}

TEST_CASE("sample size") {
  CHECK(sample_size_for(0.1) == 400);
  CHECK(sample_size_for(0.05) == 1600);
  CHECK(sample_size_for(0.5, 1.0) == 4);
}

TEST_CASE("a sample larger than the stream keeps everything") {
  PrioritySampleTracker tracker(5, 1000, 2);
  workload::Workload w(workload::random_keys(800, 5, 2));
  const SimulationResult result = run_simulation(tracker, w, {}, nullptr);
  CHECK(result.stats.total_messages() == 800);
  CHECK(tracker.kept().size() == 800);
  CHECK(tracker.estimate_count() == 800.0);
  CHECK(tracker.broadcasts() == 0);
}

TEST_CASE("kept set equals the s smallest priorities (brute force)") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SiteId k = 6;
    const std::uint64_t s = 50;
    const std::uint64_t seed_mix = seed * 1000;
    PrioritySampleTracker tracker(k, s, seed_mix);
    workload::Workload w(workload::random_keys(10000, k, seed), {}, true);
    // each site draws exactly one priority per arrival from its substream
    std::vector<Rng> oracle_rngs;
    for (SiteId i = 0; i < k; ++i) {
      oracle_rngs.push_back(
          make_rng(seed_mix, {static_cast<std::uint64_t>(Stream::kSite), i}));
    }
    std::vector<std::pair<std::uint64_t, Key>> all;
    RunOptions options;
    std::size_t seen = 0;
    options.after_arrival = [&](TimeInstant, const Protocol&) {
      const Arrival& a = w.history()[seen++];
      all.emplace_back(oracle_rngs[a.site](), a.key);
      if (seen % 250 != 0) return;
      std::vector<std::pair<std::uint64_t, Key>> sorted = all;
      std::sort(sorted.begin(), sorted.end());
      sorted.resize(std::min<std::size_t>(s, sorted.size()));
      CHECK(std::equal(sorted.begin(), sorted.end(), tracker.kept().begin(),
                       tracker.kept().end()));
    };
    const SimulationResult result = run_simulation(tracker, w, {}, nullptr, options);
    CHECK(result.stats.total_messages() < 10000);
    CHECK(tracker.broadcasts() > 0);
  }
}

TEST_CASE("sample estimates at s = 4 / eps^2") {
  const double eps = 0.1;
  const SiteId k = 8;
  const std::uint64_t n = 100000;
  std::uint64_t good_f = 0, good_r = 0, total_f = 0, total_r = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    workload::TruthOptions truth;
    truth.frequencies = true;
    truth.dense_universe = 10000;
    workload::Workload zipf(workload::zipf_items(n, k, 1.1, 10000, seed), truth);
    PrioritySampleTracker freq(k, sample_size_for(eps), seed);
    std::vector<TimeInstant> probes;
    for (std::uint64_t t = n / 10 - 1; t < n; t += n / 10) probes.push_back(t);
    auto freq_planner = [&](TimeInstant, const Protocol& p) {
      std::vector<QueryOutcome> out;
      for (const auto& [item, f] : zipf.truth().top(10)) {
        const Query q{QueryKind::kFrequency, item};
        out.push_back({q, static_cast<double>(f), p.estimate(q)});
      }
      return out;
    };
    for (const auto& rec : run_simulation(freq, zipf, probes, freq_planner).records) {
      for (const auto& q : rec.queries) {
        ++total_f;
        good_f += std::abs(q.estimate - q.truth) <= eps * (rec.t + 1);
      }
    }

    workload::TruthOptions rank_truth;
    rank_truth.ranks = true;
    workload::Workload keys(workload::random_keys(n, k, seed), rank_truth);
    PrioritySampleTracker rank(k, sample_size_for(eps), seed + 7);
    auto rank_planner = [&](TimeInstant t, const Protocol& p) {
      std::vector<QueryOutcome> out;
      for (int d = 1; d <= 9; ++d) {
        const Key x = keys.truth().key_at_rank((t + 1) * d / 10);
        const Query q{QueryKind::kRank, x};
        out.push_back({q, static_cast<double>(keys.truth().rank(x)), p.estimate(q)});
      }
      return out;
    };
    for (const auto& rec : run_simulation(rank, keys, probes, rank_planner).records) {
      for (const auto& q : rec.queries) {
        ++total_r;
        good_r += std::abs(q.estimate - q.truth) <= eps * (rec.t + 1);
      }
    }
  }
  CHECK(good_f >= 0.85 * total_f);
  CHECK(good_r >= 0.85 * total_r);
}

TEST_CASE("sampling cost does not depend on k") {
  auto cost = [](SiteId k) {
    PrioritySampleTracker tracker(k, sample_size_for(0.1), 5);
    workload::Workload w(workload::random_keys(200000, k, 5));
    auto result = run_simulation(tracker, w, {}, nullptr);
    std::uint64_t up = 0;
    for (const SiteTraffic& t : result.stats.per_site()) up += t.messages_up;
    return static_cast<double>(up);
  };
  const double ratio = cost(64) / cost(4);
  MESSAGE("forwarded samples, k=64 / k=4: " << ratio);
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.25));
}
