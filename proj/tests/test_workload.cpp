#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "disttrack/workload/workload.hpp"
#include "doctest.h"

using namespace disttrack;
using namespace disttrack::workload;

namespace {

std::vector<Arrival> drain(Workload& w) {
  std::vector<Arrival> out;
  Arrival a;
  while (w.next(a)) out.push_back(a);
  return out;
}

std::vector<SiteId> sites_of(const std::vector<Arrival>& arrivals) {
  std::vector<SiteId> out;
  for (const Arrival& a : arrivals) out.push_back(a.site);
  return out;
}

}  // namespace

TEST_CASE("round robin") {
  Workload w(round_robin(6, 3));
  auto arrivals = drain(w);
  CHECK(sites_of(arrivals) == std::vector<SiteId>{0, 1, 2, 0, 1, 2});

  Workload big(round_robin(3000, 7));
  std::vector<std::uint64_t> per_site(7);
  Arrival a;
  std::uint64_t t = 0;
  while (big.next(a)) {
    ++per_site[a.site];
    CHECK(big.truth().count() == t + 1);
    ++t;
  }
  // 3000 = 7 * 428 + 4: the remainder goes to the lowest indices.
  for (SiteId i = 0; i < 7; ++i) CHECK(per_site[i] == (i < 4 ? 429u : 428u));
}

TEST_CASE("one-way hard distribution") {
  WorkloadSpec a = one_way_hard(100, 4, 1);
  a.force_single_site = true;
  a.force_site = 2;
  Workload wa(a);
  for (const Arrival& x : drain(wa)) CHECK(x.site == 2);

  WorkloadSpec b = one_way_hard(100, 4, 1);
  b.force_single_site = false;
  Workload wb(b);
  Workload rr(round_robin(100, 4));
  CHECK(sites_of(drain(wb)) == sites_of(drain(rr)));

  int single = 0;
  const int seeds = 10000;
  for (int seed = 0; seed < seeds; ++seed) {
    Workload w(one_way_hard(10, 4, seed));
    single += w.single_site_case();
  }
  CHECK(std::abs(single / double(seeds) - 0.5) <= 0.02);
}

TEST_CASE("two-way hard distribution") {
  WorkloadSpec spec = two_way_hard(16, 1, 1, 3);
  spec.force_s = 12;
  Workload w(spec);
  CHECK(w.size() == 12);
  CHECK(drain(w).size() == 12);

  CHECK_THROWS_AS(Workload(two_way_hard(9, 1, 1, 0)), ConfigError);

  Workload rounded(two_way_hard(20, 2, 2, 0));
  CHECK(rounded.sqrt_k() == 4);
  CHECK(rounded.sqrt_k_rounded());

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SiteId k = 64;
    const std::uint32_t r = 4;  // r = 1 / (2 eps sqrt k)
    const double eps = 1.0 / (2.0 * r * std::sqrt(double(k)));
    Workload hard(two_way_hard(k, 6, r, seed));
    auto arrivals = drain(hard);
    CHECK(arrivals.size() == hard.size());
    std::size_t pos = 0;
    std::uint64_t cumulative = 0;
    for (const Subround& sub : hard.subrounds()) {
      CHECK((sub.s == k / 2 + 8 || sub.s == k / 2 - 8));
      CHECK(std::set<SiteId>(sub.sites.begin(), sub.sites.end()).size() ==
            sub.s);
      std::map<SiteId, std::uint64_t> got;
      for (std::uint64_t i = 0; i < sub.s * sub.per_site; ++i) {
        ++got[arrivals[pos++].site];
      }
      CHECK(got.size() == sub.s);
      for (const auto& [site, c] : got) CHECK(c == (1u << sub.round));
      cumulative += sub.s * sub.per_site;
      CHECK(cumulative <= std::sqrt(double(k)) / eps * (1u << sub.round));
    }
  }
}

TEST_CASE("zipf items") {
  Workload w(zipf_items(20000, 4, 20.0, 1000, 1),
             TruthOptions{true, false, 16, 1000});
  auto arrivals = drain(w);
  auto zeros = std::count_if(arrivals.begin(), arrivals.end(),
                             [](const Arrival& a) { return a.key == 0; });
  CHECK(zeros >= 0.99 * 20000);
  CHECK(w.truth().frequency(0) == static_cast<std::uint64_t>(zeros));
}

TEST_CASE("random keys are distinct") {
  Workload w(random_keys(50000, 8, 4));
  auto arrivals = drain(w);
  std::set<Key> keys;
  for (const Arrival& a : arrivals) keys.insert(a.key);
  CHECK(keys.size() == arrivals.size());
}

TEST_CASE("same seed gives the same sequence") {
  for (auto spec : {zipf_items(5000, 3, 1.1, 500, 9), random_keys(5000, 3, 9),
                    one_way_hard(5000, 3, 9), two_way_hard(16, 3, 2, 9)}) {
    Workload a(spec), b(spec);
    auto x = drain(a), y = drain(b);
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i].site == y[i].site);
      CHECK(x[i].key == y[i].key);
    }
  }
}

TEST_CASE("incremental ground truth equals a from-scratch recount") {
  TruthOptions options{true, false, 16, 0};
  Workload zipf(zipf_items(20000, 4, 1.1, 300, 2), options, true);
  Workload keys(random_keys(20000, 4, 2), TruthOptions{false, true}, true);
  std::mt19937_64 rng(0);
  std::set<std::uint64_t> probes;
  while (probes.size() < 100) probes.insert(rng() % 20000);
  Arrival a;
  std::uint64_t t = 0;
  bool ok = true;
  while (zipf.next(a) && keys.next(a)) {
    if (probes.count(t)) {
      ok = ok && zipf.truth().audit(zipf.history());
      ok = ok && keys.truth().audit(keys.history());
      // Top items really are the most frequent.
      std::map<Key, std::uint64_t> counts;
      for (const Arrival& x : zipf.history()) ++counts[x.key];
      std::vector<std::uint64_t> sorted;
      for (auto& [k, c] : counts) sorted.push_back(c);
      std::sort(sorted.rbegin(), sorted.rend());
      auto top = zipf.truth().top(10);
      for (std::size_t i = 0; i < top.size(); ++i) {
        ok = ok && top[i].second == sorted[i];
      }
    }
    ++t;
  }
  CHECK(ok);
}

TEST_CASE("rank truth rejects duplicate keys") {
  GroundTruth truth(TruthOptions{false, true});
  truth.observe({0, 5});
  truth.observe({1, 9});
  CHECK(truth.rank(9) == 1);
  CHECK(truth.key_at_rank(0) == 5);
  CHECK_THROWS_AS(truth.observe({0, 5}), UsageError);
}
