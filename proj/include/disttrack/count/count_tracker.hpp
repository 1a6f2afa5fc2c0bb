#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "disttrack/sim/protocol.hpp"
#include "disttrack/sim/rng.hpp"

namespace disttrack::count {

using MaybeCount = std::optional<std::uint64_t>;

// Largest power of two strictly smaller than x; requires x > 1.
double dyadic_floor(double x);

// Per-arrival report probability for a round with broadcast value nbar:
// min(1, 1 / dyadic_floor(eps * nbar / (c_p * sqrt(k)))).
double report_probability(std::uint64_t nbar, double eps, SiteId k,
                          double c_p);

// Unbiased per-site estimate: nbar_i - 1 + 1/p if a report exists, else 0.
double estimate_site_count(MaybeCount nbar_i, double p);

struct CountSiteState {
  std::uint64_t n = 0;
  MaybeCount nbar;  // last value reported under the current p
  double p = 1.0;
  CoinStream coin;
};

// Counts one arrival; returns the reported value when the p-coin fires.
MaybeCount site_on_arrival_fixed_p(CountSiteState& state, Rng& rng);
// Same as m single arrivals, in O(reports) time; returns the last report.
MaybeCount site_on_arrivals_fixed_p(CountSiteState& state, std::uint64_t m,
                                    Rng& rng);

// Re-targets a last-report value from p to new_p = p / 2 so that it is
// distributed as if the site had always run with new_p. Returns the new
// value; nullopt (also for a walk down to zero) means no report exists.
MaybeCount halve_p_adjust(MaybeCount nbar_i, double new_p, Rng& rng);

// Doubling reports let the coordinator keep nbar within a constant factor
// of n; every broadcast starts a new round.
class NbarCoordinator {
 public:
  explicit NbarCoordinator(SiteId k) : last_report_(k, 0) {}

  static bool is_doubling_point(std::uint64_t n) {
    return n != 0 && (n & (n - 1)) == 0;
  }

  // Returns the new nbar when it must be broadcast.
  std::optional<std::uint64_t> on_doubling_report(SiteId site,
                                                  std::uint64_t value);

  std::uint64_t nbar() const { return nbar_; }
  std::uint64_t reported_sum() const { return sum_; }
  std::uint64_t broadcasts() const { return broadcasts_; }

 private:
  std::vector<std::uint64_t> last_report_;
  std::uint64_t sum_ = 0;
  std::uint64_t nbar_ = 0;
  std::uint64_t broadcasts_ = 0;
};

struct CountConfig {
  SiteId k = 1;
  double eps = 0.1;
  double c_p = 4.0;
};

void validate(const CountConfig& config);

class CountTracker : public Protocol {
 public:
  CountTracker(CountConfig config, std::uint64_t seed,
               std::uint16_t channel = 0);

  SiteId num_sites() const override { return config_.k; }
  void on_arrival(SiteId site, Key key, Outbox& out) override;
  void on_site_message(SiteId site, const Message& message,
                       Outbox& out) override;
  void on_coordinator_message(const Message& message, Outbox& out) override;
  bool supports(QueryKind kind) const override {
    return kind == QueryKind::kCount;
  }
  double estimate(const Query& query) const override;
  std::uint64_t peak_site_words() const override { return kSiteWords; }

  double estimate_count() const;
  std::vector<double> site_estimates() const;

  const CountConfig& config() const { return config_; }
  std::uint64_t nbar() const { return nbar_.nbar(); }
  std::uint64_t broadcasts() const { return nbar_.broadcasts(); }
  double coordinator_p() const { return p_; }
  const CountSiteState& site(SiteId i) const { return sites_.at(i); }
  MaybeCount coordinator_view(SiteId i) const { return reports_.at(i); }

  // n, nbar_i, p and the coin countdown.
  static constexpr std::uint64_t kSiteWords = 4;

 private:
  CountConfig config_;
  std::uint16_t channel_;
  std::vector<CountSiteState> sites_;
  std::vector<Rng> site_rngs_;
  std::vector<MaybeCount> reports_;
  NbarCoordinator nbar_;
  double p_ = 1.0;
};

// Median of an odd number of estimates.
double median_boost(std::span<const double> estimates);

// m independent copies of CountTracker, answering with the median.
class BoostedCountTracker : public Protocol {
 public:
  BoostedCountTracker(CountConfig config, std::uint32_t copies,
                      std::uint64_t seed);

  SiteId num_sites() const override { return copies_.front().num_sites(); }
  void on_arrival(SiteId site, Key key, Outbox& out) override;
  void on_site_message(SiteId site, const Message& message,
                       Outbox& out) override;
  void on_coordinator_message(const Message& message, Outbox& out) override;
  bool supports(QueryKind kind) const override {
    return kind == QueryKind::kCount;
  }
  double estimate(const Query& query) const override;
  std::uint64_t peak_site_words() const override {
    return CountTracker::kSiteWords * copies_.size();
  }

  double estimate_count() const;
  std::size_t size() const { return copies_.size(); }
  const CountTracker& copy(std::size_t i) const { return copies_.at(i); }

 private:
  std::vector<CountTracker> copies_;
};

}  // namespace disttrack::count
