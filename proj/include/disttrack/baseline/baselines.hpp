#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "disttrack/sim/protocol.hpp"
#include "disttrack/sim/rng.hpp"

namespace disttrack::baseline {

struct DetCountSiteState {
  std::uint64_t n = 0;
  std::uint64_t last_report = 0;
};

// True when n has grown by a (1 + eps) factor since the last report; the
// first arrival always reports.
bool det_should_report(const DetCountSiteState& state, double eps);

// Each site reports its count whenever it grew by a (1 + eps) factor.
class DetCountTracker : public Protocol {
 public:
  DetCountTracker(SiteId k, double eps);

  SiteId num_sites() const override { return k_; }
  void on_arrival(SiteId site, Key key, Outbox& out) override;
  void on_site_message(SiteId, const Message&, Outbox&) override {}
  void on_coordinator_message(const Message& message, Outbox& out) override;
  bool supports(QueryKind kind) const override {
    return kind == QueryKind::kCount;
  }
  double estimate(const Query& query) const override;
  std::uint64_t peak_site_words() const override { return 2; }

  double estimate_count() const { return static_cast<double>(sum_); }
  const DetCountSiteState& site(SiteId i) const { return sites_.at(i); }

 private:
  SiteId k_;
  double eps_;
  std::vector<DetCountSiteState> sites_;
  std::vector<std::uint64_t> reports_;
  std::uint64_t sum_ = 0;
};

// Sample size c / eps^2, rounded up.
std::uint64_t sample_size_for(double eps, double c = 4.0);

// Bottom-s priority sample: every element gets a uniform 64-bit priority
// and is forwarded iff it is below the site's threshold tau. The
// coordinator keeps the s smallest and re-broadcasts tau once it has at
// least halved.
class PrioritySampleTracker : public Protocol {
 public:
  PrioritySampleTracker(SiteId k, std::uint64_t sample_size,
                        std::uint64_t seed);

  SiteId num_sites() const override { return k_; }
  void on_arrival(SiteId site, Key key, Outbox& out) override;
  void on_site_message(SiteId site, const Message& message,
                       Outbox& out) override;
  void on_coordinator_message(const Message& message, Outbox& out) override;
  bool supports(QueryKind) const override { return true; }
  double estimate(const Query& query) const override;
  std::uint64_t peak_site_words() const override { return 2; }

  double estimate_count() const;
  double estimate_frequency(Key item) const;
  double estimate_rank(Key x) const;

  // (priority, key), ascending.
  const std::set<std::pair<std::uint64_t, Key>>& kept() const { return kept_; }
  std::uint64_t sample_size() const { return s_; }
  std::uint64_t site_tau(SiteId i) const { return tau_.at(i); }
  std::uint64_t broadcasts() const { return broadcasts_; }

  static constexpr std::uint64_t kNoThreshold = UINT64_MAX;

 private:
  // Probability mass below the s-th smallest priority, or 0 while the
  // sample still holds everything.
  double threshold_fraction() const;
  template <typename Pred>
  double weighted_count(Pred pred) const;

  SiteId k_;
  std::uint64_t s_;
  std::vector<Rng> site_rngs_;
  std::vector<std::uint64_t> tau_;
  std::set<std::pair<std::uint64_t, Key>> kept_;
  std::uint64_t last_broadcast_ = kNoThreshold;
  std::uint64_t broadcasts_ = 0;
};

}  // namespace disttrack::baseline
