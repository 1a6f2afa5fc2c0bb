#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "disttrack/count/count_tracker.hpp"
#include "disttrack/sim/protocol.hpp"
#include "disttrack/sim/rng.hpp"

namespace disttrack::freq {

using count::MaybeCount;

// cbar - 2 + 2/p if a counter report exists, else 0. Biased by
// f * (1-p)^f; kept to demonstrate why the sampled fallback is needed.
double estimate_fij_biased(MaybeCount cbar, double p);

// cbar - 2 + 2/p if a counter report exists, else -d/p, where d counts the
// independently sampled copies. Unbiased.
double estimate_fij_final(MaybeCount cbar, std::uint64_t d, double p);

// Per-site lossy counter list: a counter is created only when the creation
// coin fires.
struct CounterList {
  std::unordered_map<Key, std::uint64_t> counters;
};

struct InsertOutcome {
  MaybeCount report;     // counter value to send with the item
  bool sampled = false;  // independent sample feeding d_ij
};

// One arrival of `item`. report_coin drives counter creation and updates,
// sample_coin the independent d_ij stream; both draw from `rng` in a fixed
// order.
InsertOutcome mm_insert(CounterList& list, Key item, CoinStream& report_coin,
                        CoinStream& sample_coin, Rng& rng);

struct FreqConfig {
  SiteId k = 1;
  double eps = 0.1;
  double c_p = 4.0;
};

void validate(const FreqConfig& config);

// Arrivals a virtual site takes before it splits.
std::uint64_t virtual_site_capacity(std::uint64_t nbar, SiteId k);

struct FreqSiteState {
  std::uint64_t n = 0;  // all arrivals ever; drives doubling reports
  std::uint64_t nbar = 0;  // broadcast value of the current round
  std::uint32_t generation = 0;
  std::uint64_t seen = 0;  // arrivals in the current virtual site
  std::uint64_t capacity = 1;
  double p = 1.0;
  CounterList list;
  CoinStream report_coin;
  CoinStream sample_coin;
  std::uint64_t round_peak_words = 0;
};

// Peak memory of one physical site during one round.
struct MemorySample {
  SiteId site = 0;
  std::uint32_t round = 0;
  std::uint64_t peak_words = 0;
  double p = 1.0;
  std::uint64_t nbar = 0;
};

// Coordinator view of one round, reduced to per-item sums over its virtual
// sites.
struct RoundSummary {
  std::uint64_t nbar = 0;
  double p = 1.0;
  std::uint32_t virtual_sites = 0;
  std::uint64_t messages = 0;  // site-to-coordinator freq traffic
  std::unordered_map<Key, double> estimates;
};

class FreqTracker : public Protocol {
 public:
  FreqTracker(FreqConfig config, std::uint64_t seed);

  SiteId num_sites() const override { return config_.k; }
  void on_arrival(SiteId site, Key item, Outbox& out) override;
  void on_site_message(SiteId site, const Message& message,
                       Outbox& out) override;
  void on_coordinator_message(const Message& message, Outbox& out) override;
  bool supports(QueryKind kind) const override {
    return kind == QueryKind::kFrequency;
  }
  double estimate(const Query& query) const override;
  std::uint64_t peak_site_words() const override { return peak_words_; }

  double estimate_fj(Key item) const;
  // Per-round terms of estimate_fj, oldest first; the last is the live round.
  std::vector<double> round_contributions(Key item) const;

  const FreqConfig& config() const { return config_; }
  const std::vector<RoundSummary>& archived_rounds() const { return archive_; }
  const RoundSummary& live_round() const { return live_; }
  std::size_t rounds() const { return archive_.size() + 1; }
  std::uint64_t nbar() const { return nbar_.nbar(); }
  const FreqSiteState& site(SiteId i) const { return sites_.at(i); }
  // Every closed site round plus the live one.
  std::vector<MemorySample> memory_samples() const;

  // n, nbar, generation, seen, capacity, p and two coin countdowns; each counter
  // costs two words (item, value).
  static constexpr std::uint64_t kSiteFixedWords = 8;
  static std::uint64_t site_words(const FreqSiteState& s) {
    return kSiteFixedWords + 2 * s.list.counters.size();
  }

 private:
  struct Cell {
    MaybeCount cbar;
    std::uint64_t d = 0;
  };
  struct CellKey {
    SiteId site;
    std::uint32_t generation;
    Key item;
    bool operator==(const CellKey&) const = default;
  };
  struct CellKeyHash {
    std::size_t operator()(const CellKey& key) const {
      return mix64(key.item ^ mix64((std::uint64_t{key.site} << 32) |
                                    key.generation));
    }
  };

  void start_site_round(SiteId site, std::uint64_t nbar);
  void apply(const CellKey& key, Cell& cell, const Cell& updated);

  FreqConfig config_;
  std::vector<FreqSiteState> sites_;
  std::vector<Rng> site_rngs_;
  std::vector<std::uint32_t> site_round_;
  std::vector<MemorySample> closed_memory_;
  std::uint64_t peak_words_ = kSiteFixedWords;

  count::NbarCoordinator nbar_;
  std::vector<std::uint32_t> generation_;
  std::unordered_map<CellKey, Cell, CellKeyHash> cells_;
  RoundSummary live_;
  std::vector<RoundSummary> archive_;
};

}  // namespace disttrack::freq
