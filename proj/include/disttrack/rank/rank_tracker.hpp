#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <tuple>
#include <vector>

#include "disttrack/count/count_tracker.hpp"
#include "disttrack/rank/summary.hpp"
#include "disttrack/sim/protocol.hpp"

namespace disttrack::rank {

// Per-round Algorithm C parameters derived from the broadcast nbar.
struct RoundParams {
  std::uint64_t nbar = 0;
  std::uint64_t chunk_capacity = 1;  // C = max(1, nbar / k)
  std::uint64_t block_size = 1;      // b = max(1, eps nbar / sqrt k)
  std::uint64_t blocks = 1;          // B = ceil(C / b)
  std::uint32_t height = 0;          // h = ceil(log2 B)
  double tail_p = 1.0;               // min(1, sqrt k / (eps nbar))
  bool raw = true;                   // every element forwarded as is

  // Summary error parameter for tree level l: 2^-l / sqrt(max(1, h)).
  double level_eps(std::uint32_t level) const;
  // Whether the level-l node ending at block j is complete.
  bool node_full(std::uint64_t block, std::uint32_t level) const;
};

RoundParams make_round_params(std::uint64_t nbar, double eps, SiteId k);

struct RankConfig {
  SiteId k = 1;
  double eps = 0.1;
  SummaryKind summary = SummaryKind::kMergeable;
  // Keeps every chunk's keys outside the protocol for the variance meter.
  bool audit = false;
};

void validate(const RankConfig& config);

struct RankSiteState {
  std::uint64_t n = 0;
  RoundParams params;
  bool chunk_open = false;
  std::uint32_t chunk = 0;  // chunks opened this round
  std::uint64_t in_chunk = 0;
  std::vector<std::unique_ptr<SummaryBuilder>> spine;  // one per level
  CoinStream tail_coin;
};

// A shipped node of the block tree.
struct TreeNode {
  std::uint64_t first_block = 0;
  std::uint64_t last_block = 0;
  std::uint32_t level = 0;
  RankSummary summary;
};

struct ChunkRecord {
  SiteId site = 0;
  std::uint32_t index = 0;  // per site, per round
  std::uint64_t leaves = 0;
  std::deque<std::uint32_t> pending_levels;
  bool closing = false;
  std::vector<TreeNode> decomposition;  // maximal, ordered by block
  std::vector<Key> tail;
};

struct RankRound {
  RoundParams params;
  std::vector<ChunkRecord> chunks;
  std::vector<Key> raw;
};

// Squared-error meter for one chunk at its own deciles.
struct ChunkAudit {
  std::size_t round = 0;
  std::size_t chunk = 0;
  std::uint64_t elements = 0;
  std::uint64_t block_size = 1;
  double mean_squared_error = 0;
  double ratio() const {
    const double b = static_cast<double>(block_size);
    return mean_squared_error / (b * b);
  }
};

class RankTracker : public Protocol {
 public:
  RankTracker(RankConfig config, std::uint64_t seed);

  SiteId num_sites() const override { return config_.k; }
  void on_arrival(SiteId site, Key key, Outbox& out) override;
  void on_site_message(SiteId site, const Message& message,
                       Outbox& out) override;
  void on_coordinator_message(const Message& message, Outbox& out) override;
  bool supports(QueryKind kind) const override {
    return kind == QueryKind::kRank;
  }
  double estimate(const Query& query) const override;
  std::uint64_t peak_site_words() const override { return peak_words_; }

  double estimate_rank(Key x) const;
  // Estimated number of elements so far.
  double estimate_total() const;
  // Smallest key whose estimated count of keys <= it exceeds phi * total.
  Key quantile(double phi) const;

  const RankConfig& config() const { return config_; }
  const std::vector<RankRound>& rounds() const { return rounds_; }
  const RankSiteState& site(SiteId i) const { return sites_.at(i); }
  std::uint64_t nbar() const { return nbar_.nbar(); }
  static std::uint64_t site_words(const RankSiteState& s);

  // Needs config.audit.
  std::vector<ChunkAudit> chunk_audits() const;
  // Estimate restricted to one chunk.
  double chunk_estimate(const RankRound& round, const ChunkRecord& chunk,
                        Key x) const;

  // n, chunk, in_chunk, tail coin and the round parameters.
  static constexpr std::uint64_t kSiteFixedWords = 8;

 private:
  void start_site_round(SiteId site, std::uint64_t nbar);
  void ship_level(SiteId site, std::uint32_t level, Outbox& out);
  ChunkRecord& site_chunk(SiteId site);
  void accept_node(ChunkRecord& chunk, TreeNode node);

  RankConfig config_;
  std::vector<RankSiteState> sites_;
  std::vector<Rng> site_rngs_;
  std::vector<std::uint32_t> site_round_;
  std::map<std::tuple<std::uint32_t, SiteId, std::uint32_t>, std::vector<Key>>
      audit_;
  std::uint64_t peak_words_ = kSiteFixedWords;

  count::NbarCoordinator nbar_;
  std::vector<RankRound> rounds_;
  // (round, chunk) the site is currently feeding
  std::vector<std::optional<std::pair<std::size_t, std::size_t>>> current_;
};

// Rank-to-frequency reduction: item j with arrival tiebreak t maps to the
// key (j << 32) | t, t in [1, 2^32 - 2].
Key wrap_item(Key item, std::uint32_t tiebreak);
double frequency_via_rank(const RankTracker& tracker, Key item);

}  // namespace disttrack::rank
