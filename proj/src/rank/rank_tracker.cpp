#include "disttrack/rank/rank_tracker.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "disttrack/error.hpp"

namespace disttrack::rank {

double RoundParams::level_eps(std::uint32_t level) const {
  return std::ldexp(1.0, -static_cast<int>(level)) /
         std::sqrt(std::max(1.0, static_cast<double>(height)));
}

bool RoundParams::node_full(std::uint64_t block, std::uint32_t level) const {
  return (block + 1) % (std::uint64_t{1} << level) == 0 || block + 1 == blocks;
}

RoundParams make_round_params(std::uint64_t nbar, double eps, SiteId k) {
  RoundParams p;
  p.nbar = nbar;
  if (nbar == 0) return p;
  const double root_k = std::sqrt(static_cast<double>(k));
  const double scaled = eps * static_cast<double>(nbar) / root_k;
  p.chunk_capacity = std::max<std::uint64_t>(1, nbar / k);
  p.block_size = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(scaled));
  p.blocks = (p.chunk_capacity + p.block_size - 1) / p.block_size;
  p.height = p.blocks <= 1 ? 0 : std::bit_width(p.blocks - 1);
  p.tail_p = std::min(1.0, 1.0 / scaled);
  p.raw = p.tail_p >= 1.0;
  return p;
}

void validate(const RankConfig& config) {
  count::validate(count::CountConfig{config.k, config.eps, 4.0});
}

RankTracker::RankTracker(RankConfig config, std::uint64_t seed)
    : config_(config),
      sites_(config.k),
      site_round_(config.k, 0),
      nbar_(config.k),
      current_(config.k) {
  validate(config_);
  site_rngs_.reserve(config_.k);
  for (SiteId i = 0; i < config_.k; ++i) {
    site_rngs_.push_back(
        make_rng(seed, {static_cast<std::uint64_t>(Stream::kSite), i}));
    start_site_round(i, 0);
  }
  rounds_.push_back(RankRound{make_round_params(0, config_.eps, config_.k), {}, {}});
}

std::uint64_t RankTracker::site_words(const RankSiteState& s) {
  std::uint64_t words = kSiteFixedWords;
  for (const auto& node : s.spine) {
    if (node) words += node->words();
  }
  return words;
}

void RankTracker::start_site_round(SiteId site, std::uint64_t nbar) {
  RankSiteState& s = sites_[site];
  s.params = make_round_params(nbar, config_.eps, config_.k);
  s.chunk_open = false;
  s.chunk = 0;
  s.in_chunk = 0;
  s.spine.clear();
  s.spine.resize(s.params.height + 1);
  s.tail_coin.reset(site_rngs_[site], s.params.tail_p);
}

void RankTracker::ship_level(SiteId site, std::uint32_t level, Outbox& out) {
  RankSiteState& s = sites_[site];
  std::unique_ptr<SummaryBuilder> node = std::move(s.spine[level]);
  if (!node || node->count() == 0) return;
  out.send(Endpoint::coordinator(), MessageKind::kSummaryShip,
           node->finalize().to_payload());
}

void RankTracker::on_arrival(SiteId site, Key key, Outbox& out) {
  RankSiteState& s = sites_[site];
  Rng& rng = site_rngs_[site];
  ++s.n;
  const RoundParams& params = s.params;
  if (params.raw) {
    out.send(Endpoint::coordinator(), MessageKind::kTailSample, {key});
  } else {
    if (!s.chunk_open || s.in_chunk == params.chunk_capacity) {
      s.chunk_open = true;
      s.in_chunk = 0;
      std::fill(s.spine.begin(), s.spine.end(), nullptr);
      out.send(Endpoint::coordinator(), MessageKind::kChunkOpen, {s.chunk});
      ++s.chunk;
    }
    ++s.in_chunk;
    for (std::uint32_t level = 0; level <= params.height; ++level) {
      auto& node = s.spine[level];
      if (!node) {
        node = make_summary(config_.summary, params.level_eps(level), rng);
      }
      node->insert(key);
    }
    if (config_.audit) {
      audit_[{site_round_[site], site, s.chunk - 1}].push_back(key);
    }
    if (s.tail_coin.next(rng)) {
      out.send(Endpoint::coordinator(), MessageKind::kTailSample, {key});
    }
    if (s.in_chunk % params.block_size == 0 ||
        s.in_chunk == params.chunk_capacity) {
      const std::uint64_t block = (s.in_chunk - 1) / params.block_size;
      for (std::uint32_t level = 0; level <= params.height; ++level) {
        if (!params.node_full(block, level)) break;
        ship_level(site, level, out);
      }
    }
  }
  peak_words_ = std::max(peak_words_, site_words(s));
  if (count::NbarCoordinator::is_doubling_point(s.n)) {
    out.send(Endpoint::coordinator(), MessageKind::kDoublingReport, {s.n});
  }
}

void RankTracker::on_site_message(SiteId site, const Message& message,
                                  Outbox& out) {
  if (message.kind != MessageKind::kNbarBroadcast) return;
  // Only the partial leaf is needed: the coordinator already holds full
  // nodes for every completed block of this chunk.
  if (sites_[site].chunk_open) ship_level(site, 0, out);
  ++site_round_[site];
  start_site_round(site, message.payload.at(0));
}

ChunkRecord& RankTracker::site_chunk(SiteId site) {
  const auto& where = current_.at(site);
  if (!where) throw ContractViolation("summary from a site without a chunk");
  return rounds_.at(where->first).chunks.at(where->second);
}

void RankTracker::accept_node(ChunkRecord& chunk, TreeNode node) {
  auto& dec = chunk.decomposition;
  while (!dec.empty() && dec.back().first_block >= node.first_block) {
    dec.pop_back();
  }
  dec.push_back(std::move(node));
}

void RankTracker::on_coordinator_message(const Message& message, Outbox& out) {
  const SiteId site = message.from.index();
  switch (message.kind) {
    case MessageKind::kChunkOpen: {
      RankRound& round = rounds_.back();
      ChunkRecord chunk;
      chunk.site = site;
      chunk.index = static_cast<std::uint32_t>(message.payload.at(0));
      round.chunks.push_back(std::move(chunk));
      current_[site] = std::pair{rounds_.size() - 1, round.chunks.size() - 1};
      break;
    }
    case MessageKind::kTailSample: {
      RankRound& round = rounds_.back();
      if (round.params.raw) {
        round.raw.push_back(message.payload.at(0));
      } else {
        site_chunk(site).tail.push_back(message.payload.at(0));
      }
      break;
    }
    case MessageKind::kSummaryShip: {
      ChunkRecord& chunk = site_chunk(site);
      TreeNode node;
      node.summary = RankSummary::from_payload(message.payload);
      if (chunk.closing || chunk.pending_levels.empty()) {
        // a leaf: either a completed block or the final partial one
        const std::uint64_t block = chunk.leaves++;
        node.first_block = node.last_block = block;
        chunk.tail.clear();
        if (chunk.closing) {
          current_[site].reset();
        } else {
          const RoundParams& params = rounds_[current_[site]->first].params;
          for (std::uint32_t level = 1;
               level <= params.height && params.node_full(block, level);
               ++level) {
            chunk.pending_levels.push_back(level);
          }
        }
      } else {
        node.level = chunk.pending_levels.front();
        chunk.pending_levels.pop_front();
        node.last_block = chunk.leaves - 1;
        node.first_block = (node.last_block >> node.level) << node.level;
      }
      accept_node(chunk, std::move(node));
      break;
    }
    case MessageKind::kDoublingReport:
      if (auto nbar = nbar_.on_doubling_report(site, message.payload.at(0))) {
        for (SiteId i = 0; i < config_.k; ++i) {
          if (current_[i]) site_chunk(i).closing = true;
        }
        rounds_.push_back(
            RankRound{make_round_params(*nbar, config_.eps, config_.k), {}, {}});
        out.broadcast(MessageKind::kNbarBroadcast, {*nbar});
      }
      break;
    default:
      break;
  }
}

double RankTracker::chunk_estimate(const RankRound& round,
                                   const ChunkRecord& chunk, Key x) const {
  double total = 0;
  for (const TreeNode& node : chunk.decomposition) {
    total += node.summary.estimate_rank(x);
  }
  const auto below = std::count_if(chunk.tail.begin(), chunk.tail.end(),
                                   [x](Key key) { return key < x; });
  return total + static_cast<double>(below) / round.params.tail_p;
}

double RankTracker::estimate_rank(Key x) const {
  double total = 0;
  for (const RankRound& round : rounds_) {
    total += static_cast<double>(std::count_if(
        round.raw.begin(), round.raw.end(), [x](Key key) { return key < x; }));
    for (const ChunkRecord& chunk : round.chunks) {
      total += chunk_estimate(round, chunk, x);
    }
  }
  return total;
}

double RankTracker::estimate_total() const {
  double total = 0;
  for (const RankRound& round : rounds_) {
    total += static_cast<double>(round.raw.size());
    for (const ChunkRecord& chunk : round.chunks) {
      for (const TreeNode& node : chunk.decomposition) {
        total += static_cast<double>(node.summary.covered());
      }
      total += static_cast<double>(chunk.tail.size()) / round.params.tail_p;
    }
  }
  return total;
}

Key RankTracker::quantile(double phi) const {
  if (!(phi >= 0.0 && phi <= 1.0)) throw UsageError("phi must lie in [0, 1]");
  const double target = phi * estimate_total();
  // smallest x with estimate_rank(x + 1) > target
  Key lo = 0, hi = std::numeric_limits<Key>::max();
  while (lo < hi) {
    const Key mid = lo + (hi - lo) / 2;
    if (estimate_rank(mid + 1) > target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

double RankTracker::estimate(const Query& query) const {
  if (query.kind != QueryKind::kRank) {
    throw UsageError("rank tracker answers rank queries only");
  }
  return estimate_rank(query.key);
}

std::vector<ChunkAudit> RankTracker::chunk_audits() const {
  if (!config_.audit) throw UsageError("chunk audits need audit mode");
  std::vector<ChunkAudit> audits;
  for (std::size_t r = 0; r < rounds_.size(); ++r) {
    const RankRound& round = rounds_[r];
    for (std::size_t c = 0; c < round.chunks.size(); ++c) {
      const ChunkRecord& chunk = round.chunks[c];
      auto it = audit_.find({static_cast<std::uint32_t>(r), chunk.site,
                             chunk.index});
      if (it == audit_.end()) continue;
      std::vector<Key> keys = it->second;
      std::sort(keys.begin(), keys.end());
      ChunkAudit audit{r, c, keys.size(), round.params.block_size, 0.0};
      for (int decile = 1; decile <= 9; ++decile) {
        const std::size_t rank = keys.size() * decile / 10;
        const double err =
            chunk_estimate(round, chunk, keys[rank]) - static_cast<double>(rank);
        audit.mean_squared_error += err * err / 9.0;
      }
      audits.push_back(audit);
    }
  }
  return audits;
}

Key wrap_item(Key item, std::uint32_t tiebreak) {
  return (item << 32) | tiebreak;
}

double frequency_via_rank(const RankTracker& tracker, Key item) {
  return tracker.estimate_rank(wrap_item(item, 0xffffffffu)) -
         tracker.estimate_rank(wrap_item(item, 0));
}

}  // namespace disttrack::rank
