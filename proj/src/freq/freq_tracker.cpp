#include "disttrack/freq/freq_tracker.hpp"

#include <algorithm>

#include "disttrack/error.hpp"

namespace disttrack::freq {

double estimate_fij_biased(MaybeCount cbar, double p) {
  if (!cbar) return 0.0;
  return static_cast<double>(*cbar) - 2.0 + 2.0 / p;
}

double estimate_fij_final(MaybeCount cbar, std::uint64_t d, double p) {
  if (cbar) return static_cast<double>(*cbar) - 2.0 + 2.0 / p;
  return -static_cast<double>(d) / p;
}

InsertOutcome mm_insert(CounterList& list, Key item, CoinStream& report_coin,
                        CoinStream& sample_coin, Rng& rng) {
  InsertOutcome outcome;
  const bool report = report_coin.next(rng);
  if (auto it = list.counters.find(item); it != list.counters.end()) {
    ++it->second;
    if (report) outcome.report = it->second;
  } else if (report) {
    list.counters.emplace(item, 1);
    outcome.report = 1;
  }
  outcome.sampled = sample_coin.next(rng);
  return outcome;
}

void validate(const FreqConfig& config) {
  count::validate(count::CountConfig{config.k, config.eps, config.c_p});
}

std::uint64_t virtual_site_capacity(std::uint64_t nbar, SiteId k) {
  return std::max<std::uint64_t>(1, nbar / k);
}

FreqTracker::FreqTracker(FreqConfig config, std::uint64_t seed)
    : config_(config),
      sites_(config.k),
      site_round_(config.k, 0),
      nbar_(config.k),
      generation_(config.k, 0) {
  validate(config_);
  site_rngs_.reserve(config_.k);
  for (SiteId i = 0; i < config_.k; ++i) {
    site_rngs_.push_back(
        make_rng(seed, {static_cast<std::uint64_t>(Stream::kSite), i}));
    start_site_round(i, 0);
  }
  live_.virtual_sites = config_.k;
}

void FreqTracker::start_site_round(SiteId site, std::uint64_t nbar) {
  FreqSiteState& s = sites_[site];
  Rng& rng = site_rngs_[site];
  s.nbar = nbar;
  s.generation = 0;
  s.seen = 0;
  s.capacity = virtual_site_capacity(nbar, config_.k);
  s.p = nbar == 0 ? 1.0
                  : count::report_probability(nbar, config_.eps, config_.k,
                                              config_.c_p);
  s.list.counters.clear();
  s.report_coin.reset(rng, s.p);
  s.sample_coin.reset(rng, s.p);
  s.round_peak_words = site_words(s);
}

void FreqTracker::on_arrival(SiteId site, Key item, Outbox& out) {
  FreqSiteState& s = sites_[site];
  ++s.n;
  if (s.seen == s.capacity) {
    ++s.generation;
    s.seen = 0;
    s.list.counters.clear();
    out.send(Endpoint::coordinator(), MessageKind::kSplitNotify,
             {s.generation});
  }
  ++s.seen;
  const InsertOutcome outcome =
      mm_insert(s.list, item, s.report_coin, s.sample_coin, site_rngs_[site]);
  if (outcome.report) {
    out.send(Endpoint::coordinator(), MessageKind::kFreqReport,
             {item, *outcome.report});
  }
  if (outcome.sampled) {
    out.send(Endpoint::coordinator(), MessageKind::kSample, {item});
  }
  const std::uint64_t words = site_words(s);
  s.round_peak_words = std::max(s.round_peak_words, words);
  peak_words_ = std::max(peak_words_, words);
  if (count::NbarCoordinator::is_doubling_point(s.n)) {
    out.send(Endpoint::coordinator(), MessageKind::kDoublingReport, {s.n});
  }
}

void FreqTracker::on_site_message(SiteId site, const Message& message,
                                  Outbox&) {
  if (message.kind != MessageKind::kNbarBroadcast) return;
  const FreqSiteState& s = sites_[site];
  closed_memory_.push_back(MemorySample{site, site_round_[site],
                                        s.round_peak_words, s.p,
                                        s.nbar});
  ++site_round_[site];
  start_site_round(site, message.payload.at(0));
}

void FreqTracker::apply(const CellKey& key, Cell& cell, const Cell& updated) {
  double& sum = live_.estimates[key.item];
  sum -= estimate_fij_final(cell.cbar, cell.d, live_.p);
  cell = updated;
  sum += estimate_fij_final(cell.cbar, cell.d, live_.p);
}

void FreqTracker::on_coordinator_message(const Message& message, Outbox& out) {
  const SiteId site = message.from.index();
  switch (message.kind) {
    case MessageKind::kFreqReport:
    case MessageKind::kSample: {
      ++live_.messages;
      const CellKey key{site, generation_[site], message.payload.at(0)};
      Cell& cell = cells_[key];
      Cell updated = cell;
      if (message.kind == MessageKind::kFreqReport) {
        updated.cbar = message.payload.at(1);
      } else {
        ++updated.d;
      }
      apply(key, cell, updated);
      break;
    }
    case MessageKind::kSplitNotify:
      ++live_.messages;
      generation_[site] = static_cast<std::uint32_t>(message.payload.at(0));
      ++live_.virtual_sites;
      break;
    case MessageKind::kDoublingReport:
      if (auto nbar = nbar_.on_doubling_report(site, message.payload.at(0))) {
        archive_.push_back(std::move(live_));
        live_ = RoundSummary{};
        live_.nbar = *nbar;
        live_.p = count::report_probability(*nbar, config_.eps, config_.k,
                                            config_.c_p);
        live_.virtual_sites = config_.k;
        cells_.clear();
        std::fill(generation_.begin(), generation_.end(), 0);
        out.broadcast(MessageKind::kNbarBroadcast, {*nbar});
      }
      break;
    default:
      break;
  }
}

double FreqTracker::estimate_fj(Key item) const {
  double total = 0;
  for (double term : round_contributions(item)) total += term;
  return total;
}

std::vector<double> FreqTracker::round_contributions(Key item) const {
  std::vector<double> terms;
  terms.reserve(archive_.size() + 1);
  auto term = [item](const RoundSummary& round) {
    auto it = round.estimates.find(item);
    return it == round.estimates.end() ? 0.0 : it->second;
  };
  for (const RoundSummary& round : archive_) terms.push_back(term(round));
  terms.push_back(term(live_));
  return terms;
}

double FreqTracker::estimate(const Query& query) const {
  if (query.kind != QueryKind::kFrequency) {
    throw UsageError("frequency tracker answers frequency queries only");
  }
  return estimate_fj(query.key);
}

std::vector<MemorySample> FreqTracker::memory_samples() const {
  std::vector<MemorySample> out = closed_memory_;
  for (SiteId i = 0; i < config_.k; ++i) {
    out.push_back(MemorySample{i, site_round_[i], sites_[i].round_peak_words,
                               sites_[i].p, sites_[i].nbar});
  }
  return out;
}

}  // namespace disttrack::freq
