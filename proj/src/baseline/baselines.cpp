#include "disttrack/baseline/baselines.hpp"

#include <cmath>
#include <iterator>

#include "disttrack/error.hpp"

namespace disttrack::baseline {

bool det_should_report(const DetCountSiteState& state, double eps) {
  return static_cast<double>(state.n) >=
         (1.0 + eps) * static_cast<double>(state.last_report);
}

DetCountTracker::DetCountTracker(SiteId k, double eps)
    : k_(k), eps_(eps), sites_(k), reports_(k, 0) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
}

void DetCountTracker::on_arrival(SiteId site, Key, Outbox& out) {
  DetCountSiteState& s = sites_[site];
  ++s.n;
  if (det_should_report(s, eps_)) {
    s.last_report = s.n;
    out.send(Endpoint::coordinator(), MessageKind::kDetReport, {s.n});
  }
}

void DetCountTracker::on_coordinator_message(const Message& message, Outbox&) {
  if (message.kind != MessageKind::kDetReport) return;
  const SiteId site = message.from.index();
  sum_ += message.payload.at(0) - reports_[site];
  reports_[site] = message.payload.at(0);
}

double DetCountTracker::estimate(const Query& query) const {
  if (query.kind != QueryKind::kCount) {
    throw UsageError("deterministic tracker answers count queries only");
  }
  return estimate_count();
}

std::uint64_t sample_size_for(double eps, double c) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  return static_cast<std::uint64_t>(std::ceil(c / (eps * eps) - 1e-9));
}

PrioritySampleTracker::PrioritySampleTracker(SiteId k,
                                             std::uint64_t sample_size,
                                             std::uint64_t seed)
    : k_(k), s_(sample_size), tau_(k, kNoThreshold) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (sample_size < 2) throw ConfigError("sample size must be >= 2");
  site_rngs_.reserve(k);
  for (SiteId i = 0; i < k; ++i) {
    site_rngs_.push_back(
        make_rng(seed, {static_cast<std::uint64_t>(Stream::kSite), i}));
  }
}

void PrioritySampleTracker::on_arrival(SiteId site, Key key, Outbox& out) {
  const std::uint64_t priority = site_rngs_[site]();
  if (tau_[site] == kNoThreshold || priority < tau_[site]) {
    out.send(Endpoint::coordinator(), MessageKind::kSampleForward,
             {priority, key});
  }
}

void PrioritySampleTracker::on_site_message(SiteId site, const Message& message,
                                            Outbox&) {
  if (message.kind == MessageKind::kTauBroadcast) {
    tau_[site] = message.payload.at(0);
  }
}

void PrioritySampleTracker::on_coordinator_message(const Message& message,
                                                   Outbox& out) {
  if (message.kind != MessageKind::kSampleForward) return;
  kept_.emplace(message.payload.at(0), message.payload.at(1));
  if (kept_.size() > s_) kept_.erase(std::prev(kept_.end()));
  if (kept_.size() < s_) return;
  const std::uint64_t tau = std::prev(kept_.end())->first;
  if (last_broadcast_ == kNoThreshold || tau <= last_broadcast_ / 2) {
    last_broadcast_ = tau;
    ++broadcasts_;
    out.broadcast(MessageKind::kTauBroadcast, {tau});
  }
}

double PrioritySampleTracker::threshold_fraction() const {
  if (kept_.size() < s_) return 0.0;
  return std::ldexp(static_cast<double>(std::prev(kept_.end())->first), -64);
}

template <typename Pred>
double PrioritySampleTracker::weighted_count(Pred pred) const {
  const double q = threshold_fraction();
  double hits = 0;
  auto end = q == 0.0 ? kept_.end() : std::prev(kept_.end());
  for (auto it = kept_.begin(); it != end; ++it) {
    if (pred(it->second)) hits += 1;
  }
  return q == 0.0 ? hits : hits / q;
}

double PrioritySampleTracker::estimate_count() const {
  return weighted_count([](Key) { return true; });
}

double PrioritySampleTracker::estimate_frequency(Key item) const {
  return weighted_count([item](Key key) { return key == item; });
}

double PrioritySampleTracker::estimate_rank(Key x) const {
  return weighted_count([x](Key key) { return key < x; });
}

double PrioritySampleTracker::estimate(const Query& query) const {
  switch (query.kind) {
    case QueryKind::kCount:
      return estimate_count();
    case QueryKind::kFrequency:
      return estimate_frequency(query.key);
    case QueryKind::kRank:
      return estimate_rank(query.key);
  }
  return 0.0;
}

}  // namespace disttrack::baseline
