#include "disttrack/count/count_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "disttrack/error.hpp"

namespace disttrack::count {

double dyadic_floor(double x) {
  if (!(x > 1.0)) throw std::domain_error("dyadic_floor requires x > 1");
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);  // x = mantissa * 2^exp
  return std::ldexp(1.0, mantissa == 0.5 ? exponent - 2 : exponent - 1);
}

double report_probability(std::uint64_t nbar, double eps, SiteId k,
                          double c_p) {
  const double x =
      eps * static_cast<double>(nbar) / (c_p * std::sqrt(static_cast<double>(k)));
  if (x <= 2.0) return 1.0;
  return 1.0 / dyadic_floor(x);
}

double estimate_site_count(MaybeCount nbar_i, double p) {
  if (!nbar_i) return 0.0;
  return static_cast<double>(*nbar_i) - 1.0 + 1.0 / p;
}

MaybeCount site_on_arrival_fixed_p(CountSiteState& state, Rng& rng) {
  ++state.n;
  if (!state.coin.next(rng)) return std::nullopt;
  state.nbar = state.n;
  return state.n;
}

MaybeCount site_on_arrivals_fixed_p(CountSiteState& state, std::uint64_t m,
                                    Rng& rng) {
  const std::uint64_t last = state.coin.advance(rng, m);
  MaybeCount report;
  if (last != 0) {
    report = state.n + last;
    state.nbar = report;
  }
  state.n += m;
  return report;
}

MaybeCount halve_p_adjust(MaybeCount nbar_i, double new_p, Rng& rng) {
  if (!nbar_i) return std::nullopt;
  if (flip(rng, 0.5)) return nbar_i;
  // The thinning coin failed on the reported element itself; walk back over
  // earlier elements, each kept with the new probability.
  std::uint64_t value = *nbar_i - 1;
  if (value == 0) return std::nullopt;
  const std::uint64_t misses = draw_skip(rng, new_p);
  if (misses >= value) return std::nullopt;
  return value - misses;
}

std::optional<std::uint64_t> NbarCoordinator::on_doubling_report(
    SiteId site, std::uint64_t value) {
  sum_ += value - last_report_.at(site);
  last_report_[site] = value;
  if (sum_ >= 2 * nbar_ && sum_ > nbar_) {
    nbar_ = sum_;
    ++broadcasts_;
    return nbar_;
  }
  return std::nullopt;
}

void validate(const CountConfig& config) {
  if (config.k < 1) throw ConfigError("k must be >= 1");
  if (!(config.eps > 0.0 && config.eps < 1.0)) {
    throw ConfigError("eps must lie in (0, 1)");
  }
  if (!(config.c_p > 0.0)) throw ConfigError("c_p must be positive");
}

CountTracker::CountTracker(CountConfig config, std::uint64_t seed,
                           std::uint16_t channel)
    : config_(config),
      channel_(channel),
      sites_(config.k),
      reports_(config.k),
      nbar_(config.k) {
  validate(config_);
  site_rngs_.reserve(config_.k);
  for (SiteId i = 0; i < config_.k; ++i) {
    site_rngs_.push_back(make_rng(
        seed, {static_cast<std::uint64_t>(Stream::kSite), channel_, i}));
    sites_[i].coin.reset(site_rngs_[i], sites_[i].p);
  }
}

void CountTracker::on_arrival(SiteId site, Key, Outbox& out) {
  CountSiteState& state = sites_[site];
  if (MaybeCount report = site_on_arrival_fixed_p(state, site_rngs_[site])) {
    out.send(Endpoint::coordinator(), MessageKind::kCountReport, {*report},
             channel_);
  }
  if (NbarCoordinator::is_doubling_point(state.n)) {
    out.send(Endpoint::coordinator(), MessageKind::kDoublingReport, {state.n},
             channel_);
  }
}

void CountTracker::on_site_message(SiteId site, const Message& message,
                                   Outbox& out) {
  if (message.kind != MessageKind::kNbarBroadcast) return;
  CountSiteState& state = sites_[site];
  Rng& rng = site_rngs_[site];
  const double new_p =
      report_probability(message.payload.at(0), config_.eps, config_.k,
                         config_.c_p);
  if (!(new_p < state.p)) return;
  const bool had_report = state.nbar.has_value();
  double p = state.p;
  while (p > new_p) {
    p /= 2;
    state.nbar = halve_p_adjust(state.nbar, p, rng);
  }
  state.p = new_p;
  state.coin.reset(rng, new_p);
  if (had_report) {
    out.send(Endpoint::coordinator(), MessageKind::kPAdjustReport,
             {state.nbar.value_or(0)}, channel_);
  }
}

void CountTracker::on_coordinator_message(const Message& message,
                                          Outbox& out) {
  const SiteId site = message.from.index();
  const std::uint64_t value = message.payload.at(0);
  switch (message.kind) {
    case MessageKind::kCountReport:
      reports_[site] = value;
      break;
    case MessageKind::kPAdjustReport:
      reports_[site] = value == 0 ? MaybeCount{} : MaybeCount{value};
      break;
    case MessageKind::kDoublingReport:
      if (auto nbar = nbar_.on_doubling_report(site, value)) {
        p_ = report_probability(*nbar, config_.eps, config_.k, config_.c_p);
        out.broadcast(MessageKind::kNbarBroadcast, {*nbar}, channel_);
      }
      break;
    default:
      break;
  }
}

double CountTracker::estimate_count() const {
  double total = 0;
  for (const MaybeCount& report : reports_) {
    total += estimate_site_count(report, p_);
  }
  return total;
}

std::vector<double> CountTracker::site_estimates() const {
  std::vector<double> out;
  out.reserve(reports_.size());
  for (const MaybeCount& report : reports_) {
    out.push_back(estimate_site_count(report, p_));
  }
  return out;
}

double CountTracker::estimate(const Query& query) const {
  if (query.kind != QueryKind::kCount) {
    throw UsageError("count tracker answers count queries only");
  }
  return estimate_count();
}

double median_boost(std::span<const double> estimates) {
  if (estimates.empty() || estimates.size() % 2 == 0) {
    throw ConfigError("median boosting needs an odd number of copies, got " +
                      std::to_string(estimates.size()));
  }
  std::vector<double> sorted(estimates.begin(), estimates.end());
  auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  return *mid;
}

BoostedCountTracker::BoostedCountTracker(CountConfig config,
                                         std::uint32_t copies,
                                         std::uint64_t seed) {
  if (copies == 0 || copies % 2 == 0) {
    throw ConfigError("median boosting needs an odd number of copies, got " +
                      std::to_string(copies));
  }
  if (copies > UINT16_MAX) throw ConfigError("too many copies");
  copies_.reserve(copies);
  for (std::uint32_t c = 0; c < copies; ++c) {
    copies_.emplace_back(config, seed, static_cast<std::uint16_t>(c));
  }
}

void BoostedCountTracker::on_arrival(SiteId site, Key key, Outbox& out) {
  for (CountTracker& copy : copies_) copy.on_arrival(site, key, out);
}

void BoostedCountTracker::on_site_message(SiteId site, const Message& message,
                                          Outbox& out) {
  copies_.at(message.channel).on_site_message(site, message, out);
}

void BoostedCountTracker::on_coordinator_message(const Message& message,
                                                 Outbox& out) {
  copies_.at(message.channel).on_coordinator_message(message, out);
}

double BoostedCountTracker::estimate_count() const {
  std::vector<double> estimates;
  estimates.reserve(copies_.size());
  for (const CountTracker& copy : copies_) {
    estimates.push_back(copy.estimate_count());
  }
  return median_boost(estimates);
}

double BoostedCountTracker::estimate(const Query& query) const {
  if (query.kind != QueryKind::kCount) {
    throw UsageError("count tracker answers count queries only");
  }
  return estimate_count();
}

}  // namespace disttrack::count
