#include "disttrack/sim/comm_stats.hpp"

#include <stdexcept>

namespace disttrack {

void CommStats::charge(const Message& message) {
  const std::uint64_t words = message.words();
  if (message.from.is_site()) {
    SiteTraffic& site = per_site_.at(message.from.index());
    ++site.messages_up;
    site.words_up += words;
    ++totals_.messages_up;
    totals_.words_up += words;
  } else {
    SiteTraffic& site = per_site_.at(message.to.index());
    ++site.messages_down;
    site.words_down += words;
    ++totals_.messages_down;
    totals_.words_down += words;
  }
}

void CommStats::charge_broadcast(std::uint64_t words_per_message) {
  for (SiteTraffic& site : per_site_) {
    ++site.messages_down;
    site.words_down += words_per_message;
  }
  totals_.messages_down += per_site_.size();
  totals_.words_down += per_site_.size() * words_per_message;
}

CommStats charge_broadcast(CommStats stats, std::uint64_t words_per_message,
                           SiteId k) {
  if (k < 1) throw std::invalid_argument("charge_broadcast: k must be >= 1");
  if (stats.num_sites() == 0) {
    stats = CommStats(k);
  } else if (stats.num_sites() != k) {
    throw std::invalid_argument("charge_broadcast: stats sized for " +
                                std::to_string(stats.num_sites()) +
                                " sites, k = " + std::to_string(k));
  }
  stats.charge_broadcast(words_per_message);
  return stats;
}

}  // namespace disttrack
