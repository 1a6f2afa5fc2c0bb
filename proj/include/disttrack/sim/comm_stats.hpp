#pragma once

#include <cstdint>
#include <vector>

#include "disttrack/sim/message.hpp"

namespace disttrack {

struct SiteTraffic {
  std::uint64_t messages_up = 0;
  std::uint64_t messages_down = 0;
  std::uint64_t words_up = 0;
  std::uint64_t words_down = 0;

  bool operator==(const SiteTraffic&) const = default;
};

// Communication ledger. Totals always equal the sum over `per_site`.
class CommStats {
 public:
  CommStats() = default;
  explicit CommStats(SiteId num_sites) : per_site_(num_sites) {}

  void charge(const Message& message);
  // A coordinator broadcast costs one message per site.
  void charge_broadcast(std::uint64_t words_per_message);

  std::uint64_t messages_up() const { return totals_.messages_up; }
  std::uint64_t messages_down() const { return totals_.messages_down; }
  std::uint64_t words_up() const { return totals_.words_up; }
  std::uint64_t words_down() const { return totals_.words_down; }
  std::uint64_t total_messages() const {
    return totals_.messages_up + totals_.messages_down;
  }
  std::uint64_t total_words() const {
    return totals_.words_up + totals_.words_down;
  }

  const SiteTraffic& totals() const { return totals_; }
  const std::vector<SiteTraffic>& per_site() const { return per_site_; }
  SiteId num_sites() const { return static_cast<SiteId>(per_site_.size()); }

  bool operator==(const CommStats&) const = default;

 private:
  SiteTraffic totals_;
  std::vector<SiteTraffic> per_site_;
};

// Functional form of CommStats::charge_broadcast for a k-site system.
CommStats charge_broadcast(CommStats stats, std::uint64_t words_per_message,
                           SiteId k);

}  // namespace disttrack
