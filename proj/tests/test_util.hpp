#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "disttrack/sim/comm_stats.hpp"
#include "disttrack/sim/engine.hpp"

namespace disttrack::testing {

class VectorSource : public ArrivalSource {
 public:
  explicit VectorSource(std::vector<Arrival> arrivals)
      : arrivals_(std::move(arrivals)) {}
  bool next(Arrival& arrival) override {
    if (pos_ == arrivals_.size()) return false;
    arrival = arrivals_[pos_++];
    return true;
  }

 private:
  std::vector<Arrival> arrivals_;
  std::size_t pos_ = 0;
};

// Recounts a message log into a fresh ledger.
inline CommStats recount(const std::vector<LoggedMessage>& log, SiteId k) {
  CommStats stats(k);
  for (const LoggedMessage& entry : log) stats.charge(entry.message);
  return stats;
}

}  // namespace disttrack::testing
