#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "disttrack/sim/engine.hpp"

namespace disttrack::workload {

struct TruthOptions {
  bool frequencies = false;
  bool ranks = false;
  // Size of the exactly maintained most-frequent set.
  std::size_t top_items = 16;
  // Item ids below this bound use a dense counter array.
  std::uint64_t dense_universe = 0;
};

// Exact n, item frequencies and key ranks, maintained incrementally.
class GroundTruth {
 public:
  explicit GroundTruth(TruthOptions options = {});
  ~GroundTruth();
  GroundTruth(GroundTruth&&) noexcept;
  GroundTruth& operator=(GroundTruth&&) noexcept;

  void observe(const Arrival& arrival);

  std::uint64_t count() const { return n_; }
  std::uint64_t frequency(Key item) const;
  // Up to m items with the largest frequencies, most frequent first
  // (m <= top_items).
  std::vector<std::pair<Key, std::uint64_t>> top(std::size_t m) const;
  // Number of keys strictly smaller than x.
  std::uint64_t rank(Key x) const;
  // The key with exactly r smaller keys; r < count().
  Key key_at_rank(std::uint64_t r) const;

  const TruthOptions& options() const { return options_; }

  // Recomputes everything from scratch and compares.
  bool audit(std::span<const Arrival> history) const;

 private:
  void bump_top(Key item, std::uint64_t count);

  TruthOptions options_;
  std::uint64_t n_ = 0;
  std::vector<std::uint64_t> dense_;
  std::unordered_map<Key, std::uint64_t> sparse_;
  std::vector<std::pair<Key, std::uint64_t>> top_;  // sorted descending
  std::unordered_map<Key, std::size_t> top_pos_;
  struct OrderStats;
  std::unique_ptr<OrderStats> order_;
};

}  // namespace disttrack::workload
