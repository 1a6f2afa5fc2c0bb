#include "disttrack/workload/ground_truth.hpp"

#include <algorithm>
#include <ext/pb_ds/assoc_container.hpp>
#include <ext/pb_ds/tree_policy.hpp>
#include <map>

#include "disttrack/error.hpp"

namespace disttrack::workload {

struct GroundTruth::OrderStats {
  __gnu_pbds::tree<Key, __gnu_pbds::null_type, std::less<Key>,
                   __gnu_pbds::rb_tree_tag,
                   __gnu_pbds::tree_order_statistics_node_update>
      keys;
};

GroundTruth::GroundTruth(TruthOptions options) : options_(options) {
  if (options_.frequencies && options_.dense_universe > 0) {
    dense_.assign(options_.dense_universe, 0);
  }
  if (options_.ranks) order_ = std::make_unique<OrderStats>();
}

GroundTruth::~GroundTruth() = default;
GroundTruth::GroundTruth(GroundTruth&&) noexcept = default;
GroundTruth& GroundTruth::operator=(GroundTruth&&) noexcept = default;

void GroundTruth::observe(const Arrival& arrival) {
  ++n_;
  if (options_.frequencies) {
    std::uint64_t count;
    if (arrival.key < dense_.size()) {
      count = ++dense_[arrival.key];
    } else {
      count = ++sparse_[arrival.key];
    }
    if (options_.top_items > 0) bump_top(arrival.key, count);
  }
  if (order_) {
    if (!order_->keys.insert(arrival.key).second) {
      throw UsageError("duplicate key " + std::to_string(arrival.key) +
                       " in a rank workload");
    }
  }
}

void GroundTruth::bump_top(Key item, std::uint64_t count) {
  std::size_t pos;
  if (auto it = top_pos_.find(item); it != top_pos_.end()) {
    pos = it->second;
    top_[pos].second = count;
  } else if (top_.size() < options_.top_items) {
    pos = top_.size();
    top_.emplace_back(item, count);
    top_pos_[item] = pos;
  } else if (count > top_.back().second) {
    pos = top_.size() - 1;
    top_pos_.erase(top_[pos].first);
    top_[pos] = {item, count};
    top_pos_[item] = pos;
  } else {
    return;
  }
  while (pos > 0 && top_[pos - 1].second < count) {
    std::swap(top_[pos - 1], top_[pos]);
    top_pos_[top_[pos].first] = pos;
    top_pos_[top_[pos - 1].first] = pos - 1;
    --pos;
  }
}

std::uint64_t GroundTruth::frequency(Key item) const {
  if (!options_.frequencies) throw UsageError("frequencies not tracked");
  if (item < dense_.size()) return dense_[item];
  auto it = sparse_.find(item);
  return it == sparse_.end() ? 0 : it->second;
}

std::vector<std::pair<Key, std::uint64_t>> GroundTruth::top(
    std::size_t m) const {
  if (!options_.frequencies) throw UsageError("frequencies not tracked");
  if (m > options_.top_items) {
    throw UsageError("top(m) limited to top_items = " +
                     std::to_string(options_.top_items));
  }
  return {top_.begin(),
          top_.begin() + static_cast<std::ptrdiff_t>(std::min(m, top_.size()))};
}

std::uint64_t GroundTruth::rank(Key x) const {
  if (!order_) throw UsageError("ranks not tracked");
  return order_->keys.order_of_key(x);
}

Key GroundTruth::key_at_rank(std::uint64_t r) const {
  if (!order_) throw UsageError("ranks not tracked");
  if (r >= order_->keys.size()) throw std::out_of_range("rank beyond n");
  return *order_->keys.find_by_order(r);
}

bool GroundTruth::audit(std::span<const Arrival> history) const {
  if (history.size() != n_) return false;
  if (options_.frequencies) {
    std::map<Key, std::uint64_t> counts;
    for (const Arrival& a : history) ++counts[a.key];
    for (const auto& [item, c] : counts) {
      if (frequency(item) != c) return false;
    }
    // The tracked top set must dominate every item outside it.
    std::uint64_t floor = top_.empty() ? 0 : top_.back().second;
    if (top_.size() == options_.top_items) {
      for (const auto& [item, c] : counts) {
        if (!top_pos_.count(item) && c > floor) return false;
      }
    }
  }
  if (order_) {
    std::vector<Key> keys;
    keys.reserve(history.size());
    for (const Arrival& a : history) keys.push_back(a.key);
    std::sort(keys.begin(), keys.end());
    for (std::size_t r = 0; r < keys.size(); ++r) {
      if (key_at_rank(r) != keys[r]) return false;
    }
  }
  return true;
}

}  // namespace disttrack::workload
