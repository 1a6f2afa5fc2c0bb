#include "disttrack/rank/summary.hpp"

#include <algorithm>
#include <cmath>

#include "disttrack/error.hpp"

namespace disttrack::rank {

RankSummary::RankSummary(std::vector<WeightedKey> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const WeightedKey& a, const WeightedKey& b) {
              return a.key < b.key;
            });
  prefix_.reserve(entries_.size());
  std::uint64_t total = 0;
  for (const WeightedKey& e : entries_) {
    total += e.weight();
    prefix_.push_back(total);
  }
}

double RankSummary::estimate_rank(Key x) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), x,
      [](const WeightedKey& e, Key k) { return e.key < k; });
  if (it == entries_.begin()) return 0.0;
  return static_cast<double>(prefix_[it - entries_.begin() - 1]);
}

std::vector<std::uint64_t> RankSummary::to_payload() const {
  std::vector<std::uint64_t> payload;
  payload.reserve(2 * entries_.size());
  for (const WeightedKey& e : entries_) {
    payload.push_back(e.key);
    payload.push_back(e.exponent);
  }
  return payload;
}

RankSummary RankSummary::from_payload(std::span<const std::uint64_t> payload) {
  if (payload.size() % 2 != 0) {
    throw ContractViolation("summary payload must hold (key, exponent) pairs");
  }
  std::vector<WeightedKey> entries;
  entries.reserve(payload.size() / 2);
  for (std::size_t i = 0; i < payload.size(); i += 2) {
    if (payload[i + 1] > 63) throw ContractViolation("weight exponent too large");
    entries.push_back({payload[i], static_cast<std::uint8_t>(payload[i + 1])});
  }
  return RankSummary(std::move(entries));
}

OffsetSource rng_offsets(Rng& rng) {
  return [&rng] { return static_cast<unsigned>(rng() >> 63); };
}

Buffer merge_subsample(const Buffer& a, const Buffer& b, unsigned offset) {
  if (a.weight != b.weight) {
    throw UsageError("merge_subsample needs buffers of equal weight");
  }
  if (offset > 1) throw UsageError("merge offset must be 0 or 1");
  std::vector<Key> merged(a.keys.size() + b.keys.size());
  std::merge(a.keys.begin(), a.keys.end(), b.keys.begin(), b.keys.end(),
             merged.begin());
  Buffer out;
  out.weight = 2 * a.weight;
  out.keys.reserve(merged.size() / 2 + 1);
  for (std::size_t i = offset; i < merged.size(); i += 2) {
    out.keys.push_back(merged[i]);
  }
  return out;
}

void ExactSummaryBuilder::insert(Key key) {
  if (finalized_) throw UsageError("summary already finalized");
  keys_.push_back(key);
}

RankSummary ExactSummaryBuilder::finalize() {
  if (finalized_) throw UsageError("summary already finalized");
  finalized_ = true;
  std::vector<WeightedKey> entries;
  entries.reserve(keys_.size());
  for (Key key : keys_) entries.push_back({key, 0});
  return RankSummary(std::move(entries));
}

std::uint64_t base_buffer_size(double eps_prime) {
  if (!(eps_prime > 0.0 && eps_prime <= 1.0)) {
    throw ConfigError("summary error parameter must lie in (0, 1]");
  }
  const double inv = 1.0 / eps_prime;
  return static_cast<std::uint64_t>(
      std::ceil(inv * std::sqrt(std::log2(inv) + 1.0) - 1e-9));
}

MergeableSummaryBuilder::MergeableSummaryBuilder(double eps_prime,
                                                 OffsetSource offsets)
    : s_(base_buffer_size(eps_prime)), offsets_(std::move(offsets)) {
  pending_.reserve(s_);
}

void MergeableSummaryBuilder::insert(Key key) {
  if (finalized_) throw UsageError("summary already finalized");
  ++count_;
  pending_.push_back(key);
  if (pending_.size() == s_) {
    Buffer full{std::move(pending_), 1};
    std::sort(full.keys.begin(), full.keys.end());
    pending_ = {};
    pending_.reserve(s_);
    carry(std::move(full), 0);
  }
}

void MergeableSummaryBuilder::carry(Buffer buffer, std::size_t level) {
  while (true) {
    if (level == levels_.size()) levels_.emplace_back();
    Buffer& slot = levels_[level];
    if (slot.keys.empty()) {
      slot = std::move(buffer);
      return;
    }
    buffer = merge_subsample(slot, buffer, offsets_());
    slot = Buffer{};
    ++level;
  }
}

std::uint64_t MergeableSummaryBuilder::words() const {
  std::uint64_t words = pending_.size() + levels_.size() + 2;
  for (const Buffer& b : levels_) words += b.keys.size();
  return words;
}

RankSummary MergeableSummaryBuilder::finalize() {
  if (finalized_) throw UsageError("summary already finalized");
  finalized_ = true;
  std::vector<WeightedKey> out;
  std::vector<Key> current(pending_.begin(), pending_.end());
  std::sort(current.begin(), current.end());
  std::size_t top = levels_.size();
  while (top > 0 && levels_[top - 1].keys.empty()) --top;
  // Carry everything up to the top level; an odd leftover keeps its weight
  // so the covered count stays exact.
  for (std::size_t j = 0; j < top; ++j) {
    std::vector<Key> merged(current.size() + levels_[j].keys.size());
    std::merge(current.begin(), current.end(), levels_[j].keys.begin(),
               levels_[j].keys.end(), merged.begin());
    if (j + 1 == top) {
      current = std::move(merged);
      break;
    }
    if (merged.size() % 2 == 1) {
      out.push_back({merged.back(), static_cast<std::uint8_t>(j)});
      merged.pop_back();
    }
    current.clear();
    if (!merged.empty()) {
      const unsigned offset = offsets_();
      for (std::size_t i = offset; i < merged.size(); i += 2) {
        current.push_back(merged[i]);
      }
    }
  }
  const auto exponent = static_cast<std::uint8_t>(top == 0 ? 0 : top - 1);
  for (Key key : current) out.push_back({key, exponent});
  return RankSummary(std::move(out));
}

std::unique_ptr<SummaryBuilder> make_summary(SummaryKind kind,
                                             double eps_prime, Rng& rng) {
  if (kind == SummaryKind::kExact) {
    return std::make_unique<ExactSummaryBuilder>();
  }
  return std::make_unique<MergeableSummaryBuilder>(eps_prime,
                                                   rng_offsets(rng));
}

}  // namespace disttrack::rank
