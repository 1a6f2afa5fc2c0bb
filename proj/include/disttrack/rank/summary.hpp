#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "disttrack/sim/message.hpp"
#include "disttrack/sim/rng.hpp"

namespace disttrack::rank {

struct WeightedKey {
  Key key = 0;
  std::uint8_t exponent = 0;  // weight = 2^exponent

  std::uint64_t weight() const { return std::uint64_t{1} << exponent; }
  bool operator==(const WeightedKey&) const = default;
};

// Finalized summary: sorted weighted keys with prefix weights.
class RankSummary {
 public:
  RankSummary() = default;
  explicit RankSummary(std::vector<WeightedKey> entries);

  // Total weight of entries with key < x.
  double estimate_rank(Key x) const;
  std::uint64_t covered() const { return prefix_.empty() ? 0 : prefix_.back(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<WeightedKey>& entries() const { return entries_; }

  // Wire form: key, exponent per entry.
  std::vector<std::uint64_t> to_payload() const;
  static RankSummary from_payload(std::span<const std::uint64_t> payload);

 private:
  std::vector<WeightedKey> entries_;
  std::vector<std::uint64_t> prefix_;  // prefix_[i] = weight of entries[0..i]
};

// Source of the fair {0, 1} offsets used by subsampling merges.
using OffsetSource = std::function<unsigned()>;

OffsetSource rng_offsets(Rng& rng);

// A sorted run of keys sharing one weight.
struct Buffer {
  std::vector<Key> keys;
  std::uint64_t weight = 1;
};

// Merges two equal-weight sorted buffers and keeps every other entry from
// `offset`, doubling the weight.
Buffer merge_subsample(const Buffer& a, const Buffer& b, unsigned offset);

// One-pass summary builder (the black box A).
class SummaryBuilder {
 public:
  virtual ~SummaryBuilder() = default;
  virtual void insert(Key key) = 0;
  virtual RankSummary finalize() = 0;
  virtual std::uint64_t count() const = 0;
  // Working space in words.
  virtual std::uint64_t words() const = 0;
};

class ExactSummaryBuilder : public SummaryBuilder {
 public:
  void insert(Key key) override;
  RankSummary finalize() override;
  std::uint64_t count() const override { return keys_.size(); }
  std::uint64_t words() const override { return keys_.size() + 1; }

 private:
  std::vector<Key> keys_;
  bool finalized_ = false;
};

// Base buffer size for target error eps': ceil((1/eps') sqrt(log2(1/eps') + 1)).
std::uint64_t base_buffer_size(double eps_prime);

// Hierarchical random-offset merging: level j holds at most one full buffer
// of s keys with weight 2^j.
class MergeableSummaryBuilder : public SummaryBuilder {
 public:
  MergeableSummaryBuilder(double eps_prime, OffsetSource offsets);

  void insert(Key key) override;
  RankSummary finalize() override;
  std::uint64_t count() const override { return count_; }
  std::uint64_t words() const override;

  std::uint64_t buffer_size() const { return s_; }
  std::size_t levels() const { return levels_.size(); }

 private:
  void carry(Buffer buffer, std::size_t level);

  std::uint64_t s_;
  OffsetSource offsets_;
  std::vector<Key> pending_;
  std::vector<Buffer> levels_;  // empty keys = vacant level
  std::uint64_t count_ = 0;
  bool finalized_ = false;
};

enum class SummaryKind { kMergeable, kExact };

std::unique_ptr<SummaryBuilder> make_summary(SummaryKind kind,
                                             double eps_prime, Rng& rng);

}  // namespace disttrack::rank
