#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "disttrack/sim/engine.hpp"
#include "disttrack/sim/rng.hpp"
#include "disttrack/workload/ground_truth.hpp"

namespace disttrack::workload {

enum class Kind { kRoundRobin, kOneWayHard, kTwoWayHard, kZipf, kRandomKeys };

std::string kind_name(Kind kind);
Kind parse_kind(const std::string& name);

struct WorkloadSpec {
  Kind kind = Kind::kRoundRobin;
  std::uint64_t n = 0;  // ignored by two_way_hard, which derives its size
  SiteId k = 1;
  std::uint64_t seed = 0;
  // one_way_hard
  std::optional<bool> force_single_site;  // true: case (a), false: case (b)
  std::optional<SiteId> force_site;
  // two_way_hard
  std::uint32_t rounds = 1;
  std::uint32_t subrounds = 1;
  std::optional<std::uint32_t> force_s;
  // zipf
  double alpha = 1.1;
  std::uint64_t universe = 100000;
};

void validate(const WorkloadSpec& spec);

// Subround of the two-way hard input: `per_site` elements to each site.
struct Subround {
  std::uint32_t round = 0;
  std::uint32_t index = 0;
  std::uint32_t s = 0;
  std::uint64_t per_site = 0;
  std::vector<SiteId> sites;
};

// Seeded arrival sequence plus incrementally maintained ground truth.
class Workload : public ArrivalSource {
 public:
  Workload(WorkloadSpec spec, TruthOptions truth = {},
           bool record_history = false);

  bool next(Arrival& arrival) override;

  const WorkloadSpec& spec() const { return spec_; }
  std::uint64_t size() const { return size_; }
  std::uint64_t emitted() const { return t_; }
  const GroundTruth& truth() const { return truth_; }
  const std::vector<Arrival>& history() const { return history_; }

  // one_way_hard metadata
  bool single_site_case() const { return single_site_; }
  SiteId chosen_site() const { return chosen_site_; }
  // two_way_hard metadata
  const std::vector<Subround>& subrounds() const { return plan_; }
  std::uint32_t sqrt_k() const { return sqrt_k_; }
  bool sqrt_k_rounded() const { return sqrt_k_rounded_; }

 private:
  Arrival generate();

  WorkloadSpec spec_;
  GroundTruth truth_;
  bool record_history_;
  std::vector<Arrival> history_;
  Rng rng_;
  std::uint64_t size_ = 0;
  std::uint64_t t_ = 0;

  bool single_site_ = false;
  SiteId chosen_site_ = 0;

  std::vector<Subround> plan_;
  std::uint32_t sqrt_k_ = 0;
  bool sqrt_k_rounded_ = false;
  std::size_t plan_pos_ = 0;
  std::size_t plan_site_ = 0;
  std::uint64_t plan_emitted_ = 0;

  std::discrete_distribution<std::uint64_t> zipf_;
  std::unordered_set<Key> seen_keys_;
};

// Convenience constructors mirroring the generator kinds.
WorkloadSpec round_robin(std::uint64_t n, SiteId k);
WorkloadSpec one_way_hard(std::uint64_t n, SiteId k, std::uint64_t seed);
WorkloadSpec two_way_hard(SiteId k, std::uint32_t rounds,
                          std::uint32_t subrounds, std::uint64_t seed);
WorkloadSpec zipf_items(std::uint64_t n, SiteId k, double alpha,
                        std::uint64_t universe, std::uint64_t seed);
WorkloadSpec random_keys(std::uint64_t n, SiteId k, std::uint64_t seed);

}  // namespace disttrack::workload
