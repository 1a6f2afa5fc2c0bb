#include "disttrack/workload/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "disttrack/error.hpp"

namespace disttrack::workload {

std::string kind_name(Kind kind) {
  switch (kind) {
    case Kind::kRoundRobin: return "round_robin";
    case Kind::kOneWayHard: return "one_way_hard";
    case Kind::kTwoWayHard: return "two_way_hard";
    case Kind::kZipf: return "zipf";
    case Kind::kRandomKeys: return "random_keys";
  }
  return "unknown";
}

Kind parse_kind(const std::string& name) {
  for (Kind kind : {Kind::kRoundRobin, Kind::kOneWayHard, Kind::kTwoWayHard,
                    Kind::kZipf, Kind::kRandomKeys}) {
    if (kind_name(kind) == name) return kind;
  }
  throw ConfigError("unknown workload kind '" + name + "'");
}

void validate(const WorkloadSpec& spec) {
  if (spec.k < 1) throw ConfigError("workload: k must be >= 1");
  switch (spec.kind) {
    case Kind::kOneWayHard:
      if (spec.force_site && *spec.force_site >= spec.k) {
        throw ConfigError("one_way_hard: forced site out of range");
      }
      break;
    case Kind::kTwoWayHard:
      if (spec.k < 16) throw ConfigError("two_way_hard requires k >= 16");
      if (spec.rounds < 1 || spec.subrounds < 1) {
        throw ConfigError("two_way_hard: rounds and subrounds must be >= 1");
      }
      if (spec.rounds > 40) throw ConfigError("two_way_hard: too many rounds");
      if (spec.force_s && *spec.force_s == 0) {
        throw ConfigError("two_way_hard: s must be >= 1");
      }
      break;
    case Kind::kZipf:
      if (!(spec.alpha > 0)) throw ConfigError("zipf: alpha must be > 0");
      if (spec.universe < 1) throw ConfigError("zipf: universe must be >= 1");
      break;
    default:
      break;
  }
}

Workload::Workload(WorkloadSpec spec, TruthOptions truth, bool record_history)
    : spec_(spec),
      truth_(truth),
      record_history_(record_history),
      rng_(make_rng(spec.seed,
                    {static_cast<std::uint64_t>(Stream::kWorkload)})) {
  validate(spec_);
  size_ = spec_.n;
  switch (spec_.kind) {
    case Kind::kOneWayHard:
      single_site_ = spec_.force_single_site ? *spec_.force_single_site
                                             : flip(rng_, 0.5);
      chosen_site_ = spec_.force_site
                         ? *spec_.force_site
                         : std::uniform_int_distribution<SiteId>(
                               0, spec_.k - 1)(rng_);
      break;
    case Kind::kTwoWayHard: {
      const double root = std::sqrt(static_cast<double>(spec_.k));
      sqrt_k_ = static_cast<std::uint32_t>(std::lround(root));
      sqrt_k_rounded_ = static_cast<double>(sqrt_k_) != root;
      std::vector<SiteId> all(spec_.k);
      std::iota(all.begin(), all.end(), 0);
      size_ = 0;
      for (std::uint32_t i = 0; i < spec_.rounds; ++i) {
        for (std::uint32_t j = 0; j < spec_.subrounds; ++j) {
          Subround sub;
          sub.round = i;
          sub.index = j;
          sub.per_site = std::uint64_t{1} << i;
          if (spec_.force_s) {
            sub.s = *spec_.force_s;
          } else {
            sub.s = flip(rng_, 0.5) ? spec_.k / 2 + sqrt_k_
                                    : spec_.k / 2 - sqrt_k_;
          }
          if (sub.s > spec_.k) throw ConfigError("two_way_hard: s > k");
          std::sample(all.begin(), all.end(), std::back_inserter(sub.sites),
                      sub.s, rng_);
          size_ += sub.per_site * sub.s;
          plan_.push_back(std::move(sub));
        }
      }
      break;
    }
    case Kind::kZipf: {
      std::vector<double> weights(spec_.universe);
      for (std::uint64_t i = 0; i < spec_.universe; ++i) {
        weights[i] = std::pow(static_cast<double>(i + 1), -spec_.alpha);
      }
      zipf_ = std::discrete_distribution<std::uint64_t>(weights.begin(),
                                                        weights.end());
      break;
    }
    case Kind::kRandomKeys:
      seen_keys_.reserve(spec_.n);
      break;
    default:
      break;
  }
  if (record_history_) history_.reserve(size_);
}

Arrival Workload::generate() {
  const SiteId rr = static_cast<SiteId>(t_ % spec_.k);
  switch (spec_.kind) {
    case Kind::kRoundRobin:
      return {rr, t_};
    case Kind::kOneWayHard:
      return {single_site_ ? chosen_site_ : rr, t_};
    case Kind::kTwoWayHard: {
      while (plan_emitted_ == plan_[plan_pos_].per_site) {
        plan_emitted_ = 0;
        if (++plan_site_ == plan_[plan_pos_].sites.size()) {
          plan_site_ = 0;
          ++plan_pos_;
        }
      }
      ++plan_emitted_;
      return {plan_[plan_pos_].sites[plan_site_], t_};
    }
    case Kind::kZipf:
      return {rr, zipf_(rng_)};
    case Kind::kRandomKeys: {
      Key key;
      do {
        key = rng_();
      } while (!seen_keys_.insert(key).second);
      return {rr, key};
    }
  }
  return {rr, t_};
}

bool Workload::next(Arrival& arrival) {
  if (t_ >= size_) return false;
  arrival = generate();
  ++t_;
  truth_.observe(arrival);
  if (record_history_) history_.push_back(arrival);
  return true;
}

WorkloadSpec round_robin(std::uint64_t n, SiteId k) {
  WorkloadSpec spec;
  spec.kind = Kind::kRoundRobin;
  spec.n = n;
  spec.k = k;
  return spec;
}

WorkloadSpec one_way_hard(std::uint64_t n, SiteId k, std::uint64_t seed) {
  WorkloadSpec spec;
  spec.kind = Kind::kOneWayHard;
  spec.n = n;
  spec.k = k;
  spec.seed = seed;
  return spec;
}

WorkloadSpec two_way_hard(SiteId k, std::uint32_t rounds,
                          std::uint32_t subrounds, std::uint64_t seed) {
  WorkloadSpec spec;
  spec.kind = Kind::kTwoWayHard;
  spec.k = k;
  spec.rounds = rounds;
  spec.subrounds = subrounds;
  spec.seed = seed;
  return spec;
}

WorkloadSpec zipf_items(std::uint64_t n, SiteId k, double alpha,
                        std::uint64_t universe, std::uint64_t seed) {
  WorkloadSpec spec;
  spec.kind = Kind::kZipf;
  spec.n = n;
  spec.k = k;
  spec.alpha = alpha;
  spec.universe = universe;
  spec.seed = seed;
  return spec;
}

WorkloadSpec random_keys(std::uint64_t n, SiteId k, std::uint64_t seed) {
  WorkloadSpec spec;
  spec.kind = Kind::kRandomKeys;
  spec.n = n;
  spec.k = k;
  spec.seed = seed;
  return spec;
}

}  // namespace disttrack::workload
