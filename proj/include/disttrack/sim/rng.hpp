#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace disttrack {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; a bijection on 64-bit integers.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent substream seed from a master seed and a path of
// stream identifiers (channel, endpoint, purpose, ...).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t part : path) h = mix64(h ^ mix64(part + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t master,
                    std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

// Substream purposes; stable numbering keeps replays comparable across builds.
enum class Stream : std::uint64_t {
  kSite = 1,
  kCoordinator = 2,
  kWorkload = 3,
  kProbe = 4,
};

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

// Number of Bernoulli(p) failures before the next success. p = 0 never
// succeeds; p = 1 always does.
inline std::uint64_t draw_skip(Rng& rng, double p) {
  if (p >= 1.0) return 0;
  if (p <= 0.0) return kNever;
  return std::geometric_distribution<std::uint64_t>(p)(rng);
}

inline bool flip(Rng& rng, double p) {
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return std::bernoulli_distribution(p)(rng);
}

// Stateful Bernoulli(p) stream using geometric skip-ahead; distributionally
// identical to one independent flip per call.
class CoinStream {
 public:
  CoinStream() = default;

  void reset(Rng& rng, double p) {
    p_ = p;
    skip_ = draw_skip(rng, p);
  }

  bool next(Rng& rng) {
    if (skip_ != 0) {
      if (skip_ != kNever) --skip_;
      return false;
    }
    skip_ = draw_skip(rng, p_);
    return true;
  }

  // Consumes m flips at once. Returns the 1-based position of the last
  // success among them, or 0 if none fired.
  std::uint64_t advance(Rng& rng, std::uint64_t m) {
    std::uint64_t pos = 0, last = 0;
    while (skip_ != kNever && skip_ < m - pos) {
      pos += skip_ + 1;
      last = pos;
      skip_ = draw_skip(rng, p_);
    }
    if (skip_ != kNever) skip_ -= m - pos;
    return last;
  }

  double probability() const { return p_; }

 private:
  double p_ = 0.0;
  std::uint64_t skip_ = kNever;
};

}  // namespace disttrack
