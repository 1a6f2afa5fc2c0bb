#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace disttrack {

using SiteId = std::uint32_t;
using Key = std::uint64_t;

// One party of the coordinator/k-sites model.
class Endpoint {
 public:
  static constexpr Endpoint coordinator() { return Endpoint(kCoordinatorId); }
  static constexpr Endpoint site(SiteId index) { return Endpoint(index); }

  constexpr bool is_coordinator() const { return id_ == kCoordinatorId; }
  constexpr bool is_site() const { return id_ != kCoordinatorId; }
  // Only meaningful for sites.
  constexpr SiteId index() const { return id_; }

  constexpr bool operator==(const Endpoint&) const = default;

  std::string to_string() const;

 private:
  static constexpr SiteId kCoordinatorId = UINT32_MAX;
  constexpr explicit Endpoint(SiteId id) : id_(id) {}
  SiteId id_;
};

enum class MessageKind : std::uint8_t {
  kCountReport,
  kDoublingReport,
  kNbarBroadcast,
  kPAdjustReport,
  kFreqReport,
  kSample,
  kSplitNotify,
  kSummaryShip,
  kTailSample,
  kChunkOpen,
  kDetReport,
  kSampleForward,
  kTauBroadcast,
  kTest,
};

std::string_view kind_name(MessageKind kind);

// A unit of communication. Every payload integer costs one word; headers
// (endpoints, kind, channel) are free.
struct Message {
  Endpoint from = Endpoint::coordinator();
  Endpoint to = Endpoint::coordinator();
  MessageKind kind = MessageKind::kTest;
  // Distinguishes independent protocol instances sharing one simulation,
  // e.g. the copies of a median-boosted tracker.
  std::uint16_t channel = 0;
  std::vector<std::uint64_t> payload;

  std::size_t words() const { return payload.size(); }

  bool operator==(const Message&) const = default;
};

}  // namespace disttrack
