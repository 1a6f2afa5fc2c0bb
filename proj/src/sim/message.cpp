#include "disttrack/sim/message.hpp"

#include <string>

namespace disttrack {

std::string Endpoint::to_string() const {
  if (is_coordinator()) return "C";
  return "S" + std::to_string(id_);
}

std::string_view kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::kCountReport: return "COUNT_REPORT";
    case MessageKind::kDoublingReport: return "DOUBLING_REPORT";
    case MessageKind::kNbarBroadcast: return "NBAR_BROADCAST";
    case MessageKind::kPAdjustReport: return "P_ADJUST_REPORT";
    case MessageKind::kFreqReport: return "FREQ_REPORT";
    case MessageKind::kSample: return "SAMPLE";
    case MessageKind::kSplitNotify: return "SPLIT_NOTIFY";
    case MessageKind::kSummaryShip: return "SUMMARY_SHIP";
    case MessageKind::kTailSample: return "TAIL_SAMPLE";
    case MessageKind::kChunkOpen: return "CHUNK_OPEN";
    case MessageKind::kDetReport: return "DET_REPORT";
    case MessageKind::kSampleForward: return "SAMPLE_FWD";
    case MessageKind::kTauBroadcast: return "TAU_BROADCAST";
    case MessageKind::kTest: return "TEST";
  }
  return "UNKNOWN";
}

}  // namespace disttrack
