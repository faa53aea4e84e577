#include "swarmloc/error.hpp"

namespace swarmloc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kDegenerateGraph: return "degenerate-graph";
    case ErrorCode::kDegenerateAlignment: return "degenerate-alignment";
    case ErrorCode::kMergeInfeasible: return "merge-infeasible";
    case ErrorCode::kCompletionInfeasible: return "completion-infeasible";
    case ErrorCode::kPartialMap: return "partial-map";
    case ErrorCode::kDisconnected: return "disconnected";
    case ErrorCode::kStitch: return "stitch";
    case ErrorCode::kEvaluation: return "evaluation";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace swarmloc
