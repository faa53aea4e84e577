#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace swarmloc {

enum class ErrorCode {
  kConfig,
  kUsage,
  kDegenerateGraph,
  kDegenerateAlignment,
  kMergeInfeasible,
  kCompletionInfeasible,
  kPartialMap,
  kDisconnected,
  kStitch,
  kEvaluation,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code is
/// stable and is what sweeps record in their status column.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by map merging when some clusters cannot be reached from the
/// reference cluster through measured links.
class PartialMapError : public Error {
 public:
  PartialMapError(std::vector<Eigen::Index> stranded, const std::string& message)
      : Error(ErrorCode::kPartialMap, message), stranded_(std::move(stranded)) {}

  const std::vector<Eigen::Index>& stranded() const noexcept { return stranded_; }

 private:
  std::vector<Eigen::Index> stranded_;
};

}  // namespace swarmloc
