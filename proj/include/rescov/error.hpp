#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rescov {

enum class Errc {
  kInvalidArgument,
  kNonDivisibleBounds,
  kZeroMass,
  kInvalidInterval,
  kAllWeightsZero,
  kDegenerateReliability,
  kCellOccupied,
  kNotEnoughCells,
  kUnknownRobot,
  kSizeMismatch,
  kDegreeTooHigh,
  kSelectionInfeasible,
  kNotFound,
  kConflict,
  kNoPendingFailure,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kNonDivisibleBounds: return "NonDivisibleBounds";
    case Errc::kZeroMass: return "ZeroMass";
    case Errc::kInvalidInterval: return "InvalidInterval";
    case Errc::kAllWeightsZero: return "AllWeightsZero";
    case Errc::kDegenerateReliability: return "DegenerateReliability";
    case Errc::kCellOccupied: return "CellOccupied";
    case Errc::kNotEnoughCells: return "NotEnoughCells";
    case Errc::kUnknownRobot: return "UnknownRobot";
    case Errc::kSizeMismatch: return "SizeMismatch";
    case Errc::kDegreeTooHigh: return "DegreeTooHigh";
    case Errc::kSelectionInfeasible: return "SelectionInfeasible";
    case Errc::kNotFound: return "NotFound";
    case Errc::kConflict: return "Conflict";
    case Errc::kNoPendingFailure: return "NoPendingFailure";
  }
  return "Unknown";
}

/// Library error. The code identifies the failure class; what() carries a
/// human-readable diagnostic prefixed with the code name.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rescov
