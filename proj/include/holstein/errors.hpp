#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace holstein {

enum class ErrorCode {
  SiteOutsideRegion,
  SubsetOutsideRegion,
  Unreachable,
  EmptyRegion,
  TruncationNotConverged,
  BasisTooLarge,
  TooManyWaypoints,
  SelectorMismatch,
  DimensionTooLarge,
  SingularShift,
  SolveNotConverged,
  GapViolated,
  InsufficientDistances,
  NonpositiveMean,
  ConfigInvalid,
  ComputeFailed,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SiteOutsideRegion: return "SiteOutsideRegion";
    case ErrorCode::SubsetOutsideRegion: return "SubsetOutsideRegion";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::TruncationNotConverged: return "TruncationNotConverged";
    case ErrorCode::BasisTooLarge: return "BasisTooLarge";
    case ErrorCode::TooManyWaypoints: return "TooManyWaypoints";
    case ErrorCode::SelectorMismatch: return "SelectorMismatch";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::SingularShift: return "SingularShift";
    case ErrorCode::SolveNotConverged: return "SolveNotConverged";
    case ErrorCode::GapViolated: return "GapViolated";
    case ErrorCode::InsufficientDistances: return "InsufficientDistances";
    case ErrorCode::NonpositiveMean: return "NonpositiveMean";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ComputeFailed: return "ComputeFailed";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace holstein
