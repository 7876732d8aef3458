#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vitals {

enum class ErrorCode {
  InvalidArgument,
  InvalidCorner,
  EvenTaps,
  SignalTooShort,
  StateShapeMismatch,
  TooFewPoints,
  NonMonotoneX,
  NotInitialized,
  InsufficientBeats,
  TooFewGroupedPeaks,
  ThresholdNotReached,
  SourceExhausted,
  WatchdogTimeout,
  InvalidSpec,
  InfeasibleEnvelope,
  EmptyInput,
  TooFewSamples,
  MalformedHeader,
  NonUniformSampling,
  UnitMismatch,
  RateMismatch,
  MalformedRow,
  UnknownQuantity,
  InvalidConfig,
  IoError,
  Cancelled,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidCorner: return "InvalidCorner";
    case ErrorCode::EvenTaps: return "EvenTaps";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::StateShapeMismatch: return "StateShapeMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonMonotoneX: return "NonMonotoneX";
    case ErrorCode::NotInitialized: return "NotInitialized";
    case ErrorCode::InsufficientBeats: return "InsufficientBeats";
    case ErrorCode::TooFewGroupedPeaks: return "TooFewGroupedPeaks";
    case ErrorCode::ThresholdNotReached: return "ThresholdNotReached";
    case ErrorCode::SourceExhausted: return "SourceExhausted";
    case ErrorCode::WatchdogTimeout: return "WatchdogTimeout";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InfeasibleEnvelope: return "InfeasibleEnvelope";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonUniformSampling: return "NonUniformSampling";
    case ErrorCode::UnitMismatch: return "UnitMismatch";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownQuantity: return "UnknownQuantity";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Cancelled: return "Cancelled";
  }
  return "Unknown";
}

// All library failures surface as this exception; code() carries the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vitals
