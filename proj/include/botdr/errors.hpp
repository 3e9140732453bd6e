#pragma once

#include <stdexcept>
#include <string>

namespace botdr {

/// Failure categories surfaced by the library.  CLI exit codes group them:
/// config/parse/validation problems are usage errors (exit 2), everything
/// else is a runtime failure of the pipeline itself (exit 3).
enum class ErrorCode {
    NonPhysicalWidth,
    IllConditioned,
    TooFewPeaks,
    NonMonotone,
    InsufficientPoints,
    OutOfCalibratedRange,
    BranchMismatch,
    NotConverged,
    DegenerateSpectrum,
    NoDarkRegion,
    ConfigError,
    OutOfRange,
    ParseError,
    ValidationError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::NonPhysicalWidth: return "NonPhysicalWidth";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::TooFewPeaks: return "TooFewPeaks";
        case ErrorCode::NonMonotone: return "NonMonotone";
        case ErrorCode::InsufficientPoints: return "InsufficientPoints";
        case ErrorCode::OutOfCalibratedRange: return "OutOfCalibratedRange";
        case ErrorCode::BranchMismatch: return "BranchMismatch";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorCode::NoDarkRegion: return "NoDarkRegion";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

/// Is this the caller's fault (bad config/input file) rather than a
/// pipeline failure?
inline bool is_usage_error(ErrorCode c) {
    return c == ErrorCode::ConfigError || c == ErrorCode::ParseError ||
           c == ErrorCode::ValidationError;
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace botdr
