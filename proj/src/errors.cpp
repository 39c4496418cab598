#include "magloc/errors.hpp"

namespace magloc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::TrajectoryOutOfBounds: return "TrajectoryOutOfBounds";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::BinMisalignment: return "BinMisalignment";
    case ErrorCode::BufferNotFull: return "BufferNotFull";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::ExcessiveSpread: return "ExcessiveSpread";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Uncalibrated: return "Uncalibrated";
    case ErrorCode::OverwriteRefused: return "OverwriteRefused";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) { return 10 + static_cast<int>(code); }

}  // namespace magloc
