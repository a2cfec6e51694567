#include "toothseg/error.hpp"

namespace toothseg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::KeypointOutOfBounds: return "KeypointOutOfBounds";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::EmptyMatching: return "EmptyMatching";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::SpotTouchesFullImage: return "SpotTouchesFullImage";
    case ErrorCode::EmptyStackList: return "EmptyStackList";
    case ErrorCode::NoForeground: return "NoForeground";
    case ErrorCode::NoMarkers: return "NoMarkers";
    case ErrorCode::NoKeypoints: return "NoKeypoints";
    case ErrorCode::MissingMask: return "MissingMask";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace toothseg
