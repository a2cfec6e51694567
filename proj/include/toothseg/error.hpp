#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toothseg {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  CorruptFile,
  IoError,
  InvalidArgument,
  InvalidConfig,
  DimensionMismatch,
  KeypointOutOfBounds,
  NonFiniteCost,
  EmptyMatching,
  ConstantInput,
  SpotTouchesFullImage,
  EmptyStackList,
  NoForeground,
  NoMarkers,
  NoKeypoints,
  MissingMask,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI exit codes, HTTP status mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace toothseg
