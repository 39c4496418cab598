#ifndef MAGLOC_ERRORS_HPP
#define MAGLOC_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace magloc {

/// Every failure the library reports carries one of these codes. The CLI maps
/// each code to a distinct process exit status (see exit_code()).
enum class ErrorCode {
  DomainError,
  DegenerateGeometry,
  OutOfRange,
  TrajectoryOutOfBounds,
  NonMonotonicTimestamp,
  BinMisalignment,
  BufferNotFull,
  InsufficientSamples,
  ExcessiveSpread,
  EmptyInput,
  ConfigError,
  IoError,
  Uncalibrated,
  OverwriteRefused,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for a code. 0 is success, 1 is a command-line usage
/// error, and codes start at 10.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace magloc

#endif  // MAGLOC_ERRORS_HPP
